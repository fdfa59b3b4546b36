#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "activemocap/errors.hpp"
#include "activemocap/flight_model.hpp"
#include "activemocap/geometry.hpp"
#include "activemocap/harness.hpp"
#include "activemocap/motion.hpp"
#include "activemocap/planner.hpp"
#include "activemocap/skeleton.hpp"

namespace py = pybind11;
using namespace activemocap;

namespace {

Pose to_pose(const JointMatrix& j) { return Pose(j); }

std::vector<JointMatrix> frames_of(const MotionSequence& s) {
  std::vector<JointMatrix> out;
  out.reserve(s.size());
  for (const Pose& p : s.frames) out.push_back(p.joints);
  return out;
}

std::vector<double> lengths_of(const BoneLengths& l) {
  return std::vector<double>(l.lengths.begin(), l.lengths.end());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Active viewpoint selection for simulated motion capture";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<SubjectNotVisible>(m, "SubjectNotVisible", base.ptr());
  py::register_exception<NoVisibleCandidate>(m, "NoVisibleCandidate", base.ptr());
  py::register_exception<NonPositiveDepth>(m, "NonPositiveDepth", base.ptr());
  py::register_exception<DegenerateLookAt>(m, "DegenerateLookAt", base.ptr());
  py::register_exception<TopologyError>(m, "TopologyError", base.ptr());
  py::register_exception<DegenerateDetection>(m, "DegenerateDetection", base.ptr());
  py::register_exception<DivergedError>(m, "DivergedError", base.ptr());
  py::register_exception<InsufficientViews>(m, "InsufficientViews", base.ptr());
  py::register_exception<NumericalFailure>(m, "NumericalFailure", base.ptr());
  py::register_exception<DegenerateLog>(m, "DegenerateLog", base.ptr());

  m.attr("NUM_JOINTS") = kNumJoints;

  // Skeleton
  m.def("template_pose", [] { return template_pose().joints; },
        "Standing template skeleton as a (15, 3) array.");
  m.def("joint_names", [] {
    std::vector<std::string> out;
    for (int j = 0; j < kNumJoints; ++j) out.emplace_back(joint_name(j));
    return out;
  });
  m.def("bones", [] {
    std::vector<std::pair<int, int>> out;
    for (const Bone& b : BoneTopology::standard().bones()) out.emplace_back(b.parent, b.child);
    return out;
  });
  m.def("bone_lengths", [](const JointMatrix& j) {
    return lengths_of(compute_bone_lengths(to_pose(j), BoneTopology::standard()));
  });
  m.def("mpjpe", [](const JointMatrix& a, const JointMatrix& b) {
    return mpjpe(to_pose(a), to_pose(b));
  });

  // Geometry
  py::class_<Intrinsics>(m, "Intrinsics")
      .def(py::init<>())
      .def_readwrite("fx", &Intrinsics::fx)
      .def_readwrite("fy", &Intrinsics::fy)
      .def_readwrite("cx", &Intrinsics::cx)
      .def_readwrite("cy", &Intrinsics::cy)
      .def_readwrite("width", &Intrinsics::width)
      .def_readwrite("height", &Intrinsics::height);

  py::class_<CameraPose>(m, "CameraPose")
      .def(py::init<>())
      .def_readwrite("position", &CameraPose::position)
      .def_readwrite("world_to_camera", &CameraPose::world_to_camera)
      .def("optical_axis", &CameraPose::optical_axis);

  m.def("look_at", &look_at, py::arg("position"), py::arg("target"),
        py::arg("up") = Eigen::Vector3d::UnitZ());
  m.def("project",
        [](const JointMatrix& j, const CameraPose& cam, const Intrinsics& k) {
          return project(to_pose(j), cam, k);
        },
        py::arg("joints"), py::arg("camera"), py::arg("intrinsics") = Intrinsics{});

  // Motion
  m.def("synth_walk", [](int n, double speed, double rate) {
    return frames_of(synth_walk(n, speed, rate));
  }, py::arg("n_frames"), py::arg("speed") = 1.2, py::arg("rate") = 5.0);
  m.def("synth_circle_run", [](int n, double radius, double w, double rate) {
    return frames_of(synth_circle_run(n, radius, w, rate));
  }, py::arg("n_frames"), py::arg("radius") = 3.0, py::arg("angular_speed") = 0.6,
     py::arg("rate") = 5.0);
  m.def("synth_twirl_in_place", [](int n, double w, double rate) {
    return frames_of(synth_twirl_in_place(n, w, rate));
  }, py::arg("n_frames"), py::arg("angular_speed") = 1.0, py::arg("rate") = 5.0);
  m.def("load_sequence_csv", [](const std::filesystem::path& p) {
    const MotionSequence s = load_sequence_csv(p);
    return py::make_tuple(frames_of(s), s.fps);
  });
  m.def("save_sequence_csv",
        [](const std::vector<JointMatrix>& frames, double fps, const std::filesystem::path& p) {
          std::vector<Pose> poses;
          for (const JointMatrix& j : frames) poses.emplace_back(j);
          save_sequence_csv(MotionSequence(std::move(poses), fps, "python"), p);
        });

  // Uncertainty
  m.def("uncertainty_score",
        [](const Eigen::MatrixXd& h, double floor, int begin, int size) {
          return uncertainty_from_hessian(h, floor, begin, size).score;
        },
        py::arg("hessian"), py::arg("floor") = 1e-6, py::arg("block_begin") = 0,
        py::arg("block_size") = 0,
        "Trace of the Laplace covariance implied by a Hessian.");

  // Flight model
  py::class_<FlightModelParams>(m, "FlightModelParams")
      .def(py::init<>())
      .def_readwrite("dt", &FlightModelParams::dt)
      .def_readwrite("alpha", &FlightModelParams::alpha)
      .def_readwrite("a_input_magnitude", &FlightModelParams::a_input_magnitude)
      .def_readwrite("v_max", &FlightModelParams::v_max);
  py::class_<DroneKinematicState>(m, "DroneKinematicState")
      .def(py::init<>())
      .def_readwrite("position", &DroneKinematicState::position)
      .def_readwrite("velocity", &DroneKinematicState::velocity)
      .def_readwrite("a_previous", &DroneKinematicState::a_previous);
  m.def("predict_step", &predict_step);
  m.def("predict_trajectory", &predict_trajectory, py::arg("state"), py::arg("direction"),
        py::arg("params"), py::arg("steps") = 3);
  m.def("fit_flight_log", [](const std::filesystem::path& p, double dt) {
    return fit_params(load_flight_log_csv(p), dt);
  }, py::arg("path"), py::arg("dt") = 0.2);

  // Experiments
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def("set", &ExperimentConfig::set)
      .def("get", [](const ExperimentConfig& c, const std::string& key) {
        for (const auto& [k, v] : c.to_key_values()) {
          if (k == key) return v;
        }
        throw ConfigError("unknown config key '" + key + "'");
      })
      .def("to_dict", [](const ExperimentConfig& c) {
        py::dict d;
        for (const auto& [k, v] : c.to_key_values()) d[py::str(k)] = v;
        return d;
      })
      .def("validate", &ExperimentConfig::validate)
      .def_static("keys", &ExperimentConfig::keys)
      .def_static("load", [](const std::filesystem::path& p) { return load_config(p); });

  py::class_<FrameRecord>(m, "FrameRecord")
      .def_readonly("cycle", &FrameRecord::cycle)
      .def_readonly("frame", &FrameRecord::frame)
      .def_readonly("candidate", &FrameRecord::candidate)
      .def_readonly("label", &FrameRecord::label)
      .def_readonly("uncertainty", &FrameRecord::uncertainty)
      .def_readonly("mpjpe", &FrameRecord::mpjpe)
      .def_readonly("current_mpjpe", &FrameRecord::current_mpjpe)
      .def_readonly("camera_position", &FrameRecord::camera_position)
      .def_readonly("subject_distance", &FrameRecord::subject_distance);

  py::class_<CandidateRecord>(m, "CandidateRecord")
      .def_readonly("cycle", &CandidateRecord::cycle)
      .def_readonly("candidate", &CandidateRecord::candidate)
      .def_readonly("label", &CandidateRecord::label)
      .def_readonly("azimuth", &CandidateRecord::azimuth)
      .def_readonly("elevation", &CandidateRecord::elevation)
      .def_readonly("score", &CandidateRecord::score)
      .def_readonly("realized_error", &CandidateRecord::realized_error)
      .def_readonly("visible", &CandidateRecord::visible);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("config", &RunResult::config)
      .def_property_readonly("calibration",
                             [](const RunResult& r) { return lengths_of(r.calibration); })
      .def_readonly("frames", &RunResult::frames)
      .def_readonly("candidates", &RunResult::candidates)
      .def_readonly("mean_mpjpe", &RunResult::mean_mpjpe)
      .def_readonly("std_mpjpe", &RunResult::std_mpjpe)
      .def_readonly("seconds", &RunResult::seconds)
      .def("export", [](const RunResult& r, const std::filesystem::path& dir) {
        export_result(r, dir);
      });

  py::class_<SummaryRow>(m, "SummaryRow")
      .def_readonly("sequence", &SummaryRow::sequence)
      .def_readonly("mode", &SummaryRow::mode)
      .def_readonly("policy", &SummaryRow::policy)
      .def_readonly("variant", &SummaryRow::variant)
      .def_readonly("runs", &SummaryRow::runs)
      .def_readonly("mean", &SummaryRow::mean)
      .def_readonly("std", &SummaryRow::std);

  m.def("run_experiment", &run_experiment, py::call_guard<py::gil_scoped_release>());
  m.def("sweep",
        [](const std::vector<ExperimentConfig>& configs, const std::vector<std::uint64_t>& seeds) {
          SweepOutput s;
          {
            py::gil_scoped_release release;
            s = sweep(configs, seeds);
          }
          return py::make_tuple(s.summary, s.runs);
        });
  m.def("write_summary_csv", &write_summary_csv);
  m.def("load_summary_csv", &load_summary_csv);
}
