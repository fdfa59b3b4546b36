#include "activemocap/motion.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "activemocap/csv.hpp"
#include "activemocap/errors.hpp"

namespace activemocap {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHipHeight = 0.95;

// Limb articulation angles (radians) for one frame, in the body frame.
struct Articulation {
  double left_thigh = 0.0, left_knee = 0.0;
  double right_thigh = 0.0, right_knee = 0.0;
  double left_arm = 0.0, left_forearm = 0.0;
  double right_arm = 0.0, right_forearm = 0.0;
  // Sideways arm raise about the body forward axis.
  double arm_raise = 0.0;
};

// Rotates the chain root->mid->end of the template about `axis` through the
// root: the first segment by `a1`, the second by `a1 + a2`. Keeps segment
// lengths exact.
void swing_chain(const JointMatrix& rest, JointMatrix& out, int root, int mid,
                 int end, const Eigen::Vector3d& axis, double a1, double a2) {
  const Eigen::Matrix3d r1 = Eigen::AngleAxisd(a1, axis).toRotationMatrix();
  const Eigen::Matrix3d r2 = Eigen::AngleAxisd(a1 + a2, axis).toRotationMatrix();
  const Eigen::Vector3d root_p = out.row(root).transpose();
  const Eigen::Vector3d seg1 = (rest.row(mid) - rest.row(root)).transpose();
  const Eigen::Vector3d seg2 = (rest.row(end) - rest.row(mid)).transpose();
  const Eigen::Vector3d mid_p = root_p + r1 * seg1;
  out.row(mid) = mid_p.transpose();
  out.row(end) = (mid_p + r2 * seg2).transpose();
}

JointMatrix articulate(const Articulation& a) {
  const JointMatrix rest = template_pose().joints;
  JointMatrix body = rest;
  const Eigen::Vector3d lateral = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d forward = Eigen::Vector3d::UnitX();
  swing_chain(rest, body, kLeftHip, kLeftKnee, kLeftAnkle, lateral,
              a.left_thigh, a.left_knee);
  swing_chain(rest, body, kRightHip, kRightKnee, kRightAnkle, lateral,
              a.right_thigh, a.right_knee);
  // Arms: raise sideways first, then swing in the sagittal plane.
  JointMatrix raised = rest;
  swing_chain(rest, raised, kLeftShoulder, kLeftElbow, kLeftWrist, forward,
              -a.arm_raise, 0.0);
  swing_chain(rest, raised, kRightShoulder, kRightElbow, kRightWrist, forward,
              a.arm_raise, 0.0);
  swing_chain(raised, body, kLeftShoulder, kLeftElbow, kLeftWrist, lateral,
              a.left_arm, a.left_forearm);
  swing_chain(raised, body, kRightShoulder, kRightElbow, kRightWrist, lateral,
              a.right_arm, a.right_forearm);
  return body;
}

// Places a body-frame skeleton in the world: yaw `heading` about +z, hip at
// `hip_xy` on the ground plane.
Pose place(const JointMatrix& body, double heading,
           const Eigen::Vector2d& hip_xy) {
  const Eigen::Matrix3d yaw =
      Eigen::AngleAxisd(heading, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Vector3d hip_body(0.0, 0.0, kHipHeight);
  const Eigen::Vector3d hip_world(hip_xy.x(), hip_xy.y(), kHipHeight);
  Pose out;
  for (int j = 0; j < kNumJoints; ++j) {
    out.joints.row(j) =
        (yaw * (body.row(j).transpose() - hip_body) + hip_world).transpose();
  }
  return out;
}

Articulation gait(double phase, double amplitude) {
  const double s = std::sin(phase);
  Articulation a;
  a.left_thigh = amplitude * s;
  a.right_thigh = -amplitude * s;
  // Knees only flex backwards.
  a.left_knee = -amplitude * 1.2 * std::max(0.0, -std::cos(phase));
  a.right_knee = -amplitude * 1.2 * std::max(0.0, std::cos(phase));
  a.left_arm = -0.8 * amplitude * s;
  a.right_arm = 0.8 * amplitude * s;
  a.left_forearm = 0.3 * amplitude;
  a.right_forearm = 0.3 * amplitude;
  return a;
}

void require_frames(int n_frames, double rate) {
  if (n_frames < 2) throw ConfigError("a motion needs at least 2 frames");
  if (!(rate > 0.0)) throw ConfigError("frame rate must be positive");
}

}  // namespace

MotionSequence::MotionSequence(std::vector<Pose> f, double rate, std::string n)
    : frames(std::move(f)), fps(rate), name(std::move(n)) {
  if (frames.size() < 2) {
    throw TopologyError("a motion sequence needs at least 2 frames");
  }
  for (const Pose& p : frames) {
    if (!p.is_finite()) throw ParseError("non-finite joint coordinate");
  }
}

double MotionSequence::max_bone_drift(const BoneTopology& topo) const {
  const BoneLengths ref = compute_bone_lengths(frames.front(), topo);
  double drift = 0.0;
  for (const Pose& p : frames) {
    const BoneLengths cur = compute_bone_lengths(p, topo);
    for (std::size_t b = 0; b < cur.size(); ++b) {
      drift = std::max(drift, std::abs(cur[b] - ref[b]));
    }
  }
  return drift;
}

MotionSequence load_sequence_csv(const std::filesystem::path& path,
                                 double max_bone_drift) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  constexpr std::size_t kColumns = 2 + kPoseDim;
  if (csv::split(line).size() != kColumns) {
    throw ParseError(path.string() + ": header must have " +
                     std::to_string(kColumns) + " columns");
  }
  std::vector<Pose> frames;
  double fps = 0.0;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = csv::split(line);
    if (cells.size() != kColumns) {
      throw ParseError(path.string() + ":" + std::to_string(row) + ": expected " +
                       std::to_string(kColumns) + " columns, got " +
                       std::to_string(cells.size()));
    }
    try {
      fps = csv::parse_double(cells[1]);
      Pose p;
      for (int c = 0; c < kPoseDim; ++c) {
        p.joints.data()[c] = csv::parse_double(cells[2 + c]);
      }
      frames.push_back(p);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(row) + ": " + e.what());
    }
  }
  std::string name = path.stem().string();
  MotionSequence seq(std::move(frames), fps, std::move(name));
  if (!(seq.fps > 0.0)) throw ParseError(path.string() + ": fps must be positive");
  const double drift = seq.max_bone_drift();
  if (drift > max_bone_drift) {
    throw TopologyError(path.string() + ": bone length drift " +
                        std::to_string(drift) + " m exceeds tolerance");
  }
  return seq;
}

void save_sequence_csv(const MotionSequence& seq,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "frame,fps";
  for (int j = 0; j < kNumJoints; ++j) {
    for (const char* axis : {"x", "y", "z"}) out << ",j" << j << '_' << axis;
  }
  out << '\n';
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    out << i << ',' << csv::format_double(seq.fps);
    for (int c = 0; c < kPoseDim; ++c) {
      out << ',' << csv::format_double(seq.frames[i].joints.data()[c]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

MotionSequence synth_walk(int n_frames, double speed, double rate) {
  require_frames(n_frames, rate);
  std::vector<Pose> frames;
  for (int i = 0; i < n_frames; ++i) {
    const double t = i / rate;
    const JointMatrix body = articulate(gait(2.0 * kPi * 0.9 * t, 0.45));
    frames.push_back(place(body, 0.0, {speed * t, 0.0}));
  }
  return {std::move(frames), rate, "walk"};
}

MotionSequence synth_circle_run(int n_frames, double radius,
                                double angular_speed, double rate) {
  require_frames(n_frames, rate);
  std::vector<Pose> frames;
  for (int i = 0; i < n_frames; ++i) {
    const double t = i / rate;
    const double theta = angular_speed * t;
    Articulation a = gait(2.0 * kPi * 1.4 * t, 0.7);
    a.left_forearm = a.right_forearm = -1.2;
    const JointMatrix body = articulate(a);
    const double heading = theta + (angular_speed >= 0.0 ? 0.5 : -0.5) * kPi;
    frames.push_back(
        place(body, heading, {radius * std::cos(theta), radius * std::sin(theta)}));
  }
  return {std::move(frames), rate, "circle_run"};
}

MotionSequence synth_twirl_in_place(int n_frames, double angular_speed,
                                    double rate) {
  require_frames(n_frames, rate);
  std::vector<Pose> frames;
  for (int i = 0; i < n_frames; ++i) {
    const double t = i / rate;
    Articulation a;
    a.arm_raise = 1.2 + 0.3 * std::sin(2.0 * kPi * 0.5 * t);
    a.left_forearm = 0.4 * std::sin(2.0 * kPi * 0.7 * t);
    a.right_forearm = -a.left_forearm;
    a.left_thigh = 0.15 * std::sin(2.0 * kPi * 0.5 * t);
    a.right_thigh = -a.left_thigh;
    frames.push_back(place(articulate(a), angular_speed * t, {0.0, 0.0}));
  }
  return {std::move(frames), rate, "twirl"};
}

MotionSequence synth_static(int n_frames, double rate) {
  require_frames(n_frames, rate);
  return {std::vector<Pose>(static_cast<std::size_t>(n_frames), template_pose()),
          rate, "static"};
}

}  // namespace activemocap
