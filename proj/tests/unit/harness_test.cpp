#include "activemocap/harness.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

#include "activemocap/errors.hpp"

namespace activemocap {
namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("activemocap_harness_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig quick(const std::string& policy, const std::string& sequence, int frames) {
  ExperimentConfig c;
  c.set("policy", policy);
  c.set("sequence", sequence);
  c.set("frames", std::to_string(frames));
  c.set("calibration_frames", "18");
  return c;
}

TEST(ConfigTest, KeyValueRoundTrip) {
  ExperimentConfig a;
  a.set("mode", "flight");
  a.set("policy", "constant_rotation_ccw");
  a.set("sigma_2d", "1.5");
  a.set("seed", "12");
  a.set("no_flight_model", "true");
  ExperimentConfig b;
  for (const auto& [k, v] : a.to_key_values()) b.set(k, v);
  EXPECT_EQ(a.to_key_values(), b.to_key_values());
  EXPECT_EQ(b.mode, Mode::kFlight);
  EXPECT_EQ(b.policy, Policy::kConstantRotationCcw);
  EXPECT_EQ(b.noise.sigma_2d, 1.5);
  EXPECT_EQ(b.noise.seed, 12u);
  EXPECT_TRUE(b.no_flight_model);
  EXPECT_EQ(b.effective_k_past(), 6);
  EXPECT_EQ(b.effective_horizon(), 3);
  EXPECT_EQ(ExperimentConfig{}.effective_k_past(), 2);
  EXPECT_EQ(ExperimentConfig{}.effective_horizon(), 1);
  std::vector<std::string> keys;
  for (const auto& kv : a.to_key_values()) keys.push_back(kv.first);
  EXPECT_EQ(keys, ExperimentConfig::keys());
}

TEST(ConfigTest, RejectsBadInput) {
  ExperimentConfig c;
  EXPECT_THROW(c.set("no_such_key", "1"), ConfigError);
  EXPECT_THROW(c.set("frames", "ten"), ConfigError);
  EXPECT_THROW(c.set("mode", "hover"), ConfigError);
  EXPECT_THROW(c.set("policy", "greedy"), ConfigError);
  c.set("ring_radius", "-1");
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ConfigTest, LoadsCommentedFile) {
  const auto dir = scratch_dir("config");
  std::ofstream(dir / "run.cfg") << "# experiment\nmode = fixed_cameras\n\n  frames=30  # short\n";
  const ExperimentConfig c = load_config(dir / "run.cfg");
  EXPECT_EQ(c.mode, Mode::kFixedCameras);
  EXPECT_EQ(c.frames, 30);
  std::ofstream(dir / "bad.cfg") << "frames 30\n";
  EXPECT_THROW(load_config(dir / "bad.cfg"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.cfg"), IoError);
  std::filesystem::remove_all(dir);
}

TEST(ConfigTest, ParsesEnumNames) {
  for (Mode m : {Mode::kTeleport, Mode::kFixedCameras, Mode::kFlight}) {
    EXPECT_EQ(parse_mode(to_string(m)), m);
  }
  for (Policy p : {Policy::kActive, Policy::kRandom, Policy::kConstantRotationCw,
                   Policy::kConstantRotationCcw, Policy::kConstantAngle, Policy::kOracle}) {
    EXPECT_EQ(parse_policy(to_string(p)), p);
  }
}

TEST(SequenceTest, BuildsEverySource) {
  ExperimentConfig c;
  c.frames = 30;
  for (const char* s : {"walk", "circle_run", "twirl", "static"}) {
    c.sequence = s;
    const MotionSequence seq = make_sequence(c);
    EXPECT_EQ(seq.size(), 30u);
    EXPECT_EQ(seq.fps, 5.0);
  }
  const auto dir = scratch_dir("seq");
  c.sequence = "walk";
  save_sequence_csv(make_sequence(c), dir / "walk.csv");
  c.sequence = "csv:" + (dir / "walk.csv").string();
  c.frames = 10;
  EXPECT_EQ(make_sequence(c).size(), 10u);
  c.sequence = "moonwalk";
  EXPECT_THROW(make_sequence(c), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(FixedRigTest, FourteenCamerasSeeTheOrigin) {
  const auto rig = fixed_camera_rig();
  EXPECT_EQ(rig.size(), 14u);
}

TEST(RunTest, OracleOnNoiselessStaticSubjectIsNearExact) {
  ExperimentConfig c = quick("oracle", "static", 20);
  c.set("sigma_2d", "0");
  c.set("sigma_3d", "0");
  const RunResult r = run_experiment(c);
  EXPECT_LT(r.mean_mpjpe, 0.02);
}

TEST(RunTest, RecordCountAndFields) {
  const ExperimentConfig c = quick("constant_rotation_cw", "walk", 15);
  const RunResult r = run_experiment(c);
  ASSERT_EQ(r.frames.size(), static_cast<std::size_t>(15 - 2));
  for (std::size_t i = 0; i < r.frames.size(); ++i) {
    const FrameRecord& f = r.frames[i];
    EXPECT_EQ(f.cycle, static_cast<int>(i) + 2);
    EXPECT_EQ(f.frame, f.cycle - 1);
    EXPECT_GE(f.mpjpe, 0.0);
    EXPECT_NEAR(f.subject_distance, 7.0, 1.5);
  }
  EXPECT_EQ(r.calibration.size(), 14u);
}

TEST(RunTest, RotationDirectionsCircleOppositeWays) {
  const RunResult cw = run_experiment(quick("constant_rotation_cw", "static", 6));
  const RunResult ccw = run_experiment(quick("constant_rotation_ccw", "static", 6));
  const auto az = [](const FrameRecord& f) { return std::atan2(f.camera_position.y(), f.camera_position.x()); };
  const auto turn = [&](const RunResult& r) {
    return std::remainder(az(r.frames[1]) - az(r.frames[0]), 2.0 * 3.141592653589793);
  };
  EXPECT_LT(turn(cw), 0.0);
  EXPECT_GT(turn(ccw), 0.0);
}

TEST(RunTest, DeterministicExports) {
  ExperimentConfig c = quick("active", "circle_run", 8);
  c.rollout_all = true;
  const auto a = scratch_dir("det_a");
  const auto b = scratch_dir("det_b");
  export_result(run_experiment(c), a);
  export_result(run_experiment(c), b);
  for (const char* f : {"frames.csv", "candidates.csv", "manifest"}) {
    EXPECT_FALSE(slurp(a / f).empty()) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST(RunTest, ConstantAngleLosesToActiveOnCircleRun) {
  ExperimentConfig active = quick("active", "circle_run", 120);
  active.calibration_frames = 100;
  ExperimentConfig angle = active;
  angle.policy = Policy::kConstantAngle;
  EXPECT_GT(run_experiment(angle).mean_mpjpe, run_experiment(active).mean_mpjpe);
}

TEST(RunTest, FlightKeepsStandoffDistanceAroundTwirl) {
  ExperimentConfig c = quick("constant_rotation_ccw", "twirl", 60);
  c.mode = Mode::kFlight;
  const RunResult r = run_experiment(c);
  for (const FrameRecord& f : r.frames) {
    EXPECT_GT(f.subject_distance, 7.0 * 0.8) << "cycle " << f.cycle;
    EXPECT_LT(f.subject_distance, 7.0 * 1.2) << "cycle " << f.cycle;
    EXPECT_GE(f.camera_position.z(), 0.25);
    EXPECT_LE(f.camera_position.z(), 3.5);
  }
}

TEST(SweepTest, RowsAggregateSeeds) {
  const std::vector<ExperimentConfig> configs = {quick("random", "walk", 8),
                                                 quick("constant_rotation_cw", "walk", 8)};
  const SweepOutput out = sweep(configs, {0, 1, 2});
  ASSERT_EQ(out.summary.size(), 2u);
  ASSERT_EQ(out.runs.size(), 6u);
  for (std::size_t row = 0; row < 2; ++row) {
    const SummaryRow& s = out.summary[row];
    EXPECT_EQ(s.runs, 3);
    double mean = 0.0;
    for (std::size_t i = 0; i < 3; ++i) mean += out.runs[3 * row + i].mean_mpjpe / 3.0;
    double var = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      var += std::pow(out.runs[3 * row + i].mean_mpjpe - mean, 2) / 2.0;
    }
    EXPECT_NEAR(s.mean, mean, 1e-12);
    EXPECT_NEAR(s.std, std::sqrt(var), 1e-12);
  }
  EXPECT_EQ(out.summary[0].policy, "random");
  EXPECT_EQ(out.summary[1].policy, "constant_rotation_cw");

  const auto dir = scratch_dir("summary");
  write_summary_csv(out.summary, dir / "summary.csv");
  const auto back = load_summary_csv(dir / "summary.csv");
  ASSERT_EQ(back.size(), out.summary.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].policy, out.summary[i].policy);
    EXPECT_EQ(back[i].variant, out.summary[i].variant);
    EXPECT_EQ(back[i].runs, out.summary[i].runs);
    EXPECT_EQ(back[i].mean, out.summary[i].mean);
    EXPECT_EQ(back[i].std, out.summary[i].std);
  }
  std::filesystem::remove_all(dir);
}

TEST(ExportTest, UnwritableDirectoryIsIoError) {
  const RunResult r = run_experiment(quick("random", "static", 4));
  EXPECT_THROW(export_result(r, "/proc/activemocap/out"), IoError);
}

}  // namespace
}  // namespace activemocap
