#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "activemocap/estimator.hpp"
#include "activemocap/geometry.hpp"
#include "activemocap/motion.hpp"
#include "activemocap/planner.hpp"
#include "activemocap/sensing.hpp"

namespace activemocap {

enum class Mode { kTeleport, kFixedCameras, kFlight };
enum class Policy {
  kActive,
  kRandom,
  kConstantRotationCw,
  kConstantRotationCcw,
  kConstantAngle,
  kOracle
};

std::string to_string(Mode m);
std::string to_string(Policy p);
Mode parse_mode(const std::string& s);
Policy parse_policy(const std::string& s);

struct ExperimentConfig {
  Mode mode = Mode::kTeleport;
  Policy policy = Policy::kActive;
  // walk | circle_run | twirl | static | csv:<path>
  std::string sequence = "walk";
  int frames = 120;
  double rate = 5.0;
  double walk_speed = 1.2;
  double circle_radius = 3.0;
  double circle_angular_speed = 0.6;
  double twirl_angular_speed = 1.0;

  NoiseModel noise;
  double scale_corruption = 1.0;
  EnergyWeights reconstruction = EnergyWeights::reconstruction();
  EnergyWeights decision = EnergyWeights::decision();
  Intrinsics intrinsics;

  // -1 selects the mode default (teleport/fixed: 2 and 1; flight: 6 and 3).
  int k_past = -1;
  int horizon = -1;
  double ring_radius = 7.0;
  int ring_count = 18;
  double ring_height = 1.5;
  double min_altitude = 0.25;
  double max_altitude = 3.5;
  int calibration_frames = 100;

  DescentOptions descent;
  UncertaintyOptions uncertainty;

  double drone_beta = 0.7;
  int flight_log_steps = 300;
  bool no_flight_model = false;   // ablation: uniform candidate sampling
  bool report_current_frame = false;
  // Score and roll out every candidate each cycle for the candidates dump.
  bool rollout_all = false;

  int effective_k_past() const;
  int effective_horizon() const;
  void validate() const;

  // Ordered key/value view used for config files and the run manifest.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  void set(const std::string& key, const std::string& value);
  static std::vector<std::string> keys();
};

ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base = {});

MotionSequence make_sequence(const ExperimentConfig& cfg);

// The fixed-camera rig: 14 cameras at varied distances aimed at the origin.
std::vector<CameraPose> fixed_camera_rig();

struct FrameRecord {
  int cycle = 0;          // frame acquired in this control cycle
  int frame = 0;          // frame whose error is reported
  int candidate = 0;      // candidate the camera used for `cycle`
  std::string label;
  double uncertainty = 0.0;  // score of that candidate when it was chosen
  double mpjpe = 0.0;
  double current_mpjpe = 0.0;
  Eigen::Vector3d camera_position = Eigen::Vector3d::Zero();
  double subject_distance = 0.0;
};

struct CandidateRecord {
  int cycle = 0;
  int candidate = 0;
  std::string label;
  double azimuth = 0.0;
  double elevation = 0.0;
  double score = 0.0;
  double realized_error = 0.0;  // NaN when no rollout ran
  bool visible = true;
};

struct RunResult {
  ExperimentConfig config;
  BoneLengths calibration;
  std::vector<FrameRecord> frames;
  std::vector<CandidateRecord> candidates;
  double mean_mpjpe = 0.0;
  double std_mpjpe = 0.0;
  double seconds = 0.0;  // wall time; not exported
};

RunResult run_experiment(const ExperimentConfig& cfg);

// Runs the calibration stage only.
CalibrationResult run_calibration(const ExperimentConfig& cfg,
                                  const MotionSequence& seq);

struct SummaryRow {
  std::string sequence;
  std::string mode;
  std::string policy;
  std::string variant;
  int runs = 0;
  double mean = 0.0;
  double std = 0.0;  // across runs (sample standard deviation)
};

struct SweepOutput {
  std::vector<SummaryRow> summary;
  std::vector<RunResult> runs;
};

// Each config is run once per seed; rows aggregate runs that share
// (sequence, mode, policy, variant).
SweepOutput sweep(const std::vector<ExperimentConfig>& configs,
                  const std::vector<std::uint64_t>& seeds);

std::string variant_name(const ExperimentConfig& cfg);

void write_frames_csv(const RunResult& r, const std::filesystem::path& path);
void write_candidates_csv(const RunResult& r, const std::filesystem::path& path);
void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& path);
void write_summary_csv(const std::vector<SummaryRow>& rows,
                       const std::filesystem::path& path);
std::vector<SummaryRow> load_summary_csv(const std::filesystem::path& path);

// frames.csv, candidates.csv and manifest into `dir`.
void export_result(const RunResult& r, const std::filesystem::path& dir);

}  // namespace activemocap
