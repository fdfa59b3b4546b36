#include "activemocap/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "activemocap/csv.hpp"
#include "activemocap/errors.hpp"
#include "activemocap/flight_model.hpp"

namespace activemocap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Config key table.

std::string fmt(double v) { return csv::format_double(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename T>
Field field(const char* key, T ExperimentConfig::*member) {
  return {key, [member](const ExperimentConfig& c) { return fmt(c.*member); },
          [member](ExperimentConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>) {
              c.*member = parse_bool(v);
            } else if constexpr (std::is_same_v<T, int>) {
              c.*member = static_cast<int>(csv::parse_int(v));
            } else {
              c.*member = csv::parse_double(v);
            }
          }};
}

template <typename S, typename T>
Field nested(const char* key, S ExperimentConfig::*outer, T S::*inner) {
  return {key,
          [outer, inner](const ExperimentConfig& c) { return fmt(c.*outer.*inner); },
          [outer, inner](ExperimentConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>) {
              c.*outer.*inner = parse_bool(v);
            } else if constexpr (std::is_same_v<T, int>) {
              c.*outer.*inner = static_cast<int>(csv::parse_int(v));
            } else {
              c.*outer.*inner = csv::parse_double(v);
            }
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"mode", [](const ExperimentConfig& c) { return to_string(c.mode); },
                 [](ExperimentConfig& c, const std::string& v) { c.mode = parse_mode(v); }});
    f.push_back({"policy", [](const ExperimentConfig& c) { return to_string(c.policy); },
                 [](ExperimentConfig& c, const std::string& v) { c.policy = parse_policy(v); }});
    f.push_back({"sequence", [](const ExperimentConfig& c) { return c.sequence; },
                 [](ExperimentConfig& c, const std::string& v) { c.sequence = v; }});
    f.push_back(field("frames", &ExperimentConfig::frames));
    f.push_back(field("rate", &ExperimentConfig::rate));
    f.push_back(field("walk_speed", &ExperimentConfig::walk_speed));
    f.push_back(field("circle_radius", &ExperimentConfig::circle_radius));
    f.push_back(field("circle_angular_speed", &ExperimentConfig::circle_angular_speed));
    f.push_back(field("twirl_angular_speed", &ExperimentConfig::twirl_angular_speed));
    f.push_back(nested("sigma_2d", &ExperimentConfig::noise, &NoiseModel::sigma_2d));
    f.push_back(nested("sigma_3d", &ExperimentConfig::noise, &NoiseModel::sigma_3d));
    f.push_back({"seed", [](const ExperimentConfig& c) { return std::to_string(c.noise.seed); },
                 [](ExperimentConfig& c, const std::string& v) {
                   const long long s = csv::parse_int(v);
                   if (s < 0) throw ConfigError("seed must be nonnegative");
                   c.noise.seed = static_cast<std::uint64_t>(s);
                 }});
    f.push_back(nested("visibility_margin", &ExperimentConfig::noise,
                       &NoiseModel::visibility_margin));
    f.push_back(field("scale_corruption", &ExperimentConfig::scale_corruption));
    f.push_back(nested("recon_omega_p", &ExperimentConfig::reconstruction, &EnergyWeights::omega_p));
    f.push_back(nested("recon_omega_s", &ExperimentConfig::reconstruction, &EnergyWeights::omega_s));
    f.push_back(nested("recon_omega_l", &ExperimentConfig::reconstruction, &EnergyWeights::omega_l));
    f.push_back(nested("recon_omega_b", &ExperimentConfig::reconstruction, &EnergyWeights::omega_b));
    f.push_back(nested("decision_omega_p", &ExperimentConfig::decision, &EnergyWeights::omega_p));
    f.push_back(nested("decision_omega_s", &ExperimentConfig::decision, &EnergyWeights::omega_s));
    f.push_back(nested("decision_omega_l", &ExperimentConfig::decision, &EnergyWeights::omega_l));
    f.push_back(nested("decision_omega_b", &ExperimentConfig::decision, &EnergyWeights::omega_b));
    f.push_back(nested("fx", &ExperimentConfig::intrinsics, &Intrinsics::fx));
    f.push_back(nested("fy", &ExperimentConfig::intrinsics, &Intrinsics::fy));
    f.push_back(nested("cx", &ExperimentConfig::intrinsics, &Intrinsics::cx));
    f.push_back(nested("cy", &ExperimentConfig::intrinsics, &Intrinsics::cy));
    f.push_back(nested("width", &ExperimentConfig::intrinsics, &Intrinsics::width));
    f.push_back(nested("height", &ExperimentConfig::intrinsics, &Intrinsics::height));
    f.push_back(field("k_past", &ExperimentConfig::k_past));
    f.push_back(field("horizon", &ExperimentConfig::horizon));
    f.push_back(field("ring_radius", &ExperimentConfig::ring_radius));
    f.push_back(field("ring_count", &ExperimentConfig::ring_count));
    f.push_back(field("ring_height", &ExperimentConfig::ring_height));
    f.push_back(field("min_altitude", &ExperimentConfig::min_altitude));
    f.push_back(field("max_altitude", &ExperimentConfig::max_altitude));
    f.push_back(field("calibration_frames", &ExperimentConfig::calibration_frames));
    f.push_back(nested("tol_grad", &ExperimentConfig::descent, &DescentOptions::tol_grad));
    f.push_back(nested("max_iters", &ExperimentConfig::descent, &DescentOptions::max_iters));
    f.push_back(nested("armijo", &ExperimentConfig::descent, &DescentOptions::armijo));
    f.push_back(nested("shrink", &ExperimentConfig::descent, &DescentOptions::shrink));
    f.push_back(nested("fd_step", &ExperimentConfig::uncertainty, &UncertaintyOptions::fd_step));
    f.push_back(nested("eigen_floor", &ExperimentConfig::uncertainty,
                       &UncertaintyOptions::eigen_floor));
    f.push_back(nested("future_only", &ExperimentConfig::uncertainty,
                       &UncertaintyOptions::future_only));
    f.push_back(field("drone_beta", &ExperimentConfig::drone_beta));
    f.push_back(field("flight_log_steps", &ExperimentConfig::flight_log_steps));
    f.push_back(field("no_flight_model", &ExperimentConfig::no_flight_model));
    f.push_back(field("report_current_frame", &ExperimentConfig::report_current_frame));
    f.push_back(field("rollout_all", &ExperimentConfig::rollout_all));
    return f;
  }();
  return table;
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kTeleport: return "teleport";
    case Mode::kFixedCameras: return "fixed_cameras";
    case Mode::kFlight: return "flight";
  }
  return "?";
}

std::string to_string(Policy p) {
  switch (p) {
    case Policy::kActive: return "active";
    case Policy::kRandom: return "random";
    case Policy::kConstantRotationCw: return "constant_rotation_cw";
    case Policy::kConstantRotationCcw: return "constant_rotation_ccw";
    case Policy::kConstantAngle: return "constant_angle";
    case Policy::kOracle: return "oracle";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::kTeleport, Mode::kFixedCameras, Mode::kFlight}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown mode '" + s + "'");
}

Policy parse_policy(const std::string& s) {
  for (Policy p : {Policy::kActive, Policy::kRandom, Policy::kConstantRotationCw,
                   Policy::kConstantRotationCcw, Policy::kConstantAngle, Policy::kOracle}) {
    if (to_string(p) == s) return p;
  }
  throw ConfigError("unknown policy '" + s + "'");
}

int ExperimentConfig::effective_k_past() const {
  if (k_past >= 0) return k_past;
  return mode == Mode::kFlight ? 6 : 2;
}

int ExperimentConfig::effective_horizon() const {
  if (horizon >= 0) return horizon;
  return mode == Mode::kFlight ? 3 : 1;
}

void ExperimentConfig::validate() const {
  if (effective_k_past() < 1 || effective_horizon() < 1) {
    throw ConfigError("window sizes must be at least 1");
  }
  if (!(ring_radius > 0.0)) throw ConfigError("ring radius must be positive");
  if (ring_count < 1) throw ConfigError("ring_count must be positive");
  if (frames < effective_k_past() + 2) throw ConfigError("too few frames for the window");
  if (!(rate > 0.0)) throw ConfigError("rate must be positive");
  if (!(min_altitude < max_altitude)) throw ConfigError("empty altitude band");
  if (noise.sigma_2d < 0.0 || noise.sigma_3d < 0.0) {
    throw ConfigError("noise sigmas must be nonnegative");
  }
  if (calibration_frames < 2) throw ConfigError("calibration needs at least 2 frames");
  if (!(drone_beta >= 0.0 && drone_beta < 1.0)) throw ConfigError("drone_beta must be in [0, 1)");
  reconstruction.validate();
  decision.validate();
  intrinsics.validate();
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_key_values() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      try {
        f.set(*this, value);
      } catch (const ParseError& e) {
        throw ConfigError(key + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::string> ExperimentConfig::keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.emplace_back(f.key);
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::string line;
  int row = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++row;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(row) + ": expected key = value");
    }
    try {
      base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(row) + ": " + e.what());
    }
  }
  return base;
}

MotionSequence make_sequence(const ExperimentConfig& cfg) {
  const std::string& s = cfg.sequence;
  if (s == "walk") return synth_walk(cfg.frames, cfg.walk_speed, cfg.rate);
  if (s == "circle_run") {
    return synth_circle_run(cfg.frames, cfg.circle_radius, cfg.circle_angular_speed, cfg.rate);
  }
  if (s == "twirl") return synth_twirl_in_place(cfg.frames, cfg.twirl_angular_speed, cfg.rate);
  if (s == "static") return synth_static(cfg.frames, cfg.rate);
  if (s.rfind("csv:", 0) == 0) {
    MotionSequence seq = load_sequence_csv(s.substr(4));
    if (static_cast<int>(seq.size()) < cfg.frames) {
      throw ConfigError("sequence " + s + " has fewer than " + std::to_string(cfg.frames) +
                        " frames");
    }
    seq.frames.resize(static_cast<std::size_t>(cfg.frames));
    return seq;
  }
  throw ConfigError("unknown sequence '" + s + "'");
}

std::vector<CameraPose> fixed_camera_rig() {
  std::vector<CameraPose> rig;
  constexpr int kCount = 14;
  for (int i = 0; i < kCount; ++i) {
    const double az = 2.0 * std::numbers::pi * (i + 0.3 * (i % 3)) / kCount;
    const double dist = 6.0 + 3.0 * ((i * 7) % 5) / 4.0;
    const double z = 0.4 + 2.4 * ((i * 3) % 4) / 3.0;
    rig.push_back(look_at(Eigen::Vector3d(dist * std::cos(az), dist * std::sin(az), z),
                          Eigen::Vector3d(0.0, 0.0, 1.0)));
  }
  return rig;
}

// ---------------------------------------------------------------------------
// Closed loop.

namespace {

class Experiment {
 public:
  explicit Experiment(const ExperimentConfig& cfg)
      : cfg_(cfg),
        seq_(make_sequence(cfg)),
        k_past_(cfg.effective_k_past()),
        horizon_(cfg.effective_horizon()),
        k_(cfg.intrinsics),
        estimates_(seq_.size()),
        observations_(seq_.size()),
        random_stream_(cfg.noise.seed ^ 0x5eedULL) {
    drone_model_.beta = cfg.drone_beta;
    drone_model_.dt = 1.0 / cfg.rate;
    drone_model_.min_altitude = cfg.min_altitude;
    drone_model_.max_altitude = cfg.max_altitude;
    flight_cfg_.radius = cfg.ring_radius;
    flight_cfg_.min_altitude = cfg.min_altitude;
    flight_cfg_.max_altitude = cfg.max_altitude;
    flight_cfg_.uniform_sampling = cfg.no_flight_model;
  }

  RunResult run();

 private:
  FrameObservation measure(int frame, const CameraPose& cam, int candidate) const {
    const Pose& truth = seq_[static_cast<std::size_t>(frame)];
    return {detect_2d(truth, cam, k_, cfg_.noise, frame, candidate),
            detect_3d_relative(truth, cam, cfg_.noise, cfg_.scale_corruption, frame, candidate),
            cam};
  }

  // MAP window ending at frame t (t >= 1) given the estimates of earlier
  // frames and the new observation of frame t.
  EstimationWindow map_window(int t, const FrameObservation& obs_t) const;
  Pose initial_estimate(const FrameObservation& obs0) const;

  double rollout_error(int t, const CandidateView& c,
                       const std::vector<Eigen::Vector3d>& subject_forecast) const;
  CameraPose next_camera(const CandidateView& c, const Eigen::Vector3d& subject,
                         DroneKinematicState* drone_after) const;
  std::vector<CandidateView> make_candidates(
      const std::vector<Eigen::Vector3d>& subject_forecast) const;

  const ExperimentConfig& cfg_;
  MotionSequence seq_;
  int k_past_;
  int horizon_;
  Intrinsics k_;
  BoneLengths calib_;
  std::vector<Pose> estimates_;
  std::vector<std::optional<FrameObservation>> observations_;
  std::mt19937_64 random_stream_;
  ReferenceDrone drone_model_;
  FlightModelParams flight_params_;
  FlightCandidateConfig flight_cfg_;
  DroneKinematicState drone_;
};

Pose Experiment::initial_estimate(const FrameObservation& obs0) const {
  // Back-project at average-height depth, then refine that single frame
  // without the smoothness term.
  EstimationWindow w(0, 1);
  const Pose init = initialize(obs0.det2d, obs0.camera, k_);
  w.poses = {init, init};
  w.observations[0] = obs0;
  w.lift_scale = fit_lift_scale(obs0.det3d, calib_);
  EnergyWeights weights = cfg_.reconstruction;
  weights.omega_s = 0.0;
  MinimizeOptions opts{cfg_.descent, {true, false}};
  return minimize(w, weights, calib_, k_, opts).window.poses[0];
}

EstimationWindow Experiment::map_window(int t, const FrameObservation& obs_t) const {
  const int k_eff = std::min(t, k_past_);
  EstimationWindow w(k_eff, 0);
  w.first_frame = t - k_eff;
  for (int i = 0; i < k_eff; ++i) {
    w.poses[i] = estimates_[static_cast<std::size_t>(w.first_frame + i)];
    w.observations[i] = observations_[static_cast<std::size_t>(w.first_frame + i)];
  }
  w.poses[k_eff] = t >= 2 ? extrapolate_constant_velocity(estimates_[t - 2], estimates_[t - 1])
                          : estimates_[t - 1];
  w.observations[k_eff] = obs_t;
  w.lift_scale = fit_lift_scale(obs_t.det3d, calib_);
  MinimizeOptions opts;
  opts.descent = cfg_.descent;
  return minimize(w, cfg_.reconstruction, calib_, k_, opts).window;
}

CameraPose Experiment::next_camera(const CandidateView& c, const Eigen::Vector3d& subject,
                                   DroneKinematicState* drone_after) const {
  if (cfg_.mode != Mode::kFlight) return c.cameras.front();
  DroneKinematicState next = drone_model_.step(drone_, c.velocity_command);
  const Eigen::Vector3d model_input = flight_params_.a_input_magnitude * c.direction;
  next.a_previous = flight_params_.alpha * model_input +
                    (1.0 - flight_params_.alpha) * drone_.a_previous;
  if (drone_after) *drone_after = next;
  return look_at(next.position, subject);
}

double Experiment::rollout_error(int t, const CandidateView& c,
                                 const std::vector<Eigen::Vector3d>& subject_forecast) const {
  const CameraPose cam = next_camera(c, subject_forecast.front(), nullptr);
  const Pose& truth = seq_[static_cast<std::size_t>(t + 1)];
  if (!is_visible(truth, cam, k_, cfg_.noise.visibility_margin)) return kInf;
  // Score the rollout with the metric the next cycle will report.
  const EstimationWindow w = map_window(t + 1, measure(t + 1, cam, c.id));
  const int idx = cfg_.report_current_frame ? w.current_index() : w.middle_index();
  return mpjpe(w.poses[idx], seq_[static_cast<std::size_t>(w.first_frame + idx)]);
}

std::vector<CandidateView> Experiment::make_candidates(
    const std::vector<Eigen::Vector3d>& subject_forecast) const {
  switch (cfg_.mode) {
    case Mode::kTeleport:
      return generate_ring_candidates(subject_forecast.front(), cfg_.ring_radius,
                                      cfg_.ring_count, cfg_.ring_height, horizon_);
    case Mode::kFixedCameras:
      return generate_fixed_candidates(fixed_camera_rig(), horizon_);
    case Mode::kFlight:
      return generate_flight_candidates(drone_, subject_forecast, flight_params_, flight_cfg_);
  }
  return {};
}

RunResult Experiment::run() {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.config = cfg_;
  const int n = static_cast<int>(seq_.size());

  calib_ = run_calibration(cfg_, seq_).bone_lengths;
  result.calibration = calib_;

  if (cfg_.mode == Mode::kFlight) {
    const auto log = generate_reference_log(drone_model_, cfg_.flight_log_steps,
                                            cfg_.noise.seed + 1);
    flight_params_ = fit_params(log, drone_model_.dt, drone_model_.v_max);
  }

  // Initial viewpoint: a seed-dependent bearing around the subject.
  const Eigen::Vector3d hip0 = seq_[0].hip();
  CameraPose camera;
  int candidate = 0;
  std::string label = "start";
  switch (cfg_.mode) {
    case Mode::kTeleport: {
      candidate = static_cast<int>((cfg_.noise.seed * 5) % static_cast<std::uint64_t>(cfg_.ring_count));
      camera = generate_ring_candidates(hip0, cfg_.ring_radius, cfg_.ring_count,
                                        cfg_.ring_height)[candidate].cameras.front();
      break;
    }
    case Mode::kFixedCameras: {
      const auto rig = fixed_camera_rig();
      candidate = static_cast<int>(cfg_.noise.seed % rig.size());
      for (std::size_t i = 0; i < rig.size(); ++i) {
        const std::size_t idx = (static_cast<std::size_t>(candidate) + i) % rig.size();
        if (is_visible(seq_[0], rig[idx], k_, cfg_.noise.visibility_margin)) {
          candidate = static_cast<int>(idx);
          break;
        }
      }
      camera = rig[static_cast<std::size_t>(candidate)];
      break;
    }
    case Mode::kFlight: {
      const double az = 2.0 * std::numbers::pi * static_cast<double>(cfg_.noise.seed % 18) / 18.0;
      drone_.position = Eigen::Vector3d(hip0.x() + cfg_.ring_radius * std::cos(az),
                                        hip0.y() + cfg_.ring_radius * std::sin(az),
                                        cfg_.ring_height);
      camera = look_at(drone_.position, hip0);
      break;
    }
  }
  const Eigen::Vector3d held_bearing = (camera.position - hip0).normalized();
  double chosen_score = kNaN;

  for (int t = 0; t < n; ++t) {
    const FrameObservation obs = measure(t, camera, candidate);
    observations_[t] = obs;

    EstimationWindow window;
    if (t == 0) {
      estimates_[0] = initial_estimate(obs);
    } else {
      window = map_window(t, obs);
      for (int i = 0; i < window.length(); ++i) {
        estimates_[window.first_frame + i] = window.poses[i];
      }
    }

    if (t >= k_past_) {
      FrameRecord rec;
      rec.cycle = t;
      rec.frame = window.first_frame + window.middle_index();
      rec.candidate = candidate;
      rec.label = label;
      rec.uncertainty = chosen_score;
      rec.mpjpe = mpjpe(estimates_[rec.frame], seq_[rec.frame]);
      rec.current_mpjpe = mpjpe(estimates_[t], seq_[t]);
      rec.camera_position = camera.position;
      rec.subject_distance = (camera.position - seq_[t].hip()).norm();
      result.frames.push_back(rec);
    }
    if (t + 1 >= n) break;

    // Predict where the subject goes next.
    std::optional<EstimationWindow> forecast;
    std::vector<Eigen::Vector3d> subject_forecast;
    if (t >= 1) {
      EstimationWindow extended(window.k_past, horizon_);
      extended.first_frame = window.first_frame;
      extended.lift_scale = window.lift_scale;
      for (int i = 0; i < window.length(); ++i) {
        extended.poses[i] = window.poses[i];
        extended.observations[i] = window.observations[i];
      }
      forecast = forecast_poses(extended, cfg_.reconstruction, calib_, cfg_.descent);
      for (int i = 1; i <= horizon_; ++i) {
        subject_forecast.push_back(forecast->poses[forecast->current_index() + i].hip());
      }
    } else {
      subject_forecast.assign(static_cast<std::size_t>(horizon_), estimates_[0].hip());
    }

    std::vector<CandidateView> candidates = make_candidates(subject_forecast);
    const Pose& predicted =
        forecast ? forecast->poses[forecast->current_index() + 1] : estimates_[t];
    for (CandidateView& c : candidates) {
      c.visible = is_visible(predicted, c.cameras.front(), k_, cfg_.noise.visibility_margin);
    }

    const bool warm_up = t < k_past_;
    const bool want_scores =
        forecast && ((!warm_up && cfg_.policy == Policy::kActive) || cfg_.rollout_all);
    if (want_scores) {
      score_candidates(*forecast, candidates, cfg_.decision, calib_, k_, cfg_.uncertainty,
                       cfg_.noise.visibility_margin);
    }
    std::vector<double> realized;
    if ((!warm_up && cfg_.policy == Policy::kOracle) || cfg_.rollout_all) {
      for (const CandidateView& c : candidates) {
        realized.push_back(c.visible ? rollout_error(t, c, subject_forecast) : kInf);
      }
    }
    if (cfg_.rollout_all) {
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const CandidateView& c = candidates[i];
        CandidateRecord r;
        r.cycle = t;
        r.candidate = c.id;
        r.label = c.label;
        r.azimuth = azimuth_deg(c.cameras.front().position, subject_forecast.front());
        r.elevation = elevation_deg(c.cameras.front().position, subject_forecast.front());
        r.score = want_scores ? c.uncertainty : kNaN;
        r.realized_error = realized[i];
        r.visible = c.visible;
        result.candidates.push_back(r);
      }
    }

    BaselineState bstate;
    bstate.subject = subject_forecast.front();
    bstate.current_position = camera.position;
    bstate.held_bearing = held_bearing;
    bstate.rng = &random_stream_;
    const double step_deg =
        cfg_.mode == Mode::kFlight ? 90.0 : 360.0 / std::max(cfg_.ring_count, 1);
    bstate.rotation_step_deg = cfg_.policy == Policy::kConstantRotationCw ? -step_deg : step_deg;

    const CandidateView* chosen = nullptr;
    if (warm_up) {
      chosen = &baseline_policy(BaselineKind::kConstantRotation, candidates, bstate);
    } else {
      switch (cfg_.policy) {
        case Policy::kActive: chosen = &select_best(candidates); break;
        case Policy::kRandom:
          chosen = &baseline_policy(BaselineKind::kRandom, candidates, bstate);
          break;
        case Policy::kConstantRotationCw:
        case Policy::kConstantRotationCcw:
          chosen = &baseline_policy(BaselineKind::kConstantRotation, candidates, bstate);
          break;
        case Policy::kConstantAngle:
          chosen = &baseline_policy(BaselineKind::kConstantAngle, candidates, bstate);
          break;
        case Policy::kOracle:
          bstate.realized_errors = realized;
          chosen = &baseline_policy(BaselineKind::kOracle, candidates, bstate);
          break;
      }
    }
    chosen_score = want_scores ? chosen->uncertainty : kNaN;
    candidate = chosen->id;
    label = chosen->label;
    DroneKinematicState next_drone;
    camera = next_camera(*chosen, subject_forecast.front(), &next_drone);
    if (cfg_.mode == Mode::kFlight) drone_ = next_drone;
  }

  double sum = 0.0;
  for (const FrameRecord& r : result.frames) {
    sum += cfg_.report_current_frame ? r.current_mpjpe : r.mpjpe;
  }
  result.mean_mpjpe = sum / static_cast<double>(result.frames.size());
  double sq = 0.0;
  for (const FrameRecord& r : result.frames) {
    const double e = (cfg_.report_current_frame ? r.current_mpjpe : r.mpjpe) - result.mean_mpjpe;
    sq += e * e;
  }
  result.std_mpjpe = std::sqrt(sq / static_cast<double>(result.frames.size()));
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace

CalibrationResult run_calibration(const ExperimentConfig& cfg, const MotionSequence& seq) {
  const Pose& stance = seq[0];
  std::vector<std::pair<Detection2D, CameraPose>> frames;
  for (int i = 0; i < cfg.calibration_frames; ++i) {
    const double az = 2.0 * std::numbers::pi * i / cfg.calibration_frames;
    const Eigen::Vector3d pos = stance.hip() + cfg.ring_radius * Eigen::Vector3d(std::cos(az),
                                                                                std::sin(az), 0.0);
    const CameraPose cam =
        look_at(Eigen::Vector3d(pos.x(), pos.y(), cfg.ring_height), stance.hip());
    // Calibration frames get their own noise keys, disjoint from the run.
    frames.emplace_back(detect_2d(stance, cam, cfg.intrinsics, cfg.noise, -1 - i), cam);
  }
  return calibrate(frames, cfg.intrinsics, cfg.reconstruction);
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Experiment exp(cfg);
  return exp.run();
}

std::string variant_name(const ExperimentConfig& cfg) {
  return cfg.no_flight_model ? "uniform_sampling" : "default";
}

SweepOutput sweep(const std::vector<ExperimentConfig>& configs,
                  const std::vector<std::uint64_t>& seeds) {
  SweepOutput out;
  std::map<std::string, std::size_t> row_of;
  std::vector<std::vector<double>> means;
  for (const ExperimentConfig& base : configs) {
    for (std::uint64_t seed : seeds) {
      ExperimentConfig c = base;
      c.noise.seed = seed;
      RunResult r = run_experiment(c);
      const std::string key = c.sequence + '|' + to_string(c.mode) + '|' +
                              to_string(c.policy) + '|' + variant_name(c);
      auto [it, inserted] = row_of.emplace(key, out.summary.size());
      if (inserted) {
        out.summary.push_back({c.sequence, to_string(c.mode), to_string(c.policy),
                               variant_name(c), 0, 0.0, 0.0});
        means.emplace_back();
      }
      means[it->second].push_back(r.mean_mpjpe);
      out.runs.push_back(std::move(r));
    }
  }
  for (std::size_t i = 0; i < out.summary.size(); ++i) {
    const auto& m = means[i];
    SummaryRow& row = out.summary[i];
    row.runs = static_cast<int>(m.size());
    double sum = 0.0;
    for (double v : m) sum += v;
    row.mean = sum / static_cast<double>(m.size());
    double sq = 0.0;
    for (double v : m) sq += (v - row.mean) * (v - row.mean);
    row.std = m.size() > 1 ? std::sqrt(sq / static_cast<double>(m.size() - 1)) : 0.0;
  }
  return out;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_frames_csv(const RunResult& r, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "cycle,frame,candidate,label,uncertainty,mpjpe,current_mpjpe,cam_x,cam_y,cam_z,"
         "subject_distance\n";
  for (const FrameRecord& f : r.frames) {
    out << f.cycle << ',' << f.frame << ',' << f.candidate << ',' << f.label << ','
        << fmt(f.uncertainty) << ',' << fmt(f.mpjpe) << ',' << fmt(f.current_mpjpe) << ','
        << fmt(f.camera_position.x()) << ',' << fmt(f.camera_position.y()) << ','
        << fmt(f.camera_position.z()) << ',' << fmt(f.subject_distance) << '\n';
  }
  finish(out, path);
}

void write_candidates_csv(const RunResult& r, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "cycle,candidate,label,azimuth,elevation,score,realized_error,visible\n";
  for (const CandidateRecord& c : r.candidates) {
    out << c.cycle << ',' << c.candidate << ',' << c.label << ',' << fmt(c.azimuth) << ','
        << fmt(c.elevation) << ',' << fmt(c.score) << ',' << fmt(c.realized_error) << ','
        << (c.visible ? 1 : 0) << '\n';
  }
  finish(out, path);
}

void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& [k, v] : cfg.to_key_values()) out << k << " = " << v << '\n';
  finish(out, path);
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "sequence,mode,policy,variant,runs,mean_mpjpe,std_mpjpe\n";
  for (const SummaryRow& s : rows) {
    out << s.sequence << ',' << s.mode << ',' << s.policy << ',' << s.variant << ','
        << s.runs << ',' << fmt(s.mean) << ',' << fmt(s.std) << '\n';
  }
  finish(out, path);
}

std::vector<SummaryRow> load_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() != 7) throw ParseError(path.string() + ": expected 7 columns");
    SummaryRow r;
    r.sequence = std::string(cells[0]);
    r.mode = std::string(cells[1]);
    r.policy = std::string(cells[2]);
    r.variant = std::string(cells[3]);
    r.runs = static_cast<int>(csv::parse_int(cells[4]));
    r.mean = csv::parse_double(cells[5]);
    r.std = csv::parse_double(cells[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void export_result(const RunResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_frames_csv(r, dir / "frames.csv");
  write_candidates_csv(r, dir / "candidates.csv");
  write_manifest(r.config, dir / "manifest");
}

}  // namespace activemocap
