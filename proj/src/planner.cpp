#include "activemocap/planner.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "activemocap/errors.hpp"
#include "activemocap/sensing.hpp"

namespace activemocap {

namespace {

double wrap_deg(double a) {
  a = std::fmod(a + 180.0, 360.0);
  if (a < 0.0) a += 360.0;
  return a - 180.0;
}

// Visible candidate with the smallest key, ties broken by id.
template <typename Key>
const CandidateView& argmin_visible(const std::vector<CandidateView>& candidates,
                                    Key key) {
  const CandidateView* best = nullptr;
  double best_key = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const CandidateView& c = candidates[i];
    if (!c.visible) continue;
    const double k = key(i);
    if (!best || k < best_key || (k == best_key && c.id < best->id)) {
      best = &c;
      best_key = k;
    }
  }
  if (!best) throw NoVisibleCandidate("no candidate keeps the subject in view");
  return *best;
}

}  // namespace

Eigen::MatrixXd finite_difference_hessian(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& gradient,
    const Eigen::VectorXd& x, double step) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd xp = x, gp(n), gm(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xp[i] = x[i] + step;
    gradient(xp, gp);
    xp[i] = x[i] - step;
    gradient(xp, gm);
    xp[i] = x[i];
    h.col(i) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

UncertaintyReport uncertainty_from_hessian(Eigen::MatrixXd hessian, double floor,
                                           int block_begin, int block_size) {
  if (hessian.rows() != hessian.cols() || hessian.rows() == 0) {
    throw NumericalFailure("Hessian must be a non-empty square matrix");
  }
  if (!hessian.allFinite()) throw NumericalFailure("Hessian has non-finite entries");
  const bool block = block_size > 0;
  if (block && (block_begin < 0 || block_begin + block_size > hessian.rows())) {
    throw NumericalFailure("covariance block out of range");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      hessian, block ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericalFailure("symmetric eigen-decomposition did not converge");
  }
  UncertaintyReport report;
  report.eigenvalues = eig.eigenvalues();
  const Eigen::ArrayXd inv_lambda =
      1.0 / report.eigenvalues.array().max(floor);
  if (block) {
    const auto v = eig.eigenvectors().middleRows(block_begin, block_size);
    report.score = (v.array().square().rowwise() * inv_lambda.transpose()).sum();
  } else {
    report.score = inv_lambda.sum();
  }
  report.hessian = std::move(hessian);
  return report;
}

EstimationWindow forecast_poses(const EstimationWindow& window,
                                const EnergyWeights& w, const BoneLengths& calib,
                                const DescentOptions& descent) {
  window.validate();
  const int cur = window.current_index();
  if (cur < 1) {
    throw ConfigError("forecasting needs at least two estimated frames");
  }
  EstimationWindow out = window;
  const JointMatrix velocity = window.poses[cur].joints - window.poses[cur - 1].joints;
  for (int i = 1; i <= window.horizon; ++i) {
    out.poses[cur + i] = Pose(window.poses[cur].joints + i * velocity);
    out.observations[cur + i].reset();
  }
  if (window.horizon == 0) return out;

  const BoneTopology& topo = BoneTopology::standard();
  const int n = out.length();
  // Constant-velocity prior on every second difference touching a future
  // frame, plus bone lengths of the future frames.
  const Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) g->setZero(x.size());
    double accel = 0.0, bone = 0.0;
    for (int i = cur + 1; i < n; ++i) {
      const Eigen::Matrix<double, kPoseDim, 1> a =
          x.segment<kPoseDim>(i * kPoseDim) - 2.0 * x.segment<kPoseDim>((i - 1) * kPoseDim) +
          x.segment<kPoseDim>((i - 2) * kPoseDim);
      accel += a.squaredNorm();
      if (g) {
        g->segment<kPoseDim>(i * kPoseDim) += 2.0 * w.omega_s * a;
        g->segment<kPoseDim>((i - 1) * kPoseDim) -= 4.0 * w.omega_s * a;
        g->segment<kPoseDim>((i - 2) * kPoseDim) += 2.0 * w.omega_s * a;
      }
      for (std::size_t b = 0; b < topo.size(); ++b) {
        const int p = topo.bones()[b].parent, c = topo.bones()[b].child;
        const Eigen::Vector3d diff = x.segment<3>(i * kPoseDim + 3 * p) -
                                     x.segment<3>(i * kPoseDim + 3 * c);
        const double len = diff.norm();
        const double d = len - calib[b];
        bone += d * d;
        if (g && len > 1e-12) {
          const Eigen::Vector3d gb = 2.0 * w.omega_b * d / len * diff;
          g->segment<3>(i * kPoseDim + 3 * p) += gb;
          g->segment<3>(i * kPoseDim + 3 * c) -= gb;
        }
      }
    }
    return w.omega_s * accel + w.omega_b * bone;
  };
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(n * kPoseDim);
  mask.tail(window.horizon * kPoseDim).setOnes();
  const DescentResult d = gradient_descent(f, out.variables(), descent, mask);
  out.set_variables(d.x);
  return out;
}

EstimationWindow forecast_measurements(const EstimationWindow& forecast,
                                       const CandidateView& candidate,
                                       const Intrinsics& k, double margin) {
  if (candidate.cameras.empty()) {
    throw ConfigError("candidate " + std::to_string(candidate.id) + " has no camera");
  }
  EstimationWindow out = forecast;
  const int cur = forecast.current_index();
  for (int i = 1; i <= forecast.horizon; ++i) {
    const std::size_t step =
        std::min(static_cast<std::size_t>(i - 1), candidate.cameras.size() - 1);
    const CameraPose& cam = candidate.cameras[step];
    const Pose& pose = forecast.poses[cur + i];
    if (!is_visible(pose, cam, k, margin)) {
      throw SubjectNotVisible("forecast subject leaves the view of candidate " +
                              std::to_string(candidate.id));
    }
    FrameObservation obs;
    obs.camera = cam;
    obs.det2d.frame = forecast.first_frame + cur + i;
    obs.det2d.joints2d = project(pose, cam, k);
    obs.det3d.frame = obs.det2d.frame;
    for (int j = 0; j < kNumJoints; ++j) {
      obs.det3d.joints3d_rel.row(j) =
          (cam.world_to_camera * (pose.joint(j) - pose.hip())).transpose() /
          forecast.lift_scale;
    }
    out.observations[cur + i] = obs;
  }
  return out;
}

UncertaintyReport hessian(const EstimationWindow& window, const EnergyWeights& w,
                          const BoneLengths& calib, const Intrinsics& k,
                          const UncertaintyOptions& opts) {
  window.validate();
  const PoseEnergy energy(window, w, calib, k);
  Eigen::MatrixXd h = finite_difference_hessian(
      [&energy](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        energy.value_and_gradient(x, g);
      },
      window.variables(), opts.fd_step);
  if (opts.future_only && window.horizon > 0) {
    return uncertainty_from_hessian(std::move(h), opts.eigen_floor,
                                    (window.current_index() + 1) * kPoseDim,
                                    window.horizon * kPoseDim);
  }
  return uncertainty_from_hessian(std::move(h), opts.eigen_floor);
}

void score_candidates(const EstimationWindow& forecast,
                      std::vector<CandidateView>& candidates,
                      const EnergyWeights& w, const BoneLengths& calib,
                      const Intrinsics& k, const UncertaintyOptions& opts,
                      double margin) {
  for (CandidateView& c : candidates) {
    try {
      const EstimationWindow synthetic = forecast_measurements(forecast, c, k, margin);
      c.uncertainty = hessian(synthetic, w, calib, k, opts).score;
      c.visible = true;
    } catch (const SubjectNotVisible&) {
      c.visible = false;
      c.uncertainty = std::numeric_limits<double>::infinity();
    }
  }
}

const CandidateView& select_best(const std::vector<CandidateView>& candidates) {
  return argmin_visible(candidates,
                        [&](std::size_t i) { return candidates[i].uncertainty; });
}

std::vector<CandidateView> generate_ring_candidates(const Eigen::Vector3d& center,
                                                    double radius, int count,
                                                    double height, int horizon,
                                                    double start_azimuth_deg) {
  if (count < 1 || !(radius > 0.0)) throw ConfigError("invalid ring geometry");
  std::vector<CandidateView> out;
  for (int i = 0; i < count; ++i) {
    const double az =
        (start_azimuth_deg + 360.0 * i / count) * std::numbers::pi / 180.0;
    const Eigen::Vector3d pos(center.x() + radius * std::cos(az),
                              center.y() + radius * std::sin(az), height);
    CandidateView c;
    c.id = i;
    c.label = "ring" + std::to_string(i);
    c.cameras.assign(static_cast<std::size_t>(std::max(horizon, 1)), look_at(pos, center));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CandidateView> generate_fixed_candidates(
    const std::vector<CameraPose>& cameras, int horizon) {
  std::vector<CandidateView> out;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    CandidateView c;
    c.id = static_cast<int>(i);
    c.label = "fixed" + std::to_string(i);
    c.cameras.assign(static_cast<std::size_t>(std::max(horizon, 1)), cameras[i]);
    out.push_back(std::move(c));
  }
  return out;
}

Eigen::Vector3d flight_command(const Eigen::Vector3d& position,
                               const Eigen::Vector3d& direction,
                               const Eigen::Vector3d& subject,
                               const FlightModelParams& params,
                               const FlightCandidateConfig& cfg) {
  Eigen::Vector3d goal = position + params.v_max * params.dt * direction;
  Eigen::Vector3d offset = goal - subject;
  if (offset.norm() < 1e-9) offset = position - subject;
  if (offset.norm() < 1e-9) offset = Eigen::Vector3d::UnitX();
  goal = subject + cfg.radius * offset.normalized();
  goal.z() = std::clamp(goal.z(), cfg.min_altitude, cfg.max_altitude);
  Eigen::Vector3d v = (goal - position) / params.dt;
  if (v.norm() > params.v_max) v *= params.v_max / v.norm();
  return v;
}

std::vector<CandidateView> generate_flight_candidates(
    const DroneKinematicState& drone,
    const std::vector<Eigen::Vector3d>& subject_forecast,
    const FlightModelParams& params, const FlightCandidateConfig& cfg) {
  if (subject_forecast.empty()) throw ConfigError("flight candidates need a subject forecast");
  struct Dir {
    const char* label;
    int h;  // +1 right, -1 left
    int v;  // +1 up, -1 down
  };
  static constexpr Dir kDirs[] = {
      {"center", 0, 0},   {"up", 0, 1},        {"down", 0, -1},
      {"left", -1, 0},    {"right", 1, 0},     {"up-left", -1, 1},
      {"up-right", 1, 1}, {"down-left", -1, -1}, {"down-right", 1, -1}};

  Eigen::Vector3d forward = subject_forecast.front() - drone.position;
  forward.z() = 0.0;
  if (forward.norm() < 1e-9) forward = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d right = forward.normalized().cross(Eigen::Vector3d::UnitZ());

  const auto clamp_altitude = [&](DroneKinematicState& s) {
    if (s.position.z() < cfg.min_altitude || s.position.z() > cfg.max_altitude) {
      s.position.z() = std::clamp(s.position.z(), cfg.min_altitude, cfg.max_altitude);
      s.velocity.z() = 0.0;
    }
  };

  std::vector<CandidateView> out;
  int id = 0;
  for (const Dir& dir : kDirs) {
    Eigen::Vector3d d = dir.h * right + dir.v * Eigen::Vector3d::UnitZ();
    if (d.norm() > 0.0) d.normalize();
    CandidateView c;
    c.id = id++;
    c.label = dir.label;
    DroneKinematicState s = drone;
    Eigen::Vector3d p = drone.position;
    for (std::size_t i = 0; i < subject_forecast.size(); ++i) {
      const Eigen::Vector3d& subject = subject_forecast[i];
      if (cfg.uniform_sampling) {
        p = p + params.v_max * params.dt * d;
        Eigen::Vector3d off = p - subject;
        if (off.norm() < 1e-9) off = Eigen::Vector3d::UnitX();
        p = subject + cfg.radius * off.normalized();
        p.z() = std::clamp(p.z(), cfg.min_altitude, cfg.max_altitude);
        if (i == 0) {
          c.velocity_command = flight_command(drone.position, d, subject, params, cfg);
          c.direction = c.velocity_command / params.v_max;
        }
      } else {
        // The command chosen now is held over the whole horizon.
        if (i == 0) {
          c.velocity_command = flight_command(s.position, d, subject, params, cfg);
          c.direction = c.velocity_command / params.v_max;
        }
        s = predict_step(s, c.direction, params);
        clamp_altitude(s);
        p = s.position;
      }
      c.cameras.push_back(look_at(p, subject));
    }
    out.push_back(std::move(c));
  }
  return out;
}

const CandidateView& baseline_policy(BaselineKind kind,
                                     const std::vector<CandidateView>& candidates,
                                     const BaselineState& state) {
  const auto final_position = [&](std::size_t i) {
    return candidates[i].cameras.back().position;
  };
  switch (kind) {
    case BaselineKind::kRandom: {
      if (!state.rng) throw ConfigError("random policy needs a random stream");
      std::vector<const CandidateView*> visible;
      for (const CandidateView& c : candidates) {
        if (c.visible) visible.push_back(&c);
      }
      if (visible.empty()) throw NoVisibleCandidate("no candidate keeps the subject in view");
      std::uniform_int_distribution<std::size_t> pick(0, visible.size() - 1);
      return *visible[pick(*state.rng)];
    }
    case BaselineKind::kConstantRotation: {
      const double target =
          azimuth_deg(state.current_position, state.subject) + state.rotation_step_deg;
      return argmin_visible(candidates, [&](std::size_t i) {
        return std::abs(wrap_deg(azimuth_deg(final_position(i), state.subject) - target));
      });
    }
    case BaselineKind::kConstantAngle: {
      const Eigen::Vector3d bearing = state.held_bearing.normalized();
      return argmin_visible(candidates, [&](std::size_t i) {
        return -(final_position(i) - state.subject).normalized().dot(bearing);
      });
    }
    case BaselineKind::kOracle: {
      if (state.realized_errors.size() != candidates.size()) {
        throw ConfigError("oracle needs one realized error per candidate");
      }
      return argmin_visible(candidates,
                            [&](std::size_t i) { return state.realized_errors[i]; });
    }
  }
  throw ConfigError("unknown baseline");
}

}  // namespace activemocap
