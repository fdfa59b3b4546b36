#pragma once

#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "activemocap/estimator.hpp"
#include "activemocap/flight_model.hpp"
#include "activemocap/geometry.hpp"

namespace activemocap {

// A hypothetical camera placement for the next `horizon` frames: one repeated
// pose when teleporting, a predicted trajectory when flying.
struct CandidateView {
  int id = 0;
  std::string label;
  std::vector<CameraPose> cameras;
  // Flight mode: velocity command that realizes this candidate.
  Eigen::Vector3d velocity_command = Eigen::Vector3d::Zero();
  // Flight mode: model-side normalized command (velocity_command / v_max).
  Eigen::Vector3d direction = Eigen::Vector3d::Zero();
  bool visible = true;
  double uncertainty = std::numeric_limits<double>::quiet_NaN();
};

struct UncertaintyReport {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd eigenvalues;  // ascending
  double score = 0.0;
};

struct UncertaintyOptions {
  double fd_step = 1e-4;
  double eigen_floor = 1e-6;
  // Score only the marginal covariance of the future frames.
  bool future_only = false;
};

// Central differences of an analytic gradient, symmetrized.
Eigen::MatrixXd finite_difference_hessian(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& gradient,
    const Eigen::VectorXd& x, double step);

// Sum of 1 / max(lambda, floor) over the eigenvalues of `hessian`, i.e. the
// trace of the Laplace covariance. With `block_size` > 0 only the marginal
// covariance of variables [block_begin, block_begin + block_size) is traced.
UncertaintyReport uncertainty_from_hessian(Eigen::MatrixXd hessian, double floor,
                                           int block_begin = 0, int block_size = 0);

// Fills the window's future frames by constant-velocity extrapolation of the
// last two estimates, then refines them under a constant-velocity prior and
// the bone-length term. Observed frames are not modified.
EstimationWindow forecast_poses(const EstimationWindow& window,
                                const EnergyWeights& w, const BoneLengths& calib,
                                const DescentOptions& descent = {});

// Synthetic measurements of the forecast future frames as seen by
// `candidate`: exact projections and hip-relative poses. Throws
// SubjectNotVisible when any forecast joint leaves the image.
EstimationWindow forecast_measurements(const EstimationWindow& forecast,
                                       const CandidateView& candidate,
                                       const Intrinsics& k, double margin = 0.0);

UncertaintyReport hessian(const EstimationWindow& window, const EnergyWeights& w,
                          const BoneLengths& calib, const Intrinsics& k,
                          const UncertaintyOptions& opts = {});

// Scores every candidate in place. Invisible candidates are marked and get an
// infinite score.
void score_candidates(const EstimationWindow& forecast,
                      std::vector<CandidateView>& candidates,
                      const EnergyWeights& w, const BoneLengths& calib,
                      const Intrinsics& k, const UncertaintyOptions& opts = {},
                      double margin = 0.0);

// Lowest score among visible candidates, ties to the lowest id.
const CandidateView& select_best(const std::vector<CandidateView>& candidates);

// `count` cameras evenly spaced in azimuth on a horizontal circle of `radius`
// around `center` at absolute height `height`, all looking at `center`.
// Candidate i sits at azimuth start_azimuth + i * 360 / count degrees.
std::vector<CandidateView> generate_ring_candidates(
    const Eigen::Vector3d& center, double radius, int count, double height,
    int horizon = 1, double start_azimuth_deg = 0.0);

std::vector<CandidateView> generate_fixed_candidates(
    const std::vector<CameraPose>& cameras, int horizon = 1);

struct FlightCandidateConfig {
  double radius = 7.0;
  double min_altitude = 0.25;
  double max_altitude = 3.5;
  // Ablation: place candidates at fixed offsets, ignoring momentum.
  bool uniform_sampling = false;
};

// Velocity command for a desired unit direction (or zero): step along it at
// full speed, pull the goal back onto the sphere of `radius` around
// `subject`, clamp its altitude, and head there.
Eigen::Vector3d flight_command(const Eigen::Vector3d& position,
                               const Eigen::Vector3d& direction,
                               const Eigen::Vector3d& subject,
                               const FlightModelParams& params,
                               const FlightCandidateConfig& cfg);

// The nine flight candidates (center, up, down, left, right and diagonals).
// `subject_forecast` holds the predicted hip for each future step.
std::vector<CandidateView> generate_flight_candidates(
    const DroneKinematicState& drone,
    const std::vector<Eigen::Vector3d>& subject_forecast,
    const FlightModelParams& params, const FlightCandidateConfig& cfg = {});

enum class BaselineKind { kRandom, kConstantRotation, kConstantAngle, kOracle };

struct BaselineState {
  Eigen::Vector3d subject = Eigen::Vector3d::Zero();  // predicted hip
  Eigen::Vector3d current_position = Eigen::Vector3d::Zero();
  // Constant rotation: signed azimuth increment per step (degrees, positive
  // is counter-clockwise seen from above).
  double rotation_step_deg = 20.0;
  // Constant angle: subject-to-camera direction to hold.
  Eigen::Vector3d held_bearing = Eigen::Vector3d::UnitX();
  // Oracle: realized error per candidate (same order as the candidates).
  std::vector<double> realized_errors;
  std::mt19937_64* rng = nullptr;
};

const CandidateView& baseline_policy(BaselineKind kind,
                                     const std::vector<CandidateView>& candidates,
                                     const BaselineState& state);

}  // namespace activemocap
