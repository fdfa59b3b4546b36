#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace activemocap {

inline constexpr double kMaxDroneSpeed = 5.0;  // m/s

struct DroneKinematicState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d a_previous = Eigen::Vector3d::Zero();
};

struct FlightModelParams {
  double dt = 0.2;
  double alpha = 0.5;
  double a_input_magnitude = 10.0;  // m/s^2
  double v_max = kMaxDroneSpeed;

  void validate() const;
};

// One control period of the constant-acceleration model. The commanded
// acceleration a_input = |a_input| * direction is blended with the previous
// acceleration, then position follows x + V dt + a dt^2 / 2.
// `direction` has norm <= 1; zero means "no input".
DroneKinematicState predict_step(const DroneKinematicState& state,
                                 const Eigen::Vector3d& direction,
                                 const FlightModelParams& params);

std::vector<Eigen::Vector3d> predict_trajectory(const DroneKinematicState& state,
                                                const Eigen::Vector3d& direction,
                                                const FlightModelParams& params,
                                                int steps = 3);

struct FlightLogEntry {
  Eigen::Vector3d command = Eigen::Vector3d::Zero();  // normalized direction
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

// Fits alpha (grid scan + golden-section refinement on [0, 1]) and the input
// acceleration magnitude (closed-form least squares for each alpha) so that
// the model's one-step predictions match the logged positions. The log must
// start at rest; entry n's command acts between positions n and n+1.
FlightModelParams fit_params(const std::vector<FlightLogEntry>& log, double dt,
                             double v_max = kMaxDroneSpeed);

// Mean squared one-step prediction error of `params` over the log, and of the
// momentum-only prediction x + V dt.
double one_step_error(const std::vector<FlightLogEntry>& log,
                      const FlightModelParams& params);
double momentum_only_error(const std::vector<FlightLogEntry>& log, double dt);

// Stand-in for the simulator's drone physics: exponential tracking of the
// commanded velocity, V <- beta V + (1 - beta) V_cmd, integrated with the
// trapezoid rule. Altitude is clamped to [min_altitude, max_altitude].
struct ReferenceDrone {
  double beta = 0.7;
  double dt = 0.2;
  double v_max = kMaxDroneSpeed;
  double min_altitude = 0.25;
  double max_altitude = 3.5;

  DroneKinematicState step(const DroneKinematicState& state,
                           const Eigen::Vector3d& velocity_command) const;
};

// Flies the reference drone with random unit commands to produce a log
// suitable for fit_params. Altitude limits are disabled for the fit.
std::vector<FlightLogEntry> generate_reference_log(const ReferenceDrone& drone,
                                                   int steps, unsigned long seed);

std::vector<FlightLogEntry> load_flight_log_csv(const std::filesystem::path& path);
void save_flight_log_csv(const std::vector<FlightLogEntry>& log,
                         const std::filesystem::path& path);

}  // namespace activemocap
