#include "activemocap/flight_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "activemocap/csv.hpp"
#include "activemocap/errors.hpp"

namespace activemocap {

namespace {

Eigen::Vector3d clamp_norm(const Eigen::Vector3d& v, double max_norm) {
  const double n = v.norm();
  return n > max_norm ? Eigen::Vector3d(v * (max_norm / n)) : v;
}

// Velocities implied by the log under trapezoidal integration from rest.
std::vector<Eigen::Vector3d> log_velocities(const std::vector<FlightLogEntry>& log,
                                            double dt) {
  std::vector<Eigen::Vector3d> v(log.size(), Eigen::Vector3d::Zero());
  for (std::size_t n = 0; n + 1 < log.size(); ++n) {
    v[n + 1] = 2.0 * (log[n + 1].position - log[n].position) / dt - v[n];
  }
  return v;
}

struct FitProblem {
  std::vector<Eigen::Vector3d> velocity;
  // Observed acceleration term: x_{n+1} - x_n - V_n dt.
  std::vector<Eigen::Vector3d> residual0;
  const std::vector<FlightLogEntry>* log;
  double dt;

  // Per-step unit-magnitude acceleration s_n(alpha); a_n = |a_input| s_n.
  std::vector<Eigen::Vector3d> unit_accel(double alpha) const {
    std::vector<Eigen::Vector3d> s(residual0.size());
    Eigen::Vector3d prev = Eigen::Vector3d::Zero();
    for (std::size_t n = 0; n < s.size(); ++n) {
      prev = alpha * (*log)[n].command + (1.0 - alpha) * prev;
      s[n] = prev;
    }
    return s;
  }

  // Least-squares magnitude for `alpha` and the resulting squared error sum.
  std::pair<double, double> solve(double alpha) const {
    const auto s = unit_accel(alpha);
    const double h = 0.5 * dt * dt;
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
      num += h * s[n].dot(residual0[n]);
      den += h * h * s[n].squaredNorm();
    }
    const double mag = den > 0.0 ? num / den : 0.0;
    double sse = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
      sse += (residual0[n] - mag * h * s[n]).squaredNorm();
    }
    return {mag, sse};
  }
};

FitProblem make_problem(const std::vector<FlightLogEntry>& log, double dt) {
  FitProblem p;
  p.log = &log;
  p.dt = dt;
  p.velocity = log_velocities(log, dt);
  for (std::size_t n = 0; n + 1 < log.size(); ++n) {
    p.residual0.push_back(log[n + 1].position - log[n].position - p.velocity[n] * dt);
  }
  return p;
}

}  // namespace

void FlightModelParams::validate() const {
  if (!(dt > 0.0)) throw ConfigError("flight model dt must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
}

DroneKinematicState predict_step(const DroneKinematicState& state,
                                 const Eigen::Vector3d& direction,
                                 const FlightModelParams& params) {
  const Eigen::Vector3d a_input = params.a_input_magnitude * direction;
  const Eigen::Vector3d a_current =
      params.alpha * a_input + (1.0 - params.alpha) * state.a_previous;
  DroneKinematicState next;
  next.position = state.position + state.velocity * params.dt +
                  0.5 * a_current * params.dt * params.dt;
  next.velocity = clamp_norm(state.velocity + a_current * params.dt, params.v_max);
  next.a_previous = a_current;
  return next;
}

std::vector<Eigen::Vector3d> predict_trajectory(const DroneKinematicState& state,
                                                const Eigen::Vector3d& direction,
                                                const FlightModelParams& params,
                                                int steps) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(static_cast<std::size_t>(std::max(steps, 0)));
  DroneKinematicState s = state;
  for (int i = 0; i < steps; ++i) {
    s = predict_step(s, direction, params);
    out.push_back(s.position);
  }
  return out;
}

FlightModelParams fit_params(const std::vector<FlightLogEntry>& log, double dt,
                             double v_max) {
  if (log.size() < 6) {
    throw DegenerateLog("flight log needs at least 5 steps");
  }
  bool varied = false;
  for (std::size_t n = 1; n + 1 < log.size() && !varied; ++n) {
    varied = (log[n].command - log[0].command).norm() > 1e-9;
  }
  if (!varied) {
    throw DegenerateLog("all logged commands are identical");
  }
  const FitProblem problem = make_problem(log, dt);
  const auto sse = [&](double a) { return problem.solve(a).second; };

  constexpr int kGrid = 100;
  int best = 0;
  double best_value = sse(0.0);
  for (int i = 1; i <= kGrid; ++i) {
    const double v = sse(static_cast<double>(i) / kGrid);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  double lo = std::max(0, best - 1) / static_cast<double>(kGrid);
  double hi = std::min(kGrid, best + 1) / static_cast<double>(kGrid);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = sse(c), fd = sse(d);
  while (hi - lo > 1e-12) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = sse(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = sse(d);
    }
  }
  double alpha = 0.5 * (lo + hi);
  if (best_value < sse(alpha)) alpha = best / static_cast<double>(kGrid);

  FlightModelParams params;
  params.dt = dt;
  params.v_max = v_max;
  params.alpha = alpha;
  params.a_input_magnitude = problem.solve(alpha).first;
  return params;
}

double one_step_error(const std::vector<FlightLogEntry>& log,
                      const FlightModelParams& params) {
  if (log.size() < 2) return 0.0;
  const FitProblem problem = make_problem(log, params.dt);
  const auto s = problem.unit_accel(params.alpha);
  const double h = 0.5 * params.dt * params.dt;
  double sum = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    sum += (problem.residual0[n] - params.a_input_magnitude * h * s[n]).squaredNorm();
  }
  return sum / static_cast<double>(s.size());
}

double momentum_only_error(const std::vector<FlightLogEntry>& log, double dt) {
  if (log.size() < 2) return 0.0;
  const FitProblem problem = make_problem(log, dt);
  double sum = 0.0;
  for (const auto& r : problem.residual0) sum += r.squaredNorm();
  return sum / static_cast<double>(problem.residual0.size());
}

DroneKinematicState ReferenceDrone::step(const DroneKinematicState& state,
                                         const Eigen::Vector3d& velocity_command) const {
  DroneKinematicState next;
  next.velocity = clamp_norm(
      beta * state.velocity + (1.0 - beta) * clamp_norm(velocity_command, v_max), v_max);
  next.position = state.position + 0.5 * (state.velocity + next.velocity) * dt;
  if (next.position.z() < min_altitude || next.position.z() > max_altitude) {
    next.position.z() = std::clamp(next.position.z(), min_altitude, max_altitude);
    next.velocity.z() = 0.0;
  }
  next.a_previous = (next.velocity - state.velocity) / dt;
  return next;
}

std::vector<FlightLogEntry> generate_reference_log(const ReferenceDrone& drone,
                                                   int steps, unsigned long seed) {
  ReferenceDrone free_flight = drone;
  free_flight.min_altitude = -1e9;
  free_flight.max_altitude = 1e9;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> hold(1, 4);
  std::vector<FlightLogEntry> log;
  DroneKinematicState state;
  state.position = Eigen::Vector3d(0.0, 0.0, 2.0);
  Eigen::Vector3d dir = Eigen::Vector3d::Zero();
  int remaining = 0;
  for (int n = 0; n < steps; ++n) {
    if (remaining == 0) {
      dir = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng)).normalized();
      remaining = hold(rng);
    }
    --remaining;
    log.push_back({dir, state.position});
    state = free_flight.step(state, drone.v_max * dir);
  }
  return log;
}

std::vector<FlightLogEntry> load_flight_log_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || csv::split(line).size() != 7) {
    throw ParseError(path.string() + ": expected header step,cmd_x,cmd_y,cmd_z,pos_x,pos_y,pos_z");
  }
  std::vector<FlightLogEntry> log;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = csv::split(line);
    if (cells.size() != 7) {
      throw ParseError(path.string() + ":" + std::to_string(row) + ": expected 7 columns");
    }
    FlightLogEntry e;
    for (int i = 0; i < 3; ++i) {
      e.command[i] = csv::parse_double(cells[1 + i]);
      e.position[i] = csv::parse_double(cells[4 + i]);
    }
    log.push_back(e);
  }
  return log;
}

void save_flight_log_csv(const std::vector<FlightLogEntry>& log,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,cmd_x,cmd_y,cmd_z,pos_x,pos_y,pos_z\n";
  for (std::size_t n = 0; n < log.size(); ++n) {
    out << n;
    for (int i = 0; i < 3; ++i) out << ',' << csv::format_double(log[n].command[i]);
    for (int i = 0; i < 3; ++i) out << ',' << csv::format_double(log[n].position[i]);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace activemocap
