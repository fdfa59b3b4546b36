#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "activemocap/descent.hpp"
#include "activemocap/geometry.hpp"
#include "activemocap/sensing.hpp"
#include "activemocap/skeleton.hpp"

namespace activemocap {

inline constexpr double kAverageHumanHeight = 1.75;

struct EnergyWeights {
  double omega_p = 0.0001;  // projection
  double omega_s = 1.0;     // smoothness
  double omega_l = 0.1;     // lift
  double omega_b = 1.0;     // bone length

  // Weights for the MAP reconstruction.
  static EnergyWeights reconstruction() { return {0.0001, 1.0, 0.1, 1.0}; }
  // Weights for uncertainty scoring; the projection term is trusted more.
  static EnergyWeights decision() { return {0.001, 1.0, 0.1, 1.0}; }

  EnergyWeights scaled(double c) const {
    return {omega_p * c, omega_s * c, omega_l * c, omega_b * c};
  }
  void validate() const;
};

struct FrameObservation {
  Detection2D det2d;
  Detection3D det3d;
  CameraPose camera;
};

// A block of consecutive frames optimized jointly: `k_past` past frames, the
// current frame, then `horizon` future frames. Observed frames carry
// measurements; future frames only get synthetic ones during scoring.
struct EstimationWindow {
  int k_past = 0;
  int horizon = 0;
  std::vector<Pose> poses;
  std::vector<std::optional<FrameObservation>> observations;
  double lift_scale = 1.0;
  int first_frame = 0;  // sequence index of poses[0]

  EstimationWindow() = default;
  EstimationWindow(int k_past, int horizon);

  int length() const { return static_cast<int>(poses.size()); }
  int current_index() const { return k_past; }
  int middle_index() const { return k_past / 2; }

  Eigen::VectorXd variables() const;
  void set_variables(const Eigen::VectorXd& x);
  void validate() const;
};

struct EnergyBreakdown {
  double proj = 0.0;
  double lift = 0.0;
  double smooth = 0.0;
  double bone = 0.0;

  double total() const { return proj + lift + smooth + bone; }
};

// E_pose over a window with fixed measurements, evaluated at arbitrary pose
// variables. The flat variable vector is frame-major, 45 values per frame.
class PoseEnergy {
 public:
  PoseEnergy(const EstimationWindow& window, const EnergyWeights& w,
             const BoneLengths& calib, const Intrinsics& k,
             const BoneTopology& topo = BoneTopology::standard());

  int num_variables() const { return num_frames_ * kPoseDim; }

  EnergyBreakdown breakdown(const Eigen::VectorXd& x) const;
  double value(const Eigen::VectorXd& x) const { return breakdown(x).total(); }
  // Energy plus analytic gradient.
  double value_and_gradient(const Eigen::VectorXd& x,
                            Eigen::VectorXd& grad) const;

 private:
  struct Observed {
    int frame;
    CameraPose camera;
    Joints2d pixels;
    JointMatrix lift_world;  // m * R^T * L
  };

  int num_frames_;
  EnergyWeights w_;
  BoneLengths calib_;
  Intrinsics k_;
  const BoneTopology* topo_;
  std::vector<Observed> observed_;
};

EnergyBreakdown energy_pose(const EstimationWindow& window,
                            const EnergyWeights& w, const BoneLengths& calib,
                            const Intrinsics& k);

double fit_lift_scale(const Detection3D& detection, const BoneLengths& calib,
                      const BoneTopology& topo = BoneTopology::standard());

struct MinimizeOptions {
  DescentOptions descent;
  // Per window frame: true if the frame's pose may change. Empty frees all.
  std::vector<bool> free_frames;
};

struct MinimizeResult {
  EstimationWindow window;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  int iterations = 0;
  double grad_inf_norm = 0.0;
  bool converged = false;
};

MinimizeResult minimize(const EstimationWindow& window, const EnergyWeights& w,
                        const BoneLengths& calib, const Intrinsics& k,
                        const MinimizeOptions& opts = {});

// Planar depth at which the back-projected detection has average human height.
double initialization_depth(const Detection2D& detection, const CameraPose& cam,
                            const Intrinsics& k);

Pose initialize(const Detection2D& first_detection, const CameraPose& cam,
                const Intrinsics& k);

// Next-frame initial guess: the last estimate moved by the last velocity.
Pose extrapolate_constant_velocity(const Pose& previous, const Pose& last);

struct CalibrationResult {
  BoneLengths bone_lengths;
  Pose pose;
  double residual = 0.0;
  int iterations = 0;
};

struct CalibrationOptions {
  DescentOptions descent{1e-9, 20000, 1e-4, 0.5, 60};
  double omega_symmetry = 1.0;
};

// Recovers the static skeleton seen from several views by minimizing the
// projection error over every frame plus a left/right symmetry penalty.
CalibrationResult calibrate(
    const std::vector<std::pair<Detection2D, CameraPose>>& frames,
    const Intrinsics& k, const EnergyWeights& w,
    const CalibrationOptions& opts = {});

}  // namespace activemocap
