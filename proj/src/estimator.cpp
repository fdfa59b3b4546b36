#include "activemocap/estimator.hpp"

#include <cmath>
#include <string>

#include "activemocap/errors.hpp"

namespace activemocap {

namespace {

using Vec3 = Eigen::Vector3d;

Vec3 joint_at(const Eigen::VectorXd& x, int frame, int joint) {
  return x.segment<3>(frame * kPoseDim + joint * 3);
}

auto grad_at(Eigen::VectorXd& g, int frame, int joint) {
  return g.segment<3>(frame * kPoseDim + joint * 3);
}

}  // namespace

void EnergyWeights::validate() const {
  if (omega_p < 0.0 || omega_s < 0.0 || omega_l < 0.0 || omega_b < 0.0) {
    throw ConfigError("energy weights must be nonnegative");
  }
}

EstimationWindow::EstimationWindow(int past, int future)
    : k_past(past),
      horizon(future),
      poses(static_cast<std::size_t>(past + 1 + future)),
      observations(static_cast<std::size_t>(past + 1 + future)) {}

Eigen::VectorXd EstimationWindow::variables() const {
  Eigen::VectorXd x(length() * kPoseDim);
  for (int i = 0; i < length(); ++i) {
    x.segment<kPoseDim>(i * kPoseDim) = poses[i].flat();
  }
  return x;
}

void EstimationWindow::set_variables(const Eigen::VectorXd& x) {
  for (int i = 0; i < length(); ++i) {
    Eigen::Map<Eigen::Matrix<double, kPoseDim, 1>>(poses[i].joints.data()) =
        x.segment<kPoseDim>(i * kPoseDim);
  }
}

void EstimationWindow::validate() const {
  if (k_past < 0 || horizon < 0 || length() < 2 ||
      length() != k_past + 1 + horizon ||
      observations.size() != poses.size()) {
    throw ConfigError("malformed estimation window");
  }
}

PoseEnergy::PoseEnergy(const EstimationWindow& window, const EnergyWeights& w,
                       const BoneLengths& calib, const Intrinsics& k,
                       const BoneTopology& topo)
    : num_frames_(window.length()), w_(w), calib_(calib), k_(k), topo_(&topo) {
  if (calib_.size() != topo.size()) {
    throw TopologyError("calibrated bone lengths do not match the topology");
  }
  for (int i = 0; i < window.length(); ++i) {
    const auto& obs = window.observations[i];
    if (!obs) continue;
    Observed o{i, obs->camera, obs->det2d.joints2d, {}};
    const Eigen::Matrix3d to_world = obs->camera.world_to_camera.transpose();
    for (int j = 0; j < kNumJoints; ++j) {
      o.lift_world.row(j) = window.lift_scale *
                            (to_world * obs->det3d.joints3d_rel.row(j).transpose())
                                .transpose();
    }
    observed_.push_back(std::move(o));
  }
}

EnergyBreakdown PoseEnergy::breakdown(const Eigen::VectorXd& x) const {
  EnergyBreakdown e;
  for (const Observed& o : observed_) {
    const Vec3 hip = joint_at(x, o.frame, kHip);
    for (int j = 0; j < kNumJoints; ++j) {
      const Vec3 p = joint_at(x, o.frame, j);
      const Eigen::Vector2d r =
          o.pixels.row(j).transpose() - project_point(p, o.camera, k_);
      e.proj += r.squaredNorm();
      e.lift += (o.lift_world.row(j).transpose() - (p - hip)).squaredNorm();
    }
  }
  for (int i = 0; i + 1 < num_frames_; ++i) {
    e.smooth += (x.segment<kPoseDim>((i + 1) * kPoseDim) -
                 x.segment<kPoseDim>(i * kPoseDim))
                    .squaredNorm();
  }
  const auto& bones = topo_->bones();
  for (int i = 0; i < num_frames_; ++i) {
    for (std::size_t b = 0; b < bones.size(); ++b) {
      const double len =
          (joint_at(x, i, bones[b].parent) - joint_at(x, i, bones[b].child)).norm();
      const double d = len - calib_[b];
      e.bone += d * d;
    }
  }
  e.proj *= w_.omega_p;
  e.lift *= w_.omega_l;
  e.smooth *= w_.omega_s;
  e.bone *= w_.omega_b;
  return e;
}

double PoseEnergy::value_and_gradient(const Eigen::VectorXd& x,
                                      Eigen::VectorXd& grad) const {
  grad.setZero(x.size());
  double proj = 0.0, lift = 0.0, smooth = 0.0, bone = 0.0;

  for (const Observed& o : observed_) {
    const Vec3 hip = joint_at(x, o.frame, kHip);
    Vec3 hip_grad = Vec3::Zero();
    for (int j = 0; j < kNumJoints; ++j) {
      const Vec3 p = joint_at(x, o.frame, j);
      const Vec3 pc = o.camera.to_camera(p);
      if (!(pc.z() > kDepthEpsilon)) {
        throw NonPositiveDepth("joint behind camera in window frame " +
                               std::to_string(o.frame));
      }
      const double iz = 1.0 / pc.z();
      const Eigen::Vector2d r(o.pixels(j, 0) - (k_.fx * pc.x() * iz + k_.cx),
                              o.pixels(j, 1) - (k_.fy * pc.y() * iz + k_.cy));
      proj += r.squaredNorm();
      // d(pixel)/d(camera point), chained through the rotation.
      const Vec3 dcam(-2.0 * w_.omega_p * r.x() * k_.fx * iz,
                      -2.0 * w_.omega_p * r.y() * k_.fy * iz,
                      2.0 * w_.omega_p * iz * iz *
                          (r.x() * k_.fx * pc.x() + r.y() * k_.fy * pc.y()));
      grad_at(grad, o.frame, j) += o.camera.world_to_camera.transpose() * dcam;

      const Vec3 e = o.lift_world.row(j).transpose() - (p - hip);
      lift += e.squaredNorm();
      grad_at(grad, o.frame, j) -= 2.0 * w_.omega_l * e;
      hip_grad += 2.0 * w_.omega_l * e;
    }
    grad_at(grad, o.frame, kHip) += hip_grad;
  }

  for (int i = 0; i + 1 < num_frames_; ++i) {
    const Eigen::Matrix<double, kPoseDim, 1> v =
        x.segment<kPoseDim>((i + 1) * kPoseDim) - x.segment<kPoseDim>(i * kPoseDim);
    smooth += v.squaredNorm();
    grad.segment<kPoseDim>((i + 1) * kPoseDim) += 2.0 * w_.omega_s * v;
    grad.segment<kPoseDim>(i * kPoseDim) -= 2.0 * w_.omega_s * v;
  }

  const auto& bones = topo_->bones();
  for (int i = 0; i < num_frames_; ++i) {
    for (std::size_t b = 0; b < bones.size(); ++b) {
      const Vec3 diff = joint_at(x, i, bones[b].parent) - joint_at(x, i, bones[b].child);
      const double len = diff.norm();
      const double d = len - calib_[b];
      bone += d * d;
      if (len > 1e-12) {
        const Vec3 g = 2.0 * w_.omega_b * d / len * diff;
        grad_at(grad, i, bones[b].parent) += g;
        grad_at(grad, i, bones[b].child) -= g;
      }
    }
  }
  return w_.omega_p * proj + w_.omega_l * lift + w_.omega_s * smooth +
         w_.omega_b * bone;
}

EnergyBreakdown energy_pose(const EstimationWindow& window,
                            const EnergyWeights& w, const BoneLengths& calib,
                            const Intrinsics& k) {
  window.validate();
  return PoseEnergy(window, w, calib, k).breakdown(window.variables());
}

double fit_lift_scale(const Detection3D& detection, const BoneLengths& calib,
                      const BoneTopology& topo) {
  const BoneLengths detected =
      compute_bone_lengths(Pose(detection.joints3d_rel), topo);
  double num = 0.0, den = 0.0;
  for (std::size_t b = 0; b < topo.size(); ++b) {
    num += detected[b] * calib[b];
    den += detected[b] * detected[b];
  }
  if (den < 1e-12) {
    throw DegenerateDetection("3D detection has (near) zero bone lengths");
  }
  return num / den;
}

MinimizeResult minimize(const EstimationWindow& window, const EnergyWeights& w,
                        const BoneLengths& calib, const Intrinsics& k,
                        const MinimizeOptions& opts) {
  window.validate();
  w.validate();
  const PoseEnergy energy(window, w, calib, k);
  Eigen::VectorXd mask;
  if (!opts.free_frames.empty()) {
    if (static_cast<int>(opts.free_frames.size()) != window.length()) {
      throw ConfigError("free_frames must have one entry per window frame");
    }
    mask.setZero(energy.num_variables());
    for (int i = 0; i < window.length(); ++i) {
      if (opts.free_frames[i]) mask.segment<kPoseDim>(i * kPoseDim).setOnes();
    }
  }
  const Objective f = [&energy](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) return energy.value_and_gradient(x, *g);
    return energy.value(x);
  };
  const DescentResult d = gradient_descent(f, window.variables(), opts.descent, mask);
  MinimizeResult res;
  res.window = window;
  res.window.set_variables(d.x);
  res.initial_energy = d.initial_value;
  res.final_energy = d.final_value;
  res.iterations = d.iterations;
  res.grad_inf_norm = d.grad_inf_norm;
  res.converged = d.converged;
  return res;
}

double initialization_depth(const Detection2D& detection, const CameraPose& cam,
                            const Intrinsics& k) {
  // Planar back-projection scales every bone linearly with depth, so the
  // height-matching depth has a closed form.
  const Pose unit = back_project(detection.joints2d, cam, k, 1.0);
  const double unit_height =
      skeleton_height(compute_bone_lengths(unit, BoneTopology::standard()));
  if (!std::isfinite(unit_height) || unit_height < 1e-9) {
    throw DegenerateDetection("2D detection has no spatial extent");
  }
  return kAverageHumanHeight / unit_height;
}

Pose initialize(const Detection2D& first_detection, const CameraPose& cam,
                const Intrinsics& k) {
  return back_project(first_detection.joints2d, cam, k,
                      initialization_depth(first_detection, cam, k));
}

Pose extrapolate_constant_velocity(const Pose& previous, const Pose& last) {
  return Pose(last.joints + (last.joints - previous.joints));
}

CalibrationResult calibrate(
    const std::vector<std::pair<Detection2D, CameraPose>>& frames,
    const Intrinsics& k, const EnergyWeights& w, const CalibrationOptions& opts) {
  int distinct = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    bool seen = false;
    for (std::size_t j = 0; j < i && !seen; ++j) {
      seen = (frames[i].second.position - frames[j].second.position).norm() < 1e-6 &&
             (frames[i].second.world_to_camera - frames[j].second.world_to_camera)
                     .norm() < 1e-9;
    }
    if (!seen) ++distinct;
  }
  if (distinct < 2) {
    throw InsufficientViews("calibration needs at least 2 distinct viewpoints, got " +
                            std::to_string(distinct));
  }
  const BoneTopology& topo = BoneTopology::standard();
  const auto& bones = topo.bones();
  const double wp = w.omega_p;
  const double ws = opts.omega_symmetry;

  const Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    double proj = 0.0;
    if (g) g->setZero(kPoseDim);
    for (const auto& [det, cam] : frames) {
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 p = x.segment<3>(3 * j);
        const Eigen::Vector2d r =
            det.joints2d.row(j).transpose() - project_point(p, cam, k);
        proj += r.squaredNorm();
        if (g) {
          g->segment<3>(3 * j) -=
              2.0 * wp * project_point_jacobian(p, cam, k).transpose() * r;
        }
      }
    }
    double sym = 0.0;
    for (const auto& [lb, rb] : topo.mirror_pairs()) {
      const Vec3 dl = x.segment<3>(3 * bones[lb].parent) - x.segment<3>(3 * bones[lb].child);
      const Vec3 dr = x.segment<3>(3 * bones[rb].parent) - x.segment<3>(3 * bones[rb].child);
      const double ll = dl.norm(), lr = dr.norm();
      const double d = ll - lr;
      sym += d * d;
      if (g && ll > 1e-12 && lr > 1e-12) {
        const Vec3 gl = 2.0 * ws * d / ll * dl;
        const Vec3 gr = -2.0 * ws * d / lr * dr;
        g->segment<3>(3 * bones[lb].parent) += gl;
        g->segment<3>(3 * bones[lb].child) -= gl;
        g->segment<3>(3 * bones[rb].parent) += gr;
        g->segment<3>(3 * bones[rb].child) -= gr;
      }
    }
    return wp * proj + ws * sym;
  };

  const Pose init = initialize(frames.front().first, frames.front().second, k);
  Eigen::VectorXd x0 = init.flat();
  const DescentResult d = gradient_descent(f, std::move(x0), opts.descent);
  CalibrationResult res;
  Eigen::Map<Eigen::Matrix<double, kPoseDim, 1>>(res.pose.joints.data()) = d.x;
  res.bone_lengths = compute_bone_lengths(res.pose, topo);
  res.residual = d.final_value;
  res.iterations = d.iterations;
  return res;
}

}  // namespace activemocap
