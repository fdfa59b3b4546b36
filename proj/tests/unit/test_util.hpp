#pragma once

#include <Eigen/Geometry>
#include <random>

#include "activemocap/geometry.hpp"
#include "activemocap/skeleton.hpp"

namespace activemocap::testing {

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

// Template pose with every joint jittered, placed somewhere near the origin.
inline Pose random_pose(std::mt19937_64& rng, double jitter = 0.05) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Pose p = template_pose();
  for (int j = 0; j < kNumJoints; ++j) {
    p.joints.row(j) += jitter * Eigen::RowVector3d(u(rng), u(rng), u(rng));
  }
  const Eigen::RowVector3d shift(u(rng), u(rng), 0.0);
  p.joints.rowwise() += shift;
  return p;
}

// Camera on a sphere of radius `distance` around `target`, above the ground.
inline CameraPose random_camera(std::mt19937_64& rng, const Eigen::Vector3d& target,
                                double distance = 7.0) {
  std::uniform_real_distribution<double> az(-3.14159, 3.14159);
  std::uniform_real_distribution<double> el(-0.3, 0.6);
  const double a = az(rng);
  const double e = el(rng);
  const Eigen::Vector3d dir(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a),
                            std::sin(e));
  return look_at(target + distance * dir, target);
}

}  // namespace activemocap::testing
