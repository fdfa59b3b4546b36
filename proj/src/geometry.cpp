#include "activemocap/geometry.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <string>

#include "activemocap/errors.hpp"

namespace activemocap {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ConfigError("focal lengths must be positive");
  }
  if (width <= 0 || height <= 0 || cx < 0.0 || cx > width || cy < 0.0 ||
      cy > height) {
    throw ConfigError("principal point must lie inside the image");
  }
}

Eigen::Vector2d project_point(const Eigen::Vector3d& world,
                              const CameraPose& cam, const Intrinsics& k) {
  const Eigen::Vector3d p = cam.to_camera(world);
  if (!(p.z() > kDepthEpsilon)) {
    throw NonPositiveDepth("point at depth " + std::to_string(p.z()) +
                           " is not in front of the camera");
  }
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

Eigen::Matrix<double, 2, 3> project_point_jacobian(const Eigen::Vector3d& world,
                                                   const CameraPose& cam,
                                                   const Intrinsics& k) {
  const Eigen::Vector3d p = cam.to_camera(world);
  if (!(p.z() > kDepthEpsilon)) {
    throw NonPositiveDepth("point at depth " + std::to_string(p.z()) +
                           " is not in front of the camera");
  }
  const double iz = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> dpix_dcam;
  dpix_dcam << k.fx * iz, 0.0, -k.fx * p.x() * iz * iz,  //
      0.0, k.fy * iz, -k.fy * p.y() * iz * iz;
  return dpix_dcam * cam.world_to_camera;
}

Joints2d project(const Pose& pose, const CameraPose& cam, const Intrinsics& k) {
  Joints2d out;
  for (int j = 0; j < kNumJoints; ++j) {
    out.row(j) = project_point(pose.joint(j), cam, k).transpose();
  }
  return out;
}

Pose back_project(const Joints2d& joints2d, const CameraPose& cam,
                  const Intrinsics& k, double depth) {
  if (!(depth > kDepthEpsilon)) {
    throw NonPositiveDepth("back-projection depth must be positive");
  }
  const Eigen::Matrix3d camera_to_world = cam.world_to_camera.transpose();
  Pose out;
  for (int j = 0; j < kNumJoints; ++j) {
    const Eigen::Vector3d ray((joints2d(j, 0) - k.cx) / k.fx,
                              (joints2d(j, 1) - k.cy) / k.fy, 1.0);
    out.joints.row(j) = (cam.position + camera_to_world * (depth * ray))
                            .transpose();
  }
  return out;
}

CameraPose look_at(const Eigen::Vector3d& position,
                   const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
  const Eigen::Vector3d view = target - position;
  if (view.norm() < 1e-12) {
    throw DegenerateLookAt("camera position coincides with its target");
  }
  const Eigen::Vector3d forward = view.normalized();
  const Eigen::Vector3d right_raw = forward.cross(up);
  if (right_raw.norm() < 1e-9 * up.norm() || up.norm() < 1e-12) {
    throw DegenerateLookAt("view direction is parallel to the up vector");
  }
  const Eigen::Vector3d right = right_raw.normalized();
  const Eigen::Vector3d down = forward.cross(right);
  CameraPose cam;
  cam.position = position;
  cam.world_to_camera.row(0) = right.transpose();
  cam.world_to_camera.row(1) = down.transpose();
  cam.world_to_camera.row(2) = forward.transpose();
  return cam;
}

double azimuth_deg(const Eigen::Vector3d& position,
                   const Eigen::Vector3d& center) {
  const Eigen::Vector3d d = position - center;
  return std::atan2(d.y(), d.x()) * 180.0 / std::numbers::pi;
}

double elevation_deg(const Eigen::Vector3d& position,
                     const Eigen::Vector3d& center) {
  const Eigen::Vector3d d = position - center;
  return std::atan2(d.z(), d.head<2>().norm()) * 180.0 / std::numbers::pi;
}

}  // namespace activemocap
