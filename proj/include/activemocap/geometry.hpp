#pragma once

#include <Eigen/Core>

#include "activemocap/skeleton.hpp"

namespace activemocap {

inline constexpr double kDepthEpsilon = 1e-3;

// Camera frame convention: x right, y down, z along the optical axis.
struct CameraPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  // Rotation taking world directions to camera directions.
  Eigen::Matrix3d world_to_camera = Eigen::Matrix3d::Identity();

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return world_to_camera * (world - position);
  }
  // Optical axis expressed in world coordinates.
  Eigen::Vector3d optical_axis() const {
    return world_to_camera.row(2).transpose();
  }
};

struct Intrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  void validate() const;
};

Eigen::Vector2d project_point(const Eigen::Vector3d& world,
                              const CameraPose& cam, const Intrinsics& k);

// d(pixel)/d(world point), evaluated at `world`.
Eigen::Matrix<double, 2, 3> project_point_jacobian(const Eigen::Vector3d& world,
                                                   const CameraPose& cam,
                                                   const Intrinsics& k);

Joints2d project(const Pose& pose, const CameraPose& cam, const Intrinsics& k);

// Lifts each pixel along its viewing ray to planar depth `depth` (the camera
// frame z coordinate).
Pose back_project(const Joints2d& joints2d, const CameraPose& cam,
                  const Intrinsics& k, double depth);

// Camera at `position` looking at `target` with zero roll with respect to
// `up`. World up defaults to +z.
CameraPose look_at(const Eigen::Vector3d& position,
                   const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());

// Azimuth (atan2 in the xy-plane) and elevation of `position` seen from
// `center`, in degrees.
double azimuth_deg(const Eigen::Vector3d& position,
                   const Eigen::Vector3d& center);
double elevation_deg(const Eigen::Vector3d& position,
                     const Eigen::Vector3d& center);

}  // namespace activemocap
