#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace activemocap {

inline constexpr int kNumJoints = 15;
inline constexpr int kPoseDim = kNumJoints * 3;

// Joint order used everywhere (detections, CSV columns, optimizer variables).
// Index 0 is the hip (pelvis center); all hip-relative quantities use it.
enum Joint : int {
  kHip = 0,
  kNeck,
  kHead,
  kLeftShoulder,
  kLeftElbow,
  kLeftWrist,
  kRightShoulder,
  kRightElbow,
  kRightWrist,
  kLeftHip,
  kLeftKnee,
  kLeftAnkle,
  kRightHip,
  kRightKnee,
  kRightAnkle,
};

std::string_view joint_name(int joint);

// Row-major so that the 45 coordinates of a pose are contiguous as
// x0 y0 z0 x1 y1 z1 ...
using JointMatrix = Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor>;
using Joints2d = Eigen::Matrix<double, kNumJoints, 2, Eigen::RowMajor>;

// One frame's absolute skeleton in world coordinates (meters).
struct Pose {
  JointMatrix joints = JointMatrix::Zero();

  Pose() = default;
  explicit Pose(const JointMatrix& j);

  Eigen::Vector3d joint(int i) const { return joints.row(i).transpose(); }
  Eigen::Vector3d hip() const { return joint(kHip); }
  bool is_finite() const { return joints.allFinite(); }

  // Flat 45-vector view in joint-major order.
  Eigen::Map<const Eigen::Matrix<double, kPoseDim, 1>> flat() const {
    return Eigen::Map<const Eigen::Matrix<double, kPoseDim, 1>>(joints.data());
  }
};

struct Bone {
  int parent;
  int child;
};

class BoneTopology {
 public:
  BoneTopology(std::vector<Bone> bones,
               std::vector<std::pair<int, int>> mirror_pairs);

  // The fixed 14-bone tree over the joint order above.
  static const BoneTopology& standard();

  const std::vector<Bone>& bones() const { return bones_; }
  const std::vector<std::pair<int, int>>& mirror_pairs() const {
    return mirror_pairs_;
  }
  std::size_t size() const { return bones_.size(); }

 private:
  std::vector<Bone> bones_;
  std::vector<std::pair<int, int>> mirror_pairs_;
};

struct BoneLengths {
  std::vector<double> lengths;

  double operator[](std::size_t b) const { return lengths[b]; }
  std::size_t size() const { return lengths.size(); }
};

BoneLengths compute_bone_lengths(const Pose& pose, const BoneTopology& topo);

// Standing height implied by bone lengths: ankle-knee-hip chain (averaged over
// both legs) plus pelvis offset, spine and neck-head bones.
double skeleton_height(const BoneLengths& lengths);

// Mean per-joint Euclidean distance, meters.
double mpjpe(const Pose& estimated, const Pose& truth);

// Rest-pose skeleton, 1.75 m tall, standing at the origin facing +x with the
// hip 0.95 m above the ground. World up is +z.
Pose template_pose();

}  // namespace activemocap
