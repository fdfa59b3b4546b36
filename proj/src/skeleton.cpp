#include "activemocap/skeleton.hpp"

#include <cmath>
#include <string>

#include "activemocap/errors.hpp"

namespace activemocap {

namespace {

constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "hip",        "neck",        "head",        "l_shoulder", "l_elbow",
    "l_wrist",    "r_shoulder",  "r_elbow",     "r_wrist",    "l_hip",
    "l_knee",     "l_ankle",     "r_hip",       "r_knee",     "r_ankle"};

// Bone indices of the standard topology, referenced by skeleton_height().
enum StandardBone : int {
  kSpine = 0,
  kNeckHead = 1,
  kLeftPelvis = 8,
  kLeftThigh = 9,
  kLeftShin = 10,
  kRightPelvis = 11,
  kRightThigh = 12,
  kRightShin = 13,
};

}  // namespace

std::string_view joint_name(int joint) {
  if (joint < 0 || joint >= kNumJoints) {
    throw TopologyError("joint index out of range: " + std::to_string(joint));
  }
  return kJointNames[static_cast<std::size_t>(joint)];
}

Pose::Pose(const JointMatrix& j) : joints(j) {}

BoneTopology::BoneTopology(std::vector<Bone> bones,
                           std::vector<std::pair<int, int>> mirror_pairs)
    : bones_(std::move(bones)), mirror_pairs_(std::move(mirror_pairs)) {
  // Tree rooted at the hip: every non-hip joint has exactly one parent and
  // following parents always reaches the hip.
  std::array<int, kNumJoints> parent;
  parent.fill(-1);
  for (const Bone& b : bones_) {
    if (b.parent < 0 || b.parent >= kNumJoints || b.child < 0 ||
        b.child >= kNumJoints || b.child == kHip || parent[b.child] != -1) {
      throw TopologyError("invalid bone list");
    }
    parent[b.child] = b.parent;
  }
  for (int j = 0; j < kNumJoints; ++j) {
    int cur = j;
    for (int steps = 0; cur != kHip; ++steps) {
      if (cur < 0 || steps > kNumJoints) {
        throw TopologyError("bones do not form a tree rooted at the hip");
      }
      cur = parent[cur];
    }
  }
  const int n = static_cast<int>(bones_.size());
  for (const auto& [l, r] : mirror_pairs_) {
    if (l == r || l < 0 || r < 0 || l >= n || r >= n) {
      throw TopologyError("invalid mirror pair");
    }
  }
}

const BoneTopology& BoneTopology::standard() {
  static const BoneTopology topo(
      {
          {kHip, kNeck},                  // 0 spine
          {kNeck, kHead},                 // 1
          {kNeck, kLeftShoulder},         // 2
          {kLeftShoulder, kLeftElbow},    // 3
          {kLeftElbow, kLeftWrist},       // 4
          {kNeck, kRightShoulder},        // 5
          {kRightShoulder, kRightElbow},  // 6
          {kRightElbow, kRightWrist},     // 7
          {kHip, kLeftHip},               // 8
          {kLeftHip, kLeftKnee},          // 9
          {kLeftKnee, kLeftAnkle},        // 10
          {kHip, kRightHip},              // 11
          {kRightHip, kRightKnee},        // 12
          {kRightKnee, kRightAnkle},      // 13
      },
      {{2, 5}, {3, 6}, {4, 7}, {8, 11}, {9, 12}, {10, 13}});
  return topo;
}

BoneLengths compute_bone_lengths(const Pose& pose, const BoneTopology& topo) {
  BoneLengths out;
  out.lengths.reserve(topo.size());
  for (const Bone& b : topo.bones()) {
    out.lengths.push_back(
        (pose.joints.row(b.parent) - pose.joints.row(b.child)).norm());
  }
  return out;
}

double skeleton_height(const BoneLengths& l) {
  const double left = l[kLeftShin] + l[kLeftThigh] + l[kLeftPelvis];
  const double right = l[kRightShin] + l[kRightThigh] + l[kRightPelvis];
  return 0.5 * (left + right) + l[kSpine] + l[kNeckHead];
}

double mpjpe(const Pose& estimated, const Pose& truth) {
  return (estimated.joints - truth.joints).rowwise().norm().mean();
}

Pose template_pose() {
  JointMatrix j;
  // x forward, y left, z up.
  j << 0.0, 0.0, 0.95,     // hip
      0.0, 0.0, 1.50,      // neck
      0.0, 0.0, 1.70,      // head
      0.0, 0.18, 1.48,     // l_shoulder
      0.0, 0.20, 1.20,     // l_elbow
      0.0, 0.21, 0.95,     // l_wrist
      0.0, -0.18, 1.48,    // r_shoulder
      0.0, -0.20, 1.20,    // r_elbow
      0.0, -0.21, 0.95,    // r_wrist
      0.0, 0.10, 0.95,     // l_hip
      0.0, 0.10, 0.50,     // l_knee
      0.0, 0.10, 0.05,     // l_ankle
      0.0, -0.10, 0.95,    // r_hip
      0.0, -0.10, 0.50,    // r_knee
      0.0, -0.10, 0.05;    // r_ankle
  return Pose(j);
}

}  // namespace activemocap
