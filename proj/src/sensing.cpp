#include "activemocap/sensing.hpp"

#include <string>

#include "activemocap/errors.hpp"

namespace activemocap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kChannel2d = 0x2d;
constexpr std::uint64_t kChannel3d = 0x3d;

}  // namespace

std::mt19937_64 noise_stream(std::uint64_t seed, int frame, int candidate,
                             std::uint64_t channel) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(frame)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(candidate)));
  h = splitmix64(h ^ channel);
  return std::mt19937_64(h);
}

bool is_visible(const Pose& pose, const CameraPose& cam, const Intrinsics& k,
                double margin) {
  for (int j = 0; j < kNumJoints; ++j) {
    const Eigen::Vector3d p = cam.to_camera(pose.joint(j));
    if (!(p.z() > kDepthEpsilon)) return false;
    const double u = k.fx * p.x() / p.z() + k.cx;
    const double v = k.fy * p.y() / p.z() + k.cy;
    if (u < -margin || u > k.width + margin || v < -margin ||
        v > k.height + margin) {
      return false;
    }
  }
  return true;
}

Detection2D detect_2d(const Pose& truth, const CameraPose& cam,
                      const Intrinsics& k, const NoiseModel& noise, int frame,
                      int candidate) {
  if (!is_visible(truth, cam, k, noise.visibility_margin)) {
    throw SubjectNotVisible("subject leaves the image at frame " +
                            std::to_string(frame));
  }
  Detection2D det;
  det.frame = frame;
  det.joints2d = project(truth, cam, k);
  if (noise.sigma_2d > 0.0) {
    auto rng = noise_stream(noise.seed, frame, candidate, kChannel2d);
    std::normal_distribution<double> gauss(0.0, noise.sigma_2d);
    for (int i = 0; i < det.joints2d.size(); ++i) det.joints2d.data()[i] += gauss(rng);
  }
  return det;
}

Detection3D detect_3d_relative(const Pose& truth, const CameraPose& cam,
                               const NoiseModel& noise, double scale_corruption,
                               int frame, int candidate) {
  Detection3D det;
  det.frame = frame;
  const Eigen::RowVector3d hip = truth.joints.row(kHip);
  for (int j = 0; j < kNumJoints; ++j) {
    det.joints3d_rel.row(j) =
        scale_corruption *
        (cam.world_to_camera * (truth.joints.row(j) - hip).transpose()).transpose();
  }
  if (noise.sigma_3d > 0.0) {
    auto rng = noise_stream(noise.seed, frame, candidate, kChannel3d);
    std::normal_distribution<double> gauss(0.0, noise.sigma_3d);
    for (int j = 1; j < kNumJoints; ++j) {
      for (int c = 0; c < 3; ++c) det.joints3d_rel(j, c) += gauss(rng);
    }
  }
  return det;
}

}  // namespace activemocap
