#pragma once

#include <cstdint>
#include <random>

#include "activemocap/geometry.hpp"
#include "activemocap/skeleton.hpp"

namespace activemocap {

// Additive Gaussian detection noise. The draw for a measurement is a pure
// function of (seed, frame, candidate), so two rollouts that look at the
// subject from the same view at the same frame see the same detection.
struct NoiseModel {
  double sigma_2d = 3.0;   // pixels
  double sigma_3d = 0.03;  // meters
  std::uint64_t seed = 0;
  // Joints may project up to this many pixels outside the image.
  double visibility_margin = 0.0;
};

struct Detection2D {
  Joints2d joints2d = Joints2d::Zero();
  int frame = 0;
};

// Hip-relative joints in the detecting camera's frame, scale unknown.
struct Detection3D {
  JointMatrix joints3d_rel = JointMatrix::Zero();
  int frame = 0;
};

std::mt19937_64 noise_stream(std::uint64_t seed, int frame, int candidate,
                             std::uint64_t channel);

bool is_visible(const Pose& pose, const CameraPose& cam, const Intrinsics& k,
                double margin);

Detection2D detect_2d(const Pose& truth, const CameraPose& cam,
                      const Intrinsics& k, const NoiseModel& noise, int frame,
                      int candidate = 0);

Detection3D detect_3d_relative(const Pose& truth, const CameraPose& cam,
                               const NoiseModel& noise, double scale_corruption,
                               int frame, int candidate = 0);

}  // namespace activemocap
