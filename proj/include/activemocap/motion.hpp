#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "activemocap/skeleton.hpp"

namespace activemocap {

// Ground-truth subject motion sampled at a fixed rate.
struct MotionSequence {
  std::vector<Pose> frames;
  double fps = 5.0;
  std::string name;

  MotionSequence() = default;
  MotionSequence(std::vector<Pose> frames, double fps, std::string name);

  std::size_t size() const { return frames.size(); }
  const Pose& operator[](std::size_t i) const { return frames[i]; }

  // Largest deviation of any bone's length from its first-frame value.
  double max_bone_drift(const BoneTopology& topo = BoneTopology::standard()) const;
};

// CSV layout: header `frame,fps,j0_x,j0_y,j0_z,...,j14_z`, one row per frame,
// shortest round-trip decimal representation for every double.
MotionSequence load_sequence_csv(const std::filesystem::path& path,
                                 double max_bone_drift = 1e-3);
void save_sequence_csv(const MotionSequence& seq,
                       const std::filesystem::path& path);

MotionSequence synth_walk(int n_frames, double speed, double rate);
MotionSequence synth_circle_run(int n_frames, double radius,
                                double angular_speed, double rate);
MotionSequence synth_twirl_in_place(int n_frames, double angular_speed,
                                    double rate);
// The template pose held still; used for calibration and static tests.
MotionSequence synth_static(int n_frames, double rate);

}  // namespace activemocap
