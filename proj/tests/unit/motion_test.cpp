#include "activemocap/motion.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

#include <fstream>

#include "activemocap/errors.hpp"

namespace activemocap {
namespace {

class MotionCsvTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("activemocap_motion_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path write(const std::string& name, const std::string& text) {
    const auto path = dir_ / name;
    std::ofstream(path) << text;
    return path;
  }

  static std::string header() {
    std::string h = "frame,fps";
    for (int j = 0; j < kNumJoints; ++j) {
      for (const char* c : {"_x", "_y", "_z"}) h += ",j" + std::to_string(j) + c;
    }
    return h + "\n";
  }

  static std::string row(int frame, const Pose& p, int drop = 0) {
    std::string r = std::to_string(frame) + ",5";
    for (int i = 0; i < kPoseDim - drop; ++i) r += "," + std::to_string(p.flat()(i));
    return r + "\n";
  }

  std::filesystem::path dir_;
};

TEST_F(MotionCsvTest, TwoIdenticalRowsGiveStaticSequence) {
  const Pose p = template_pose();
  const auto path = write("static.csv", header() + row(0, p) + row(1, p));
  const MotionSequence seq = load_sequence_csv(path);
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_DOUBLE_EQ(seq.fps, 5.0);
  EXPECT_EQ(mpjpe(seq[0], seq[1]), 0.0);
}

TEST_F(MotionCsvTest, WrongArityIsParseError) {
  const Pose p = template_pose();
  const auto path = write("short.csv", header() + row(0, p, 1) + row(1, p, 1));
  EXPECT_THROW(load_sequence_csv(path), ParseError);
}

TEST_F(MotionCsvTest, GarbageNumberIsParseError) {
  const Pose p = template_pose();
  std::string bad = row(1, p);
  bad.replace(bad.find(",5,") + 3, 1, "x");
  EXPECT_THROW(load_sequence_csv(write("bad.csv", header() + row(0, p) + bad)), ParseError);
}

TEST_F(MotionCsvTest, BoneDriftIsTopologyError) {
  const Pose p = template_pose();
  Pose q = p;
  q.joints(kHead, 2) += 0.05;
  EXPECT_THROW(load_sequence_csv(write("drift.csv", header() + row(0, p) + row(1, q))),
               TopologyError);
}

TEST_F(MotionCsvTest, MissingFileIsIoError) {
  EXPECT_THROW(load_sequence_csv(dir_ / "absent.csv"), IoError);
}

TEST_F(MotionCsvTest, SaveLoadIsBitExact) {
  const MotionSequence seq = synth_circle_run(12, 3.0, 0.6, 5.0);
  const auto path = dir_ / "circle.csv";
  save_sequence_csv(seq, path);
  const MotionSequence back = load_sequence_csv(path);
  ASSERT_EQ(back.size(), seq.size());
  EXPECT_EQ(back.fps, seq.fps);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    EXPECT_TRUE((back[i].joints.array() == seq[i].joints.array()).all()) << "frame " << i;
  }
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first + "\n", header());
}

TEST(SynthMotionTest, WalkAdvancesHipBySpeedOverRate) {
  const MotionSequence seq = synth_walk(20, 1.0, 5.0);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const Eigen::Vector3d step = seq[i].hip() - seq[i - 1].hip();
    EXPECT_NEAR(step.x(), 0.2, 1e-12);
    EXPECT_NEAR(step.tail<2>().norm(), 0.0, 1e-12);
  }
}

TEST(SynthMotionTest, TwirlKeepsHipFixed) {
  const MotionSequence seq = synth_twirl_in_place(30, 1.0, 5.0);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    EXPECT_NEAR((seq[i].hip() - seq[0].hip()).norm(), 0.0, 1e-12);
  }
  EXPECT_GT(mpjpe(seq[0], seq[5]), 0.05);
}

TEST(SynthMotionTest, CircleRunStaysOnCircle) {
  const MotionSequence seq = synth_circle_run(40, 3.0, 0.6, 5.0);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    EXPECT_NEAR(seq[i].hip().head<2>().norm(), 3.0, 1e-12);
  }
}

TEST(SynthMotionTest, GeneratorsAreRigidBoned) {
  const BoneTopology& topo = BoneTopology::standard();
  for (const MotionSequence& seq :
       {synth_walk(120, 1.2, 5.0), synth_circle_run(120, 3.0, 0.6, 5.0),
        synth_twirl_in_place(120, 1.0, 5.0), synth_static(120, 5.0)}) {
    EXPECT_LT(seq.max_bone_drift(topo), 1e-6) << seq.name;
    EXPECT_EQ(seq.size(), 120u);
  }
}

TEST(SynthMotionTest, RejectsTooFewFrames) {
  EXPECT_THROW(synth_walk(1, 1.0, 5.0), ConfigError);
  EXPECT_THROW(synth_static(5, 0.0), ConfigError);
}

}  // namespace
}  // namespace activemocap
