#include "activemocap/planner.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <set>

#include "activemocap/errors.hpp"
#include "activemocap/estimator.hpp"
#include "activemocap/flight_model.hpp"
#include "test_util.hpp"

namespace activemocap {
namespace {

const BoneLengths& calib() {
  static const BoneLengths l = compute_bone_lengths(template_pose(), BoneTopology::standard());
  return l;
}

// A short observed window of a walking template, ready for forecasting.
EstimationWindow walking_window(int k_past, int horizon, double step = 0.1) {
  EstimationWindow w(k_past, horizon);
  for (int i = 0; i < w.length(); ++i) {
    Pose p = template_pose();
    p.joints.col(0).array() += step * i;
    w.poses[i] = p;
  }
  const Intrinsics k;
  for (int i = 0; i <= k_past; ++i) {
    const CameraPose cam =
        look_at(w.poses[i].hip() + Eigen::Vector3d(5.0, 5.0, 0.5), w.poses[i].hip());
    w.observations[i] = FrameObservation{detect_2d(w.poses[i], cam, k, {0.0, 0.0, 0, 0.0}, i),
                                         detect_3d_relative(w.poses[i], cam, {0.0, 0.0, 0, 0.0}, 1.0, i),
                                         cam};
  }
  return w;
}

TEST(UncertaintyTest, DiagonalQuadratic) {
  Eigen::MatrixXd h = Eigen::Vector2d(2.0 * 0.5, 2.0 * 2.0).asDiagonal();
  const UncertaintyReport r = uncertainty_from_hessian(h, 1e-6);
  EXPECT_NEAR(r.score, 1.25, 1e-15);
  EXPECT_NEAR(r.eigenvalues(0), 1.0, 1e-15);
  EXPECT_NEAR(r.eigenvalues(1), 4.0, 1e-15);
}

TEST(UncertaintyTest, IsotropicQuadraticThroughFiniteDifferences) {
  const double omega = 3.0;
  const int n = 12;
  const Eigen::MatrixXd h = finite_difference_hessian(
      [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { g = 2.0 * omega * x; },
      Eigen::VectorXd::LinSpaced(n, -1.0, 1.0), 1e-4);
  EXPECT_LT((h - 2.0 * omega * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(uncertainty_from_hessian(h, 1e-6).score, n / (2.0 * omega), 1e-9);
}

TEST(UncertaintyTest, FloorGuardsSingularDirections) {
  Eigen::MatrixXd h = Eigen::Vector3d(0.0, -1.0, 2.0).asDiagonal();
  EXPECT_NEAR(uncertainty_from_hessian(h, 1e-3).score, 2e3 + 0.5, 1e-9);
}

TEST(UncertaintyTest, BlockScoreIsMarginalCovarianceTrace) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd a(6, 6);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  const Eigen::MatrixXd h = a * a.transpose() + Eigen::MatrixXd::Identity(6, 6);
  const Eigen::MatrixXd cov = h.inverse();
  EXPECT_NEAR(uncertainty_from_hessian(h, 1e-9, 2, 3).score, cov.block(2, 2, 3, 3).trace(), 1e-9);
  EXPECT_NEAR(uncertainty_from_hessian(h, 1e-9).score, cov.trace(), 1e-9);
  EXPECT_THROW(uncertainty_from_hessian(h, 1e-9, 4, 3), NumericalFailure);
}

TEST(UncertaintyTest, RejectsNonFiniteHessian) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(2, 2);
  h(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(uncertainty_from_hessian(h, 1e-6), NumericalFailure);
}

TEST(ForecastTest, StaticPastStaysStatic) {
  const EstimationWindow w = walking_window(2, 3, 0.0);
  const EstimationWindow f = forecast_poses(w, EnergyWeights::reconstruction(), calib());
  for (int i = 1; i <= 3; ++i) {
    EXPECT_LT((f.poses[2 + i].joints - w.poses[2].joints).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_FALSE(f.observations[2 + i].has_value());
  }
}

TEST(ForecastTest, RigidTranslationIsExtrapolated) {
  const EstimationWindow w = walking_window(2, 3, 0.24);
  const EstimationWindow f = forecast_poses(w, EnergyWeights::reconstruction(), calib());
  for (int i = 1; i <= 3; ++i) {
    Pose expect = w.poses[2];
    expect.joints.col(0).array() += 0.24 * i;
    EXPECT_LT((f.poses[2 + i].joints - expect.joints).cwiseAbs().maxCoeff(), 1e-12);
  }
  for (int i = 0; i <= 2; ++i) EXPECT_EQ(f.poses[i].joints, w.poses[i].joints);
}

TEST(ForecastTest, RefinementRepairsStretchedBones) {
  EstimationWindow w = walking_window(2, 2, 0.1);
  // The last estimate stretches the arms; extrapolation stretches them further.
  w.poses[2].joints(kLeftWrist, 1) += 0.1;
  w.poses[2].joints(kRightWrist, 1) -= 0.1;
  EstimationWindow raw = w;
  for (int i = 1; i <= 2; ++i) {
    raw.poses[2 + i] = Pose(w.poses[2].joints + i * (w.poses[2].joints - w.poses[1].joints));
  }
  const EnergyWeights weights{0.0, 0.0, 0.0, 1.0};
  const double before = energy_pose(raw, weights, calib(), Intrinsics{}).bone;
  const EstimationWindow f = forecast_poses(w, EnergyWeights::reconstruction(), calib());
  const double after = energy_pose(f, weights, calib(), Intrinsics{}).bone;
  EXPECT_LT(after, before);
}

TEST(ForecastTest, NeedsTwoEstimatedFrames) {
  EXPECT_THROW(forecast_poses(walking_window(0, 2), EnergyWeights::reconstruction(), calib()),
               ConfigError);
}

TEST(ForecastMeasurementsTest, DataTermsVanishAtForecast) {
  const EstimationWindow f =
      forecast_poses(walking_window(2, 1), EnergyWeights::reconstruction(), calib());
  const auto ring = generate_ring_candidates(f.poses[3].hip(), 7.0, 18, 1.5);
  const EstimationWindow s = forecast_measurements(f, ring[4], Intrinsics{});
  ASSERT_TRUE(s.observations[3].has_value());
  EstimationWindow only_future = s;
  for (int i = 0; i < 3; ++i) only_future.observations[i].reset();
  const EnergyBreakdown e =
      energy_pose(only_future, EnergyWeights::decision(), calib(), Intrinsics{});
  EXPECT_NEAR(e.proj, 0.0, 1e-20);
  EXPECT_NEAR(e.lift, 0.0, 1e-20);
  const Detection2D d = detect_2d(f.poses[3], ring[4].cameras[0], Intrinsics{}, {0.0, 0.0, 0, 0.0}, 3);
  EXPECT_TRUE((s.observations[3]->det2d.joints2d.array() == d.joints2d.array()).all());
}

TEST(ForecastMeasurementsTest, SubjectOutOfViewIsDiscarded) {
  const EstimationWindow f =
      forecast_poses(walking_window(2, 1), EnergyWeights::reconstruction(), calib());
  std::vector<CandidateView> c = generate_ring_candidates(f.poses[3].hip(), 7.0, 4, 1.5);
  // Candidate 1 looks away from the subject.
  const Eigen::Vector3d p = c[1].cameras[0].position;
  c[1].cameras[0] = look_at(p, p + (p - f.poses[3].hip()));
  EXPECT_THROW(forecast_measurements(f, c[1], Intrinsics{}), SubjectNotVisible);
  score_candidates(f, c, EnergyWeights::decision(), calib(), Intrinsics{});
  EXPECT_FALSE(c[1].visible);
  EXPECT_TRUE(std::isinf(c[1].uncertainty));
  EXPECT_NE(select_best(c).id, 1);
}

TEST(HessianTest, SymmetricPositiveScore) {
  const EstimationWindow f =
      forecast_poses(walking_window(2, 1), EnergyWeights::reconstruction(), calib());
  const auto ring = generate_ring_candidates(f.poses[3].hip(), 7.0, 18, 1.5);
  const UncertaintyReport r = hessian(forecast_measurements(f, ring[0], Intrinsics{}),
                                      EnergyWeights::decision(), calib(), Intrinsics{});
  EXPECT_EQ(r.hessian.rows(), 4 * kPoseDim);
  EXPECT_LT((r.hessian - r.hessian.transpose()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_TRUE(r.eigenvalues.allFinite());
  EXPECT_GT(r.score, 0.0);
}

TEST(HessianTest, MatchesSecondDifferenceOfEnergy) {
  std::mt19937_64 rng(5);
  const Intrinsics k;
  for (int trial = 0; trial < 3; ++trial) {
    EstimationWindow w(1, 0);
    for (int i = 0; i < 2; ++i) {
      w.poses[i] = testing::random_pose(rng, 0.05);
      const CameraPose cam = testing::random_camera(rng, w.poses[i].hip());
      const Pose seen = testing::random_pose(rng, 0.05);
      Pose shifted = seen;
      shifted.joints.rowwise() += (w.poses[i].hip() - seen.hip()).transpose();
      w.observations[i] = FrameObservation{detect_2d(shifted, cam, k, {0.0, 0.0, 0, 100.0}, i),
                                           detect_3d_relative(shifted, cam, {0.0, 0.0, 0, 0.0}, 1.0, i),
                                           cam};
    }
    const EnergyWeights weights = EnergyWeights::decision();
    const UncertaintyReport r = hessian(w, weights, calib(), k);
    const PoseEnergy e(w, weights, calib(), k);
    const Eigen::VectorXd x = w.variables();
    const Eigen::Index n = x.size();
    const double h = 1e-3;
    Eigen::MatrixXd direct(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        auto at = [&](double si, double sj) {
          Eigen::VectorXd y = x;
          y(i) += si * h;
          y(j) += sj * h;
          return e.value(y);
        };
        direct(i, j) = direct(j, i) =
            (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
      }
    }
    EXPECT_LT((r.hessian - direct).norm() / direct.norm(), 1e-3);
  }
}

TEST(HessianTest, ArgminInvariantUnderWeightScaling) {
  const EstimationWindow f =
      forecast_poses(walking_window(2, 1), EnergyWeights::reconstruction(), calib());
  std::vector<CandidateView> a = generate_ring_candidates(f.poses[3].hip(), 7.0, 18, 1.5);
  std::vector<CandidateView> b = a;
  const double c = 4.0;
  score_candidates(f, a, EnergyWeights::decision(), calib(), Intrinsics{});
  score_candidates(f, b, EnergyWeights::decision().scaled(c), calib(), Intrinsics{});
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(b[i].uncertainty * c, a[i].uncertainty, 1e-6 * a[i].uncertainty);
  }
  EXPECT_EQ(select_best(a).id, select_best(b).id);
}

TEST(HessianTest, DuplicateCandidatesScoreIdentically) {
  const EstimationWindow f =
      forecast_poses(walking_window(2, 1), EnergyWeights::reconstruction(), calib());
  std::vector<CandidateView> c = generate_ring_candidates(f.poses[3].hip(), 7.0, 3, 1.5);
  c.push_back(c[1]);
  c.back().id = 3;
  score_candidates(f, c, EnergyWeights::decision(), calib(), Intrinsics{});
  EXPECT_NEAR(c[1].uncertainty, c[3].uncertainty, 1e-9);
}

TEST(HessianTest, PrefersViewOrthogonalToPriorObservation) {
  const Intrinsics k;
  const Pose p = template_pose();
  const Eigen::Vector3d overhead_dir(0.0, 0.0, 1.0);
  EstimationWindow w(0, 1);
  w.poses = {p, p};
  const CameraPose top = look_at(p.hip() + 7.0 * overhead_dir, p.hip(), Eigen::Vector3d::UnitX());
  w.observations[0] = FrameObservation{detect_2d(p, top, k, {0.0, 0.0, 0, 0.0}, 0),
                                       detect_3d_relative(p, top, {0.0, 0.0, 0, 0.0}, 1.0, 0), top};
  std::vector<CandidateView> dome;
  for (int e = 0; e <= 80; e += 10) {
    for (int a = 0; a < 360; a += 45) {
      const double el = e * std::numbers::pi / 180.0, az = a * std::numbers::pi / 180.0;
      const Eigen::Vector3d dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                std::sin(el));
      CandidateView c;
      c.id = static_cast<int>(dome.size());
      c.cameras = {look_at(p.hip() + 7.0 * dir, p.hip())};
      dome.push_back(c);
    }
  }
  score_candidates(w, dome, EnergyWeights::decision(), calib(), k, {}, 1e4);
  const Eigen::Vector3d chosen = (select_best(dome).cameras[0].position - p.hip()).normalized();
  const double angle = std::acos(std::abs(chosen.dot(overhead_dir))) * 180.0 / std::numbers::pi;
  EXPECT_GT(angle, 60.0);
}

TEST(SelectBestTest, LowestScoreWinsTiesToLowestId) {
  std::vector<CandidateView> c(3);
  for (int i = 0; i < 3; ++i) c[i].id = i;
  c[0].uncertainty = 3.0;
  c[1].uncertainty = 1.0;
  c[2].uncertainty = 2.0;
  EXPECT_EQ(select_best(c).id, 1);
  c[2].uncertainty = 1.0;
  std::swap(c[1], c[2]);
  EXPECT_EQ(select_best(c).id, 1);
  for (auto& v : c) v.visible = false;
  EXPECT_THROW(select_best(c), NoVisibleCandidate);
}

TEST(RingCandidatesTest, EvenSpacingAndLookAtCenter) {
  const Eigen::Vector3d center(1.0, -2.0, 0.9);
  const auto ring = generate_ring_candidates(center, 7.0, 18, 1.5, 2);
  ASSERT_EQ(ring.size(), 18u);
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const CameraPose& cam = ring[i].cameras.front();
    EXPECT_EQ(ring[i].cameras.size(), 2u);
    EXPECT_NEAR((cam.position - center).head<2>().norm(), 7.0, 1e-12);
    EXPECT_NEAR(cam.position.z(), 1.5, 1e-12);
    const double next = azimuth_deg(ring[(i + 1) % 18].cameras[0].position, center);
    double gap = next - azimuth_deg(cam.position, center);
    if (gap < 0.0) gap += 360.0;
    EXPECT_NEAR(gap, 20.0, 1e-9);
    EXPECT_NEAR((cam.optical_axis() - (center - cam.position).normalized()).norm(), 0.0, 1e-12);
  }
}

TEST(FlightCandidatesTest, NineDirectionsOnTheSphere) {
  DroneKinematicState drone;
  drone.position = Eigen::Vector3d(7.0, 0.0, 0.95);
  const std::vector<Eigen::Vector3d> subject(3, Eigen::Vector3d(0.0, 0.0, 0.95));
  FlightModelParams params;
  params.a_input_magnitude = 8.0;
  const auto c = generate_flight_candidates(drone, subject, params);
  ASSERT_EQ(c.size(), 9u);
  const std::vector<std::string> labels = {"center", "up", "down", "left", "right",
                                           "up-left", "up-right", "down-left", "down-right"};
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c[i].label, labels[i]);
    EXPECT_EQ(c[i].cameras.size(), 3u);
    EXPECT_LE(c[i].velocity_command.norm(), params.v_max + 1e-12);
    const Eigen::Vector3d goal = drone.position + params.dt * c[i].velocity_command;
    if (c[i].velocity_command.norm() < params.v_max - 1e-9 && goal.z() > 0.25 + 1e-9) {
      EXPECT_NEAR((goal - subject[0]).norm(), 7.0, 1e-9);
    }
    for (const CameraPose& cam : c[i].cameras) {
      EXPECT_GE(cam.position.z(), 0.25 - 1e-12);
      EXPECT_LE(cam.position.z(), 3.5 + 1e-12);
    }
  }
  // Facing the subject from +x, the drone's right is +y.
  EXPECT_GT(c[1].velocity_command.z(), 0.0);
  EXPECT_LT(c[2].velocity_command.z(), 0.0);
  EXPECT_GT(c[4].velocity_command.y(), 0.0);
  EXPECT_LT(c[3].velocity_command.y(), 0.0);
}

TEST(FlightCandidatesTest, CenterKeepsMomentumOnly) {
  DroneKinematicState drone;
  drone.position = Eigen::Vector3d(0.0, -7.0, 1.2);
  drone.velocity = Eigen::Vector3d(1.0, 0.0, 0.0);
  drone.a_previous = Eigen::Vector3d(0.5, 0.0, 0.0);
  const std::vector<Eigen::Vector3d> subject(3, Eigen::Vector3d(0.0, 0.0, 1.2));
  const FlightModelParams params;
  const auto c = generate_flight_candidates(drone, subject, params);
  EXPECT_NEAR(c[0].velocity_command.norm(), 0.0, 1e-12);
  const auto momentum = predict_trajectory(drone, Eigen::Vector3d::Zero(), params, 3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR((c[0].cameras[static_cast<std::size_t>(i)].position - momentum[static_cast<std::size_t>(i)]).norm(),
                0.0, 1e-12);
  }
}

TEST(FlightCandidatesTest, UpIsClampedToAltitudeBand) {
  DroneKinematicState drone;
  drone.position = Eigen::Vector3d(7.0, 0.0, 3.45);
  const std::vector<Eigen::Vector3d> subject(3, Eigen::Vector3d(0.0, 0.0, 3.45));
  const FlightModelParams params;
  const auto c = generate_flight_candidates(drone, subject, params);
  const Eigen::Vector3d goal = drone.position + params.dt * c[1].velocity_command;
  EXPECT_NEAR(goal.z(), 3.5, 1e-12);
  for (const CameraPose& cam : c[1].cameras) EXPECT_LE(cam.position.z(), 3.5 + 1e-12);
}

TEST(FlightCandidatesTest, UniformSamplingIgnoresMomentum) {
  DroneKinematicState drone;
  drone.position = Eigen::Vector3d(7.0, 0.0, 1.5);
  const std::vector<Eigen::Vector3d> subject(3, Eigen::Vector3d(0.0, 0.0, 1.0));
  FlightCandidateConfig cfg;
  cfg.uniform_sampling = true;
  const auto still = generate_flight_candidates(drone, subject, FlightModelParams{}, cfg);
  drone.velocity = Eigen::Vector3d(0.0, 4.0, 0.0);
  const auto moving = generate_flight_candidates(drone, subject, FlightModelParams{}, cfg);
  for (std::size_t i = 0; i < still.size(); ++i) {
    for (std::size_t s = 0; s < 3; ++s) {
      EXPECT_EQ(still[i].cameras[s].position, moving[i].cameras[s].position);
      EXPECT_NEAR((still[i].cameras[s].position - subject[s]).norm(), 7.0, 0.6);
    }
  }
}

TEST(BaselineTest, ConstantRotationVisitsRingInOrder) {
  const Eigen::Vector3d center(0.0, 0.0, 1.0);
  const auto ring = generate_ring_candidates(center, 7.0, 18, 1.5);
  BaselineState s;
  s.subject = center;
  s.current_position = ring[0].cameras[0].position;
  for (int step = 1; step <= 36; ++step) {
    const CandidateView& c = baseline_policy(BaselineKind::kConstantRotation, ring, s);
    EXPECT_EQ(c.id, step % 18);
    s.current_position = c.cameras[0].position;
  }
  s.rotation_step_deg = -20.0;
  EXPECT_EQ(baseline_policy(BaselineKind::kConstantRotation, ring, s).id, 17);
}

TEST(BaselineTest, ConstantAngleHoldsBearingForStaticSubject) {
  const Eigen::Vector3d center(0.0, 0.0, 1.0);
  const auto ring = generate_ring_candidates(center, 7.0, 18, 1.5);
  BaselineState s;
  s.subject = center;
  s.held_bearing = (ring[5].cameras[0].position - center).normalized();
  for (int step = 0; step < 5; ++step) {
    s.current_position = ring[static_cast<std::size_t>(step)].cameras[0].position;
    EXPECT_EQ(baseline_policy(BaselineKind::kConstantAngle, ring, s).id, 5);
  }
}

TEST(BaselineTest, RandomIsSeededAndSkipsInvisible) {
  auto ring = generate_ring_candidates(Eigen::Vector3d::Zero(), 7.0, 6, 1.5);
  ring[2].visible = ring[3].visible = false;
  std::mt19937_64 a(9), b(9);
  BaselineState sa, sb;
  sa.rng = &a;
  sb.rng = &b;
  std::set<int> seen;
  for (int i = 0; i < 200; ++i) {
    const int ia = baseline_policy(BaselineKind::kRandom, ring, sa).id;
    EXPECT_EQ(ia, baseline_policy(BaselineKind::kRandom, ring, sb).id);
    seen.insert(ia);
  }
  EXPECT_EQ(seen, (std::set<int>{0, 1, 4, 5}));
  BaselineState none;
  EXPECT_THROW(baseline_policy(BaselineKind::kRandom, ring, none), ConfigError);
}

TEST(BaselineTest, OracleTakesSmallestRealizedError) {
  auto ring = generate_ring_candidates(Eigen::Vector3d::Zero(), 7.0, 4, 1.5);
  BaselineState s;
  s.realized_errors = {0.3, 0.1, 0.05, 0.2};
  ring[2].visible = false;
  EXPECT_EQ(baseline_policy(BaselineKind::kOracle, ring, s).id, 1);
  s.realized_errors.pop_back();
  EXPECT_THROW(baseline_policy(BaselineKind::kOracle, ring, s), ConfigError);
}

}  // namespace
}  // namespace activemocap
