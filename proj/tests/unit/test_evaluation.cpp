#include "pdr/evaluation.hpp"
#include "pdr/imu_sim.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace pdr {
namespace {

eval::Trajectory uniform(double duration_s, double rate_hz) {
  eval::Trajectory t;
  const int n = static_cast<int>(std::round(duration_s * rate_hz)) + 1;
  for (int k = 0; k < n; ++k) {
    t.t_ns.push_back(s_to_ns(k / rate_hz));
    t.position.push_back(Vec3(0.5 * k / rate_hz, 0.0, 0.0));
  }
  return t;
}

TEST(Ate, ConstantOffsetIsItsNorm) {
  const auto gt = uniform(10.0, 100.0);
  auto est = gt;
  const Vec3 offset(0.3, -0.4, 1.2);
  for (auto& p : est.position) p += offset;
  EXPECT_NEAR(eval::ate(est, gt), offset.norm(), 1e-9);
  EXPECT_EQ(eval::ate(gt, gt), 0.0);
}

TEST(Ate, TimestampMismatchThrows) {
  const auto gt = uniform(10.0, 100.0);
  auto est = gt;
  est.t_ns[5] += 1;
  EXPECT_THROW(eval::ate(est, gt), DataMismatchError);
  est = uniform(9.0, 100.0);
  EXPECT_THROW(eval::ate(est, gt), DataMismatchError);
  EXPECT_THROW(eval::rte(est, gt), DataMismatchError);
}

TEST(Rte, LinearDriftOverOneWindow) {
  const auto gt = uniform(61.0, 100.0);
  auto est = gt;
  for (std::size_t k = 0; k < est.size(); ++k) est.position[k].y() += 0.01 * ns_to_s(est.t_ns[k]);
  const auto r = eval::rte(est, gt, 60.0);
  EXPECT_EQ(r.windows, 1);
  EXPECT_FALSE(r.fell_back_to_ate);
  EXPECT_NEAR(r.value, 0.01 * 60.0 / std::sqrt(3.0), 1e-3);
}

TEST(Rte, ConstantOffsetIsRemovedByReanchoring) {
  const auto gt = uniform(130.0, 50.0);
  auto est = gt;
  for (auto& p : est.position) p += Vec3(5, 5, 5);
  const auto r = eval::rte(est, gt, 60.0);
  EXPECT_EQ(r.windows, 2);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
}

TEST(Rte, ShortTrajectoryFallsBackToAte) {
  const auto gt = uniform(20.0, 100.0);
  auto est = gt;
  for (auto& p : est.position) p += Vec3(0, 2, 0);
  const auto r = eval::rte(est, gt, 60.0);
  EXPECT_TRUE(r.fell_back_to_ate);
  EXPECT_NEAR(r.value, 2.0, 1e-12);
  EXPECT_THROW(eval::rte(est, gt, 0.0), InputError);
}

TEST(Ndi, ConstantAccelErrorDriftsQuadratically) {
  const double rate = 200.0;
  std::vector<ImuSample> imu(static_cast<std::size_t>(10 * rate) + 1);
  for (std::size_t k = 0; k < imu.size(); ++k) {
    imu[k].t_ns = s_to_ns(k / rate);
    imu[k].accel = Vec3(0.1, 0, 0);
  }
  const auto ndi = eval::ndi_baseline(imu, FilterInit{});
  ASSERT_EQ(ndi.size(), imu.size());
  EXPECT_NEAR(ndi.position.back().norm(), 5.0, 0.05);
  EXPECT_NEAR(ndi.velocity.back().x(), 1.0, 1e-9);
}

TEST(Ndi, EmptyStreamGivesInitialPose) {
  FilterInit init;
  init.pose.position = Vec3(1, 2, 3);
  const auto ndi = eval::ndi_baseline({}, init);
  ASSERT_EQ(ndi.size(), 1u);
  EXPECT_EQ(ndi.position.front(), Vec3(1, 2, 3));
}

TEST(Ndi, IgnoresBiasEstimatesAndUpdates) {
  const auto gt = sim::generate_trajectory(testing::turn_walk());
  const auto imu = sim::synthesize_imu(gt, {}, 1).samples;
  FilterConfig cfg;
  cfg.enable_update = true;
  const auto init = testing::init_from(gt.front());
  const auto a = eval::ndi_baseline(imu, init, cfg);
  cfg.enable_update = false;
  const auto b = eval::from_filter(run_sequence(imu, cfg, init, ConstantAdapter()));
  EXPECT_EQ(a.position.back(), b.position.back());
}

TEST(Inter, SumsVelocities) {
  const std::vector<Timestamp> t = {0, 1'000'000'000, 3'000'000'000};
  const std::vector<Vec3> v = {Vec3(1, 0, 0), Vec3(0, 2, 0), Vec3(9, 9, 9)};
  const auto traj = eval::inter_trajectory(t, v, Vec3(1, 1, 1));
  ASSERT_EQ(traj.size(), 3u);
  EXPECT_EQ(traj.position[1], Vec3(2, 1, 1));
  EXPECT_EQ(traj.position[2], Vec3(2, 5, 1));
  EXPECT_THROW(eval::inter_trajectory(t, std::vector<Vec3>(2), Vec3::Zero()), InputError);
}

TEST(Compare, TableAndCsvListEveryMethod) {
  const auto gt = uniform(30.0, 100.0);
  auto shifted = gt;
  for (auto& p : shifted.position) p.x() += 1.0;
  const auto report = eval::compare({{"ndi", shifted}, {"iekf", gt}}, gt, 10.0);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].label, "iekf");
  EXPECT_NEAR(report.rows[1].ate, 1.0, 1e-12);
  EXPECT_NEAR(report.rows[1].rte, 0.0, 1e-12);
  const std::string table = eval::format_table(report);
  EXPECT_NE(table.find("ndi"), std::string::npos);
  EXPECT_NE(table.find("re-anchoring: position"), std::string::npos);

  const auto dir = testing::scratch_dir("report");
  eval::write_report_csv(dir / "report.csv", report);
  std::ifstream in(dir / "report.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header.substr(0, 17), "method,ate_m,rte_");
  EXPECT_EQ(row.substr(0, 5), "iekf,");
}

TEST(Trajectory, RowsRoundTrip) {
  const auto gt = sim::generate_trajectory(testing::turn_walk());
  const auto traj = eval::from_ground_truth(gt);
  const auto back = eval::from_rows(eval::to_rows(traj));
  ASSERT_EQ(back.size(), traj.size());
  EXPECT_EQ(back.position[777], traj.position[777]);
  EXPECT_EQ(eval::ate(back, traj), 0.0);
}

}  // namespace
}  // namespace pdr
