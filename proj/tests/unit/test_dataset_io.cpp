#include "pdr/dataset_io.hpp"
#include "pdr/imu_sim.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace pdr {
namespace {

using testing::fixture;

TEST(LoadCanonical, ThreeRowsExact) {
  const auto seq = io::load_sequence(fixture("imu.csv"), fixture("pose.csv"), io::Format::kCanonical);
  ASSERT_EQ(seq.imu.size(), 3u);
  ASSERT_EQ(seq.poses.size(), 3u);
  EXPECT_EQ(seq.imu[1].t_ns, 1'005'000'000);
  EXPECT_EQ(seq.imu[1].gyro, Vec3(0.011, -0.021, 0.51));
  EXPECT_EQ(seq.imu[2].accel, Vec3(0.14, 0.18, -0.32));
  EXPECT_EQ(seq.poses[2].position, Vec3(0.012, 0.002, 0));
  EXPECT_EQ(seq.poses[2].orientation.z(), 0.0025);
}

TEST(LoadCanonical, RowsAreSortedByTime) {
  const auto imu = io::load_imu_csv(fixture("imu_shuffled.csv"));
  const auto ref = io::load_imu_csv(fixture("imu.csv"));
  ASSERT_EQ(imu.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(imu[k].t_ns, ref[k].t_ns);
    EXPECT_EQ(imu[k].gyro, ref[k].gyro);
  }
}

void expect_input_error(const std::filesystem::path& path, const std::string& fragment) {
  try {
    io::load_imu_csv(path);
    FAIL() << "no error for " << path;
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(LoadCanonical, MissingColumnIsNamed) {
  expect_input_error(fixture("imu_missing_column.csv"), "'az'");
}

TEST(LoadCanonical, DuplicateTimestampIsRejected) {
  expect_input_error(fixture("imu_duplicate.csv"), "duplicate timestamp");
}

TEST(LoadCanonical, BadRowIsReported) {
  expect_input_error(fixture("imu_bad_row.csv"), "row 2");
}

TEST(LoadCanonical, MissingFileIsAnInputError) {
  EXPECT_THROW(io::load_imu_csv("/nonexistent/imu.csv"), InputError);
}

TEST(LoadRidi, ColumnsAreMappedByName) {
  const auto seq = io::load_sequence(fixture("ridi_data.csv"), {}, io::Format::kRidi);
  ASSERT_EQ(seq.imu.size(), 400u);
  ASSERT_EQ(seq.poses.size(), 400u);
  EXPECT_EQ(seq.imu[0].gyro, Vec3(0.3, -0.1, 0.5));
  EXPECT_EQ(seq.imu[0].accel, Vec3::Zero());  // linear acceleration, not raw
  EXPECT_EQ(seq.imu[1].t_ns - seq.imu[0].t_ns, 5'000'000);
  EXPECT_EQ(seq.poses[200].position, Vec3(1.0, 0.5, 0.0));
}

// The fixture spins at a constant body rate, so the stored orientation must
// equal the first one composed with exp(w t) on the right. This fails if the
// quaternion were read scalar-last or as world -> device.
TEST(LoadRidi, QuaternionIsScalarFirstDeviceToWorld) {
  const auto seq = io::load_sequence(fixture("ridi_data.csv"), {}, io::Format::kRidi);
  const Rotation R0 = to_rotation(seq.poses.front().orientation);
  for (std::size_t k = 0; k < seq.poses.size(); k += 50) {
    const double t = ns_to_s(seq.poses[k].t_ns - seq.poses.front().t_ns);
    const Rotation expected = R0 * exp_so3(seq.imu[k].gyro * t);
    EXPECT_LT((to_rotation(seq.poses[k].orientation) - expected).norm(), 1e-9) << k;
  }
}

TEST(Csv, ImuAndPoseRoundTripExactly) {
  const auto dir = testing::scratch_dir("csv");
  auto spec = testing::turn_walk();
  spec.segments = {{1.0, 1.0, 0.4}};
  const auto gt = sim::generate_trajectory(spec);
  sim::ImuNoiseSpec n;
  n.gyro_white_std = 0.1;
  const auto imu = sim::synthesize_imu(gt, n, 3).samples;
  std::vector<PoseRecord> poses;
  for (const auto& s : gt) poses.push_back({s.t_ns, s.position, to_quaternion(s.orientation)});
  io::write_imu_csv(dir / "imu.csv", imu);
  io::write_pose_csv(dir / "pose.csv", poses);
  const auto imu2 = io::load_imu_csv(dir / "imu.csv");
  const auto poses2 = io::load_pose_csv(dir / "pose.csv");
  ASSERT_EQ(imu2.size(), imu.size());
  for (std::size_t k = 0; k < imu.size(); ++k) {
    EXPECT_EQ(imu2[k].gyro, imu[k].gyro);
    EXPECT_EQ(imu2[k].accel, imu[k].accel);
    EXPECT_EQ(poses2[k].position, poses[k].position);
    EXPECT_EQ(poses2[k].orientation.coeffs(), poses[k].orientation.coeffs());
  }
}

std::vector<PoseRecord> poses_of(const std::vector<GroundTruthSample>& gt) {
  std::vector<PoseRecord> poses;
  for (const auto& s : gt) poses.push_back({s.t_ns, s.position, to_quaternion(s.orientation)});
  return poses;
}

TEST(Synchronize, UniformPoseGridIsKept) {
  const auto gt = sim::generate_trajectory(testing::turn_walk());
  const auto imu = sim::synthesize_imu(gt, {}, 1).samples;
  const auto seq = io::synchronize(imu, poses_of(gt));
  ASSERT_EQ(seq.samples.size(), gt.size());
  EXPECT_NEAR(seq.rate_hz, 200.0, 1e-9);
  EXPECT_EQ(seq.samples[100].imu.gyro, imu[100].gyro);
  // 5-frame central difference of a smooth walk is accurate to O(dt^2)
  for (std::size_t k = 10; k + 10 < gt.size(); k += 97) {
    EXPECT_LT((seq.samples[k].world_velocity - gt[k].velocity).norm(), 1e-4);
  }
}

TEST(Synchronize, FasterImuIsInterpolatedOntoPoseTimes) {
  auto spec = testing::turn_walk();
  spec.segments = {{3.0, 1.0, 0.2}};
  spec.rate_hz = 400.0;
  const auto gt400 = sim::generate_trajectory(spec);
  const auto imu = sim::synthesize_imu(gt400, {}, 1).samples;
  std::vector<PoseRecord> poses;
  for (std::size_t k = 0; k < gt400.size(); k += 4) {
    poses.push_back({gt400[k].t_ns, gt400[k].position, to_quaternion(gt400[k].orientation)});
  }
  const auto seq = io::synchronize(imu, poses);
  EXPECT_NEAR(seq.rate_hz, 100.0, 1e-9);
  EXPECT_EQ(seq.samples.size(), poses.size());
  EXPECT_EQ(seq.samples[10].imu.gyro, imu[40].gyro);
}

TEST(Synchronize, OverlapIsUsed) {
  const auto gt = sim::generate_trajectory(testing::turn_walk());
  auto imu = sim::synthesize_imu(gt, {}, 1).samples;
  imu.erase(imu.begin(), imu.begin() + 100);
  const auto seq = io::synchronize(imu, poses_of(gt));
  EXPECT_EQ(seq.samples.front().t_ns, imu.front().t_ns);
  EXPECT_EQ(seq.samples.back().t_ns, gt.back().t_ns);
}

TEST(Synchronize, DisjointStreamsAreAMismatch) {
  std::vector<ImuSample> imu(3);
  for (int k = 0; k < 3; ++k) imu[k].t_ns = k * 5'000'000;
  std::vector<PoseRecord> poses(3);
  for (int k = 0; k < 3; ++k) poses[k].t_ns = 1'000'000'000 + k * 5'000'000;
  EXPECT_THROW(io::synchronize(imu, poses), DataMismatchError);
}

TEST(Synchronize, BodyVelocityLabelsHaveNoLateralComponent) {
  const auto gt = sim::generate_trajectory(testing::turn_walk());
  const auto seq = io::from_ground_truth(gt, sim::synthesize_imu(gt, {}, 1).samples);
  const auto labels = io::body_velocity_labels(seq);
  ASSERT_EQ(labels.size(), gt.size());
  for (const auto& v : labels) {
    EXPECT_EQ(v.y(), 0.0);
    EXPECT_NEAR(v.x(), 1.2, 1e-9);
  }
}

TEST(Aligned, CsvRoundTripKeepsMetadata) {
  const auto dir = testing::scratch_dir("aligned");
  const auto gt = sim::generate_trajectory(testing::turn_walk());
  const auto seq = io::from_ground_truth(gt, sim::synthesize_imu(gt, {}, 1).samples);
  io::write_aligned_csv(dir / "seq.csv", seq, {"sim"});
  EXPECT_TRUE(std::filesystem::exists(dir / "seq.csv.json"));
  const auto back = io::load_aligned_csv(dir / "seq.csv");
  ASSERT_EQ(back.samples.size(), seq.samples.size());
  EXPECT_DOUBLE_EQ(back.rate_hz, seq.rate_hz);
  EXPECT_EQ(back.velocity_window, seq.velocity_window);
  EXPECT_EQ(back.samples[500].position, seq.samples[500].position);
  EXPECT_EQ(back.samples[500].imu.accel, seq.samples[500].imu.accel);
}

TEST(Trajectory, CsvRoundTrip) {
  const auto dir = testing::scratch_dir("traj");
  std::vector<io::TrajectoryRow> rows(2);
  rows[1].t_ns = 5;
  rows[1].position = Vec3(1.0 / 3.0, 2, 3);
  rows[1].velocity = Vec3(0.1, 0.2, 0.3);
  rows[1].orientation = to_quaternion(exp_so3(Vec3(0.1, 0.2, 0.3)));
  io::write_trajectory_csv(dir / "t.csv", rows);
  const auto back = io::load_trajectory_csv(dir / "t.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].position, rows[1].position);
  EXPECT_EQ(back[1].velocity, rows[1].velocity);
  EXPECT_EQ(back[1].orientation.coeffs(), rows[1].orientation.coeffs());
}

TEST(Format, Names) {
  EXPECT_EQ(io::parse_format("canonical"), io::Format::kCanonical);
  EXPECT_EQ(io::parse_format("ridi"), io::Format::kRidi);
  EXPECT_THROW(io::parse_format("tum"), InputError);
}

}  // namespace
}  // namespace pdr
