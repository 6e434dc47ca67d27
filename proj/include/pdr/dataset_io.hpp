#pragma once

#include "pdr/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pdr::io {

enum class Format { kCanonical, kRidi };

Format parse_format(const std::string& name);

struct RawSequence {
  std::vector<ImuSample> imu;
  std::vector<PoseRecord> poses;
};

/// Canonical: imu.csv (t_ns,wx,wy,wz,ax,ay,az) and pose.csv
/// (t_ns,px,py,pz,qw,qx,qy,qz). RIDI: one data.csv read by header name
/// (time, gyro_*, linacce_*, pos_*, ori_w/x/y/z); imu_path and pose_path
/// may name the same file. Streams come back sorted by timestamp.
/// Throws InputError for missing columns, bad rows (row index reported),
/// or duplicate timestamps.
RawSequence load_sequence(const std::filesystem::path& imu_path,
                          const std::filesystem::path& pose_path, Format format);

std::vector<ImuSample> load_imu_csv(const std::filesystem::path& path);
std::vector<PoseRecord> load_pose_csv(const std::filesystem::path& path);
void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& imu);
void write_pose_csv(const std::filesystem::path& path, const std::vector<PoseRecord>& poses);

/// One row of a synchronized sequence.
struct AlignedSample {
  Timestamp t_ns = 0;
  ImuSample imu;
  Vec3 position = Vec3::Zero();
  Rotation orientation = Rotation::Identity();
  Vec3 world_velocity = Vec3::Zero();
  Vec3 body_velocity = Vec3::Zero();
};

struct AlignedSequence {
  std::vector<AlignedSample> samples;
  double rate_hz = 0.0;
  int velocity_window = 5;

  std::vector<ImuSample> imu() const;
  std::vector<GroundTruthSample> ground_truth() const;
};

inline constexpr int kVelocityWindow = 5;

/// Resamples both streams onto a uniform grid at the pose rate covering
/// the overlap of the two streams (the pose timestamps themselves when they
/// are already uniform). IMU channels and positions are interpolated
/// linearly, orientations by normalized quaternion lerp. World velocity is a
/// central difference over a 5-frame window; body velocity labels follow.
/// Throws DataMismatchError on an empty overlap.
AlignedSequence synchronize(const std::vector<ImuSample>& imu,
                            const std::vector<PoseRecord>& poses);

/// Builds an aligned sequence straight from simulator ground truth.
AlignedSequence from_ground_truth(const std::vector<GroundTruthSample>& gt,
                                  const std::vector<ImuSample>& imu);

/// Per frame, heading_rotation(v)^T v = [planar speed, 0, v_z].
std::vector<Vec3> body_velocity_labels(const AlignedSequence& seq);

/// Single-file CSV with every column, plus a JSON sidecar with metadata.
void write_aligned_csv(const std::filesystem::path& path, const AlignedSequence& seq,
                       const std::vector<std::string>& sources = {});
AlignedSequence load_aligned_csv(const std::filesystem::path& path);

/// Trajectory file row: t_ns,px,py,pz,qw,qx,qy,qz,vx,vy,vz.
struct TrajectoryRow {
  Timestamp t_ns = 0;
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  Vec3 velocity = Vec3::Zero();
};

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> load_trajectory_csv(const std::filesystem::path& path);

}  // namespace pdr::io
