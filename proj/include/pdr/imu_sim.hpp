#pragma once

#include "pdr/types.hpp"

#include <cstdint>
#include <vector>

namespace pdr::sim {

/// Constant turn-rate arc walked at a target planar speed.
struct Segment {
  double duration_s = 1.0;
  double speed_mps = 1.0;   // [0, 2]
  double turn_rate = 0.0;   // rad/s, positive is counter-clockwise
};

struct TrajectorySpec {
  std::vector<Segment> segments;
  double rate_hz = 200.0;
  Vec3 initial_position = Vec3::Zero();
  double initial_heading = 0.0;  // rad, yaw of the walking direction
  /// Orientation of the walking (body) frame relative to the phone's IMU
  /// frame. Identity means the phone's x axis points along the walk.
  Rotation body_in_imu = Rotation::Identity();
  /// Speed changes between segments ramp linearly over this long, keeping
  /// velocity continuous.
  double speed_blend_s = 0.5;
};

/// Throws InputError if the spec violates its invariants.
void validate(const TrajectorySpec& spec);

/// Samples the planar walk at spec.rate_hz, including both end points.
/// Positions are exact integrals of the analytic velocity profile.
std::vector<GroundTruthSample> generate_trajectory(const TrajectorySpec& spec);

/// Sensor error model: additive bias random walk plus white noise.
struct ImuNoiseSpec {
  double gyro_white_std = 0.0;        // rad/s, per sample
  double accel_white_std = 0.0;       // m/s^2, per sample
  double gyro_bias_walk_std = 0.0;    // rad/s per sqrt(s)
  double accel_bias_walk_std = 0.0;   // m/s^2 per sqrt(s)
  Vec3 initial_gyro_bias = Vec3::Zero();
  Vec3 initial_accel_bias = Vec3::Zero();
};

/// Noise matching a filter process model whose entries are variances of the
/// per-sample rates: white std = sqrt(q), bias increment per step = sqrt(q_b) dt.
ImuNoiseSpec noise_from_process_variances(double q_gyro, double q_accel, double q_gyro_bias,
                                          double q_accel_bias, double rate_hz);

struct SynthesizedImu {
  std::vector<ImuSample> samples;
  /// Bias active on each sample (same length as samples).
  std::vector<Vec3> gyro_bias;
  std::vector<Vec3> accel_bias;
  std::uint64_t seed = 0;
};

/// Nominal sample spacing of a uniformly sampled stream, in seconds.
/// Throws InputError when spacing deviates from uniform by more than 1 ns.
double uniform_period(const std::vector<GroundTruthSample>& gt);

/// Differentiates the ground truth into ideal IMU readings (rotation
/// increments R_n^T R_{n+1}, velocity increments rotated into the IMU frame)
/// and corrupts them with the noise model. The last sample repeats the
/// previous ideal reading. Deterministic for a given seed.
SynthesizedImu synthesize_imu(const std::vector<GroundTruthSample>& gt,
                              const ImuNoiseSpec& noise, std::uint64_t seed);

}  // namespace pdr::sim
