#pragma once

#include "pdr/iekf.hpp"
#include "pdr/imu_sim.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace pdr::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(PDR_FIXTURE_DIR) / name;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pdr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  return Vec3(n(rng), n(rng), n(rng));
}

inline Rotation random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 3.0);
  Vec3 axis = random_vec(rng, 1.0).normalized();
  return exp_so3(axis * angle(rng));
}

inline FilterState random_state(std::mt19937_64& rng) {
  FilterState s;
  s.orientation = random_rotation(rng);
  s.velocity = random_vec(rng, 1.0);
  s.position = random_vec(rng, 20.0);
  s.gyro_bias = random_vec(rng, 0.01);
  s.accel_bias = random_vec(rng, 0.1);
  s.misalignment = random_rotation(rng);
  return s;
}

inline ImuSample random_imu(std::mt19937_64& rng) {
  ImuSample m;
  m.gyro = random_vec(rng, 1.0);
  m.accel = random_vec(rng, 2.0);
  return m;
}

/// 120 s walk with two turns and speed changes.
inline sim::TrajectorySpec long_walk() {
  sim::TrajectorySpec spec;
  spec.segments = {{30, 1.2, 0.0},
                   {10, 1.2, M_PI / 20},
                   {30, 1.2, 0.0},
                   {10, 1.0, -M_PI / 20},
                   {40, 1.3, 0.0}};
  spec.body_in_imu = exp_so3(Vec3(0.1, -0.2, 0.5));
  return spec;
}

/// 60 s walk with one 90 degree turn at constant speed.
inline sim::TrajectorySpec turn_walk() {
  sim::TrajectorySpec spec;
  spec.segments = {{30, 1.2, 0.0}, {10, 1.2, M_PI / 20}, {20, 1.2, 0.0}};
  spec.body_in_imu = exp_so3(Vec3(0.1, -0.2, 0.5));
  return spec;
}

/// Sensor noise at the filter's process-noise levels, with initial biases
/// drawn from the filter's initial covariance.
inline sim::ImuNoiseSpec prior_consistent_noise(const FilterConfig& cfg, std::uint64_t seed) {
  sim::ImuNoiseSpec n = sim::noise_from_process_variances(cfg.q_gyro, cfg.q_accel,
                                                          cfg.q_gyro_bias, cfg.q_accel_bias,
                                                          cfg.rate_hz);
  std::mt19937_64 rng(seed + 100);
  n.initial_gyro_bias = random_vec(rng, std::sqrt(cfg.p0_gyro_bias));
  n.initial_accel_bias = random_vec(rng, std::sqrt(cfg.p0_accel_bias));
  return n;
}

inline FilterInit init_from(const GroundTruthSample& first) {
  FilterInit init;
  init.pose = first;
  init.v0 = first.velocity;
  return init;
}

}  // namespace pdr::testing
