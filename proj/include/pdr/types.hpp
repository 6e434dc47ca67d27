#pragma once

#include "pdr/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdr {

using Timestamp = std::int64_t;  // nanoseconds

inline double ns_to_s(Timestamp t) { return static_cast<double>(t) * 1e-9; }
inline Timestamp s_to_ns(double t) { return static_cast<Timestamp>(std::llround(t * 1e9)); }

/// One gyro + gravity-removed linear acceleration reading, both in the IMU frame.
struct ImuSample {
  Timestamp t_ns = 0;
  Vec3 gyro = Vec3::Zero();   // rad/s
  Vec3 accel = Vec3::Zero();  // m/s^2
};

/// Ground-truth state of the IMU in the world frame.
struct GroundTruthSample {
  Timestamp t_ns = 0;
  Vec3 position = Vec3::Zero();
  Rotation orientation = Rotation::Identity();  // IMU -> world
  Vec3 velocity = Vec3::Zero();
};

/// Pose as recorded by an external tracker (quaternion is Hamilton, w-first).
struct PoseRecord {
  Timestamp t_ns = 0;
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

// Error categories, each mapped to its own CLI exit code.

/// Bad or unreadable input (files, flags, schemas).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two data sets that should share a timebase do not.
class DataMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise broken numerics inside the filter.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, Timestamp t_ns)
      : std::runtime_error(what + " (t_ns=" + std::to_string(t_ns) + ")"), t_ns_(t_ns) {}
  Timestamp timestamp() const { return t_ns_; }

 private:
  Timestamp t_ns_;
};

}  // namespace pdr
