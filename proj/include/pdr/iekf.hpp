#pragma once

#include "pdr/noise_adapter.hpp"
#include "pdr/types.hpp"

#include <Eigen/Core>

#include <deque>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace pdr {

inline constexpr int kStateDim = 18;
inline constexpr int kNoiseDim = 15;

using ErrorVector = Eigen::Matrix<double, kStateDim, 1>;
using StateCovariance = Eigen::Matrix<double, kStateDim, kStateDim>;
using ProcessNoise = Eigen::Matrix<double, kNoiseDim, kNoiseDim>;
using NoiseVector = Eigen::Matrix<double, kNoiseDim, 1>;
using TransitionJacobian = Eigen::Matrix<double, kStateDim, kStateDim>;
using NoiseJacobian = Eigen::Matrix<double, kStateDim, kNoiseDim>;
using ObservationJacobian = Eigen::Matrix<double, 3, kStateDim>;

/// Offsets of the 3-dim blocks inside the error state.
namespace block {
inline constexpr int kRot = 0;
inline constexpr int kVel = 3;
inline constexpr int kPos = 6;
inline constexpr int kGyroBias = 9;
inline constexpr int kAccelBias = 12;
inline constexpr int kMisalign = 15;
}  // namespace block

/// Offsets of the 3-dim blocks inside the process noise vector.
namespace noise_block {
inline constexpr int kGyro = 0;
inline constexpr int kAccel = 3;
inline constexpr int kGyroBias = 6;
inline constexpr int kAccelBias = 9;
inline constexpr int kMisalign = 12;
}  // namespace noise_block

struct FilterState {
  Rotation orientation = Rotation::Identity();   // IMU -> world
  Vec3 velocity = Vec3::Zero();                  // world, m/s
  Vec3 position = Vec3::Zero();                  // world, m
  Vec3 gyro_bias = Vec3::Zero();                 // rad/s
  Vec3 accel_bias = Vec3::Zero();                // m/s^2
  Rotation misalignment = Rotation::Identity();  // body frame w.r.t. IMU frame

  bool finite() const;
};

/// Forward speed plus null lateral and vertical speed, in the body frame.
struct PseudoObservation {
  Vec3 y = Vec3::Zero();
  Mat3 noise = Mat3::Identity();
};

struct FilterConfig {
  /// Diagonal of the initial covariance, per error block (variances).
  double p0_rot = 1e-6;
  double p0_vel = 1e-5;
  double p0_pos = 0.0;
  double p0_gyro_bias = 1e-6;
  double p0_accel_bias = 1e-3;
  double p0_misalign = 1e-5;
  /// Process noise as variances of the per-sample rates; the per-step
  /// covariance is G Q G^T dt^2.
  double q_gyro = 2e-4;
  double q_accel = 1e-3;
  double q_gyro_bias = 1e-6;
  double q_accel_bias = 2e-5;
  double q_misalign = 1e-3;
  Sigma0 sigma0 = kDefaultSigma0;

  double speed_window_s = 5.0;
  double min_speed_window_s = 1.0;
  double max_speed = 2.0;
  /// Nominal IMU rate, used only for sizing the position history.
  double rate_hz = 200.0;
  int reproject_every = 1000;

  /// When false the run is pure dead reckoning (no measurement update).
  bool enable_update = true;
  /// When false only the lateral and vertical rows are used.
  bool use_forward_observation = true;
  /// The forward speed is derived from past positions, so by default the
  /// update leaves the position unchanged (covariance still follows Joseph form).
  bool hold_position = true;

  StateCovariance initial_covariance() const;
  ProcessNoise process_noise() const;
  /// Throws InputError if any variance is non-positive or a window is invalid.
  void validate() const;
};

/// Error-state retraction. Orientation, velocity and position use the
/// world-frame (left-invariant) form R = exp(dR) R^, v = exp(dR) v^ + dv,
/// p = exp(dR) p^ + dp; biases are additive; the misalignment uses the
/// right form Rb = Rb^ exp(dRb).
FilterState retract(const FilterState& s, const ErrorVector& delta);
/// Inverse of retract: the error that maps `ref` onto `s`.
ErrorVector local_error(const FilterState& ref, const FilterState& s);

FilterState init_state(const GroundTruthSample& initial_pose, const Vec3& v0);

/// One strapdown step: R <- R exp((w - bw) dt), v <- v + R (a - ba) dt,
/// p <- p + v dt with the pre-step velocity.
FilterState propagate(const FilterState& s, const ImuSample& imu, double dt);

/// propagate() followed by injection of a 15-dim process noise sample
/// (orientation and velocity increments in the IMU frame, bias and
/// misalignment increments). noise_jacobian() differentiates this map.
FilterState propagate_with_noise(const FilterState& s, const ImuSample& imu, double dt,
                                 const NoiseVector& noise);

/// Exact Jacobian of propagate() in the retract() coordinates. To first
/// order in dt this is I + A dt with the invariant-filter blocks
/// -R (rot/gyro bias), -[v]x R and -R (vel row), I and -[p]x R (pos row).
TransitionJacobian transition_jacobian(const FilterState& s, const ImuSample& imu, double dt);
/// Jacobian of propagate_with_noise() with respect to the noise sample.
NoiseJacobian noise_jacobian(const FilterState& s, const ImuSample& imu, double dt);

/// P <- F P F^T + G Q G^T dt^2, symmetrized. Throws NumericError if P is not finite.
StateCovariance predict_covariance(const FilterState& s, const ImuSample& imu,
                                   const StateCovariance& P, const ProcessNoise& Q, double dt);

/// Body-frame velocity (R Rb)^T v.
Vec3 body_velocity(const FilterState& s);
ObservationJacobian observation_jacobian(const FilterState& s);

/// Time-stamped history of position estimates backing the forward-speed
/// pseudo-measurement. Keeps only what the averaging window needs.
class PositionHistory {
 public:
  explicit PositionHistory(double keep_s = 5.0) : keep_s_(keep_s) {}
  void push(double t_s, const Vec3& p);
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  double latest_time() const { return entries_.back().first; }
  const Vec3& latest() const { return entries_.back().second; }
  /// Position at time t, linearly interpolated; clamps to the oldest entry.
  Vec3 at(double t_s) const;
  /// Horizontal distance travelled from time `from_s` to the latest entry.
  double planar_path_length(double from_s) const;

 private:
  double keep_s_;
  std::deque<std::pair<double, Vec3>> entries_;
};

/// y = [clamp(L / w, 0, max_speed), 0, 0] where L is the horizontal path
/// length over the last w = clamp(t, 1 s, 5 s) seconds.
/// Before min_speed_window_s the planar speed of v0 is used instead.
/// The returned noise is left at identity; callers fill it from the adapter.
PseudoObservation build_pseudo_measurement(const PositionHistory& history, const Vec3& v0,
                                           double t_s, const FilterConfig& cfg);

/// Kalman update with the body-velocity pseudo-measurement (Joseph form).
/// With hold_position the gain rows for the position are chosen so the
/// corrected state keeps the prior position to first order.
/// Throws NumericError when the innovation covariance is not positive definite.
std::pair<FilterState, StateCovariance> update(const FilterState& s, const StateCovariance& P,
                                               const PseudoObservation& obs,
                                               bool use_forward = true,
                                               bool hold_position = true);

StateCovariance symmetrized(const StateCovariance& P);

struct FilterInit {
  GroundTruthSample pose;  // orientation and position used; timestamp ignored
  Vec3 v0 = Vec3::Zero();
};

struct FilterOutput {
  Timestamp t_ns = 0;
  FilterState state;
  StateCovariance covariance;
  PseudoObservation observation;  // measurement used at this step (identity noise at t0)
};

/// Recursive estimator: one instance per sequence.
class IekfFilter {
 public:
  IekfFilter(const FilterConfig& cfg, const FilterInit& init, std::unique_ptr<NoiseAdapter> adapter);

  /// Starts the run at the first sample's timestamp.
  void start(const ImuSample& first);
  /// Advances from the previous sample time to `next.t_ns` using the
  /// previous IMU sample, then applies the pseudo-measurement update.
  void step(const ImuSample& next);

  const FilterState& state() const { return state_; }
  const StateCovariance& covariance() const { return P_; }
  const PseudoObservation& last_observation() const { return last_obs_; }
  Timestamp time() const { return t_ns_; }

 private:
  FilterConfig cfg_;
  FilterInit init_;
  std::unique_ptr<NoiseAdapter> adapter_;
  ProcessNoise Q_;
  FilterState state_;
  StateCovariance P_;
  PositionHistory history_;
  PseudoObservation last_obs_;
  ImuSample prev_;
  Timestamp t0_ns_ = 0;
  Timestamp t_ns_ = 0;
  long steps_ = 0;
  bool started_ = false;
};

/// Runs the filter over an IMU stream; one output per input sample.
/// Throws NumericError with the failing timestamp on numeric breakdown.
std::vector<FilterOutput> run_sequence(std::span<const ImuSample> imu, const FilterConfig& cfg,
                                       const FilterInit& init, const NoiseAdapter& adapter);

}  // namespace pdr
