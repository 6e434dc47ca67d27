#include "pdr/iekf.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace pdr {

namespace {

template <int Rows, int Cols>
auto blk(Eigen::Matrix<double, Rows, Cols>& m, int r, int c) {
  return m.template block<3, 3>(r, c);
}

Vec3 seg(const ErrorVector& d, int offset) { return d.segment<3>(offset); }

}  // namespace

bool FilterState::finite() const {
  return orientation.allFinite() && velocity.allFinite() && position.allFinite() &&
         gyro_bias.allFinite() && accel_bias.allFinite() && misalignment.allFinite();
}

StateCovariance FilterConfig::initial_covariance() const {
  ErrorVector d;
  d << Vec3::Constant(p0_rot), Vec3::Constant(p0_vel), Vec3::Constant(p0_pos),
      Vec3::Constant(p0_gyro_bias), Vec3::Constant(p0_accel_bias), Vec3::Constant(p0_misalign);
  return d.asDiagonal();
}

ProcessNoise FilterConfig::process_noise() const {
  NoiseVector d;
  d << Vec3::Constant(q_gyro), Vec3::Constant(q_accel), Vec3::Constant(q_gyro_bias),
      Vec3::Constant(q_accel_bias), Vec3::Constant(q_misalign);
  return d.asDiagonal();
}

void FilterConfig::validate() const {
  const double p0[] = {p0_rot, p0_vel, p0_gyro_bias, p0_accel_bias, p0_misalign};
  for (double v : p0) {
    if (!(v > 0.0)) throw InputError("initial covariance variances must be positive");
  }
  if (!(p0_pos >= 0.0)) throw InputError("initial position variance must be non-negative");
  const double q[] = {q_gyro, q_accel, q_gyro_bias, q_accel_bias, q_misalign};
  for (double v : q) {
    if (!(v > 0.0)) throw InputError("process noise variances must be positive");
  }
  for (double v : sigma0) {
    if (!(v > 0.0)) throw InputError("measurement variances must be positive");
  }
  if (!(speed_window_s > 0.0) || !(min_speed_window_s > 0.0) ||
      min_speed_window_s > speed_window_s) {
    throw InputError("speed averaging window must satisfy 0 < min <= window");
  }
  if (!(max_speed > 0.0)) throw InputError("speed clamp must be positive");
  if (!(rate_hz > 0.0)) throw InputError("sample rate must be positive");
  if (reproject_every <= 0) throw InputError("reprojection interval must be positive");
}

FilterState retract(const FilterState& s, const ErrorVector& delta) {
  const Rotation dR = exp_so3(seg(delta, block::kRot));
  FilterState out;
  out.orientation = dR * s.orientation;
  out.velocity = dR * s.velocity + seg(delta, block::kVel);
  out.position = dR * s.position + seg(delta, block::kPos);
  out.gyro_bias = s.gyro_bias + seg(delta, block::kGyroBias);
  out.accel_bias = s.accel_bias + seg(delta, block::kAccelBias);
  out.misalignment = s.misalignment * exp_so3(seg(delta, block::kMisalign));
  return out;
}

ErrorVector local_error(const FilterState& ref, const FilterState& s) {
  ErrorVector d;
  const Vec3 xi = log_so3(s.orientation * ref.orientation.transpose());
  const Rotation dR = exp_so3(xi);
  d.segment<3>(block::kRot) = xi;
  d.segment<3>(block::kVel) = s.velocity - dR * ref.velocity;
  d.segment<3>(block::kPos) = s.position - dR * ref.position;
  d.segment<3>(block::kGyroBias) = s.gyro_bias - ref.gyro_bias;
  d.segment<3>(block::kAccelBias) = s.accel_bias - ref.accel_bias;
  d.segment<3>(block::kMisalign) = log_so3(ref.misalignment.transpose() * s.misalignment);
  return d;
}

FilterState init_state(const GroundTruthSample& initial_pose, const Vec3& v0) {
  FilterState s;
  s.orientation = initial_pose.orientation;
  s.velocity = v0;
  s.position = initial_pose.position;
  const Rotation body0 = heading_rotation(v0);
  s.misalignment = s.orientation.transpose() * body0;
  return s;
}

FilterState propagate(const FilterState& s, const ImuSample& imu, double dt) {
  const Vec3 w = imu.gyro - s.gyro_bias;
  const Vec3 a = imu.accel - s.accel_bias;
  FilterState out = s;
  out.orientation = s.orientation * exp_so3(w * dt);
  out.velocity = s.velocity + s.orientation * a * dt;
  out.position = s.position + s.velocity * dt;
  return out;
}

FilterState propagate_with_noise(const FilterState& s, const ImuSample& imu, double dt,
                                 const NoiseVector& noise) {
  const Vec3 w = imu.gyro - s.gyro_bias;
  const Vec3 a = imu.accel - s.accel_bias;
  FilterState out = s;
  out.orientation =
      s.orientation * exp_so3(noise.segment<3>(noise_block::kGyro)) * exp_so3(w * dt);
  out.velocity =
      s.velocity + s.orientation * (a * dt + noise.segment<3>(noise_block::kAccel));
  out.position = s.position + s.velocity * dt;
  out.gyro_bias += noise.segment<3>(noise_block::kGyroBias);
  out.accel_bias += noise.segment<3>(noise_block::kAccelBias);
  out.misalignment = s.misalignment * exp_so3(noise.segment<3>(noise_block::kMisalign));
  return out;
}

TransitionJacobian transition_jacobian(const FilterState& s, const ImuSample& imu, double dt) {
  const Vec3 phi = (imu.gyro - s.gyro_bias) * dt;
  const Vec3 v_next = s.velocity + s.orientation * (imu.accel - s.accel_bias) * dt;
  const Vec3 p_next = s.position + s.velocity * dt;
  // Sensitivity of the world-frame rotation error to a gyro-bias error.
  const Mat3 rot_bg = -s.orientation * left_jacobian_so3(phi) * dt;

  TransitionJacobian F = TransitionJacobian::Identity();
  blk(F, block::kRot, block::kGyroBias) = rot_bg;
  blk(F, block::kVel, block::kGyroBias) = skew(v_next) * rot_bg;
  blk(F, block::kVel, block::kAccelBias) = -s.orientation * dt;
  blk(F, block::kPos, block::kVel) = Mat3::Identity() * dt;
  blk(F, block::kPos, block::kGyroBias) = skew(p_next) * rot_bg;
  return F;
}

NoiseJacobian noise_jacobian(const FilterState& s, const ImuSample& imu, double dt) {
  const Vec3 v_next = s.velocity + s.orientation * (imu.accel - s.accel_bias) * dt;
  const Vec3 p_next = s.position + s.velocity * dt;
  const Rotation& R = s.orientation;

  NoiseJacobian G = NoiseJacobian::Zero();
  blk(G, block::kRot, noise_block::kGyro) = R;
  blk(G, block::kVel, noise_block::kGyro) = skew(v_next) * R;
  blk(G, block::kPos, noise_block::kGyro) = skew(p_next) * R;
  blk(G, block::kVel, noise_block::kAccel) = R;
  blk(G, block::kGyroBias, noise_block::kGyroBias) = Mat3::Identity();
  blk(G, block::kAccelBias, noise_block::kAccelBias) = Mat3::Identity();
  blk(G, block::kMisalign, noise_block::kMisalign) = Mat3::Identity();
  return G;
}

StateCovariance symmetrized(const StateCovariance& P) { return 0.5 * (P + P.transpose()); }

StateCovariance predict_covariance(const FilterState& s, const ImuSample& imu,
                                   const StateCovariance& P, const ProcessNoise& Q, double dt) {
  if (!P.allFinite()) throw NumericError("covariance is not finite", imu.t_ns);
  const TransitionJacobian F = transition_jacobian(s, imu, dt);
  const NoiseJacobian G = noise_jacobian(s, imu, dt);
  return symmetrized(F * P * F.transpose() + G * (Q * (dt * dt)) * G.transpose());
}

Vec3 body_velocity(const FilterState& s) {
  return (s.orientation * s.misalignment).transpose() * s.velocity;
}

ObservationJacobian observation_jacobian(const FilterState& s) {
  ObservationJacobian H = ObservationJacobian::Zero();
  H.block<3, 3>(0, block::kVel) = (s.orientation * s.misalignment).transpose();
  H.block<3, 3>(0, block::kMisalign) = skew(body_velocity(s));
  return H;
}

void PositionHistory::push(double t_s, const Vec3& p) {
  entries_.emplace_back(t_s, p);
  // keep one entry older than the window so interpolation stays bracketed
  while (entries_.size() > 2 && entries_[1].first < t_s - keep_s_) entries_.pop_front();
}

double PositionHistory::planar_path_length(double from_s) const {
  Vec3 prev = at(from_s);
  double length = 0.0;
  for (const auto& [t, p] : entries_) {
    if (t <= from_s) continue;
    length += std::hypot(p.x() - prev.x(), p.y() - prev.y());
    prev = p;
  }
  return length;
}

Vec3 PositionHistory::at(double t_s) const {
  if (t_s <= entries_.front().first) return entries_.front().second;
  if (t_s >= entries_.back().first) return entries_.back().second;
  auto hi = std::lower_bound(entries_.begin(), entries_.end(), t_s,
                             [](const auto& e, double t) { return e.first < t; });
  auto lo = std::prev(hi);
  const double span = hi->first - lo->first;
  const double alpha = span > 0.0 ? (t_s - lo->first) / span : 0.0;
  return (1.0 - alpha) * lo->second + alpha * hi->second;
}

PseudoObservation build_pseudo_measurement(const PositionHistory& history, const Vec3& v0,
                                           double t_s, const FilterConfig& cfg) {
  double speed = 0.0;
  if (t_s < cfg.min_speed_window_s || history.empty()) {
    speed = std::hypot(v0.x(), v0.y());
  } else {
    const double w = std::clamp(t_s, cfg.min_speed_window_s, cfg.speed_window_s);
    speed = history.planar_path_length(history.latest_time() - w) / w;
  }
  PseudoObservation obs;
  obs.y = Vec3(std::clamp(speed, 0.0, cfg.max_speed), 0.0, 0.0);
  return obs;
}

std::pair<FilterState, StateCovariance> update(const FilterState& s, const StateCovariance& P,
                                               const PseudoObservation& obs, bool use_forward,
                                               bool hold_position) {
  const ObservationJacobian H_full = observation_jacobian(s);
  const Vec3 innovation_full = obs.y - body_velocity(s);

  const int first = use_forward ? 0 : 1;
  const int rows = 3 - first;
  const Eigen::MatrixXd H = H_full.bottomRows(rows);
  const Eigen::VectorXd r = innovation_full.tail(rows);
  const Eigen::MatrixXd N = obs.noise.bottomRightCorner(rows, rows);

  const Eigen::MatrixXd PHt = P * H.transpose();
  const Eigen::MatrixXd S = H * PHt + N;
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw NumericError("innovation covariance is not positive definite", 0);
  }
  Eigen::MatrixXd K = llt.solve(PHt.transpose()).transpose();
  if (hold_position) {
    // exp(dR) p + dp = p to first order
    K.middleRows<3>(block::kPos) = skew(s.position) * K.middleRows<3>(block::kRot);
  }
  const ErrorVector delta = K * r;

  const StateCovariance IKH = StateCovariance::Identity() - K * H;
  const StateCovariance P_new = IKH * P * IKH.transpose() + K * N * K.transpose();

  // A zero correction must leave the state bit-identical.
  FilterState s_new = delta.isZero(0.0) ? s : retract(s, delta);
  return {s_new, symmetrized(P_new)};
}

IekfFilter::IekfFilter(const FilterConfig& cfg, const FilterInit& init,
                       std::unique_ptr<NoiseAdapter> adapter)
    : cfg_(cfg),
      init_(init),
      adapter_(std::move(adapter)),
      Q_(cfg.process_noise()),
      state_(init_state(init.pose, init.v0)),
      P_(cfg.initial_covariance()),
      history_(cfg.speed_window_s + 1.0) {
  cfg_.validate();
}

void IekfFilter::start(const ImuSample& first) {
  prev_ = first;
  t0_ns_ = first.t_ns;
  t_ns_ = first.t_ns;
  history_.push(0.0, state_.position);
  started_ = true;
}

void IekfFilter::step(const ImuSample& next) {
  if (!started_) {
    start(next);
    return;
  }
  const double dt = ns_to_s(next.t_ns - t_ns_);
  if (!(dt > 0.0) || dt > 0.1) {
    throw InputError("IMU time step out of range (0, 0.1] s at t_ns=" + std::to_string(next.t_ns));
  }

  const StateCovariance P_pred = predict_covariance(state_, prev_, P_, Q_, dt);
  FilterState s_pred = propagate(state_, prev_, dt);
  ++steps_;
  if (steps_ % cfg_.reproject_every == 0) {
    s_pred.orientation = project_to_so3(s_pred.orientation);
    s_pred.misalignment = project_to_so3(s_pred.misalignment);
  }

  const Mat3 N = adapter_->next(prev_);
  PseudoObservation obs =
      build_pseudo_measurement(history_, init_.v0, ns_to_s(t_ns_ - t0_ns_), cfg_);
  obs.noise = N;

  if (cfg_.enable_update) {
    try {
      std::tie(state_, P_) = update(s_pred, P_pred, obs, cfg_.use_forward_observation,
                                   cfg_.hold_position);
    } catch (const NumericError&) {
      throw NumericError("update failed: innovation covariance not positive definite", next.t_ns);
    }
  } else {
    state_ = s_pred;
    P_ = P_pred;
  }
  if (!state_.finite() || !P_.allFinite()) {
    throw NumericError("filter state became non-finite", next.t_ns);
  }

  last_obs_ = obs;
  prev_ = next;
  t_ns_ = next.t_ns;
  history_.push(ns_to_s(t_ns_ - t0_ns_), state_.position);
}

std::vector<FilterOutput> run_sequence(std::span<const ImuSample> imu, const FilterConfig& cfg,
                                       const FilterInit& init, const NoiseAdapter& adapter) {
  std::vector<FilterOutput> out;
  if (imu.empty()) return out;
  out.reserve(imu.size());
  IekfFilter filter(cfg, init, adapter.clone());
  for (const auto& sample : imu) {
    filter.step(sample);
    out.push_back({filter.time(), filter.state(), filter.covariance(), filter.last_observation()});
  }
  return out;
}

}  // namespace pdr
