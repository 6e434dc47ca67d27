#include "pdr/imu_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace pdr::sim {

namespace {

// 5-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 5> kGlNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                             0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights = {0.2369268850561891, 0.4786286704993665,
                                               0.5688888888888889, 0.4786286704993665,
                                               0.2369268850561891};

Rotation yaw(double psi) {
  return exp_so3(Vec3(0.0, 0.0, psi));
}

/// Piecewise description of speed(t) and heading(t).
class WalkProfile {
 public:
  explicit WalkProfile(const TrajectorySpec& spec) {
    double t = 0.0;
    double heading = spec.initial_heading;
    double prev_speed = spec.segments.front().speed_mps;
    for (const auto& seg : spec.segments) {
      Piece p;
      p.start = t;
      p.end = t + seg.duration_s;
      p.heading0 = heading;
      p.turn_rate = seg.turn_rate;
      p.speed_from = prev_speed;
      p.speed_to = seg.speed_mps;
      p.blend = std::min(spec.speed_blend_s, seg.duration_s);
      pieces_.push_back(p);
      breakpoints_.push_back(p.start);
      if (p.blend > 0.0) breakpoints_.push_back(p.start + p.blend);
      heading += seg.turn_rate * seg.duration_s;
      prev_speed = seg.speed_mps;
      t = p.end;
    }
    breakpoints_.push_back(t);
    duration_ = t;
  }

  double duration() const { return duration_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  double heading(double t) const {
    const Piece& p = piece(t);
    return p.heading0 + p.turn_rate * (std::min(t, p.end) - p.start);
  }

  double speed(double t) const {
    const Piece& p = piece(t);
    const double tau = std::min(t, p.end) - p.start;
    if (p.blend <= 0.0 || tau >= p.blend) return p.speed_to;
    return p.speed_from + (p.speed_to - p.speed_from) * tau / p.blend;
  }

  Vec3 velocity(double t) const {
    const double psi = heading(t);
    return speed(t) * Vec3(std::cos(psi), std::sin(psi), 0.0);
  }

  /// Integral of velocity over [a, b], split at profile breakpoints.
  Vec3 displacement(double a, double b) const {
    std::vector<double> cuts{a};
    for (double bp : breakpoints_) {
      if (bp > a && bp < b) cuts.push_back(bp);
    }
    cuts.push_back(b);
    Vec3 sum = Vec3::Zero();
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
      const double half = 0.5 * (cuts[i + 1] - cuts[i]);
      for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
        sum += kGlWeights[k] * half * velocity(mid + half * kGlNodes[k]);
      }
    }
    return sum;
  }

 private:
  struct Piece {
    double start, end, heading0, turn_rate, speed_from, speed_to, blend;
  };

  const Piece& piece(double t) const {
    // Pieces are half-open [start, end); t past the end maps to the last one.
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                               [](double v, const Piece& p) { return v < p.end; });
    if (it == pieces_.end()) return pieces_.back();
    return *it;
  }

  std::vector<Piece> pieces_;
  std::vector<double> breakpoints_;
  double duration_ = 0.0;
};

}  // namespace

void validate(const TrajectorySpec& spec) {
  if (spec.segments.empty()) throw InputError("trajectory spec has no segments");
  if (!(spec.rate_hz > 0.0)) throw InputError("sample rate must be positive");
  if (spec.speed_blend_s < 0.0) throw InputError("speed blend time must be non-negative");
  for (std::size_t i = 0; i < spec.segments.size(); ++i) {
    const auto& s = spec.segments[i];
    if (!(s.duration_s > 0.0)) {
      throw InputError("segment " + std::to_string(i) + ": duration must be positive");
    }
    if (!(s.speed_mps >= 0.0 && s.speed_mps <= 2.0)) {
      throw InputError("segment " + std::to_string(i) + ": speed must lie in [0, 2] m/s");
    }
    if (!std::isfinite(s.turn_rate)) {
      throw InputError("segment " + std::to_string(i) + ": turn rate must be finite");
    }
  }
  if (orthonormality_error(spec.body_in_imu) > 1e-9 || spec.body_in_imu.determinant() < 0.0) {
    throw InputError("body_in_imu is not a rotation");
  }
}

std::vector<GroundTruthSample> generate_trajectory(const TrajectorySpec& spec) {
  validate(spec);
  const WalkProfile profile(spec);
  const auto n_intervals = static_cast<std::size_t>(std::llround(profile.duration() * spec.rate_hz));
  const double dt = 1.0 / spec.rate_hz;
  const Rotation imu_in_body = spec.body_in_imu.transpose();

  std::vector<GroundTruthSample> out;
  out.reserve(n_intervals + 1);
  Vec3 p = spec.initial_position;
  for (std::size_t n = 0; n <= n_intervals; ++n) {
    const double t = static_cast<double>(n) * dt;
    if (n > 0) {
      p += profile.displacement(static_cast<double>(n - 1) * dt, t);
    }
    GroundTruthSample s;
    s.t_ns = static_cast<Timestamp>(std::llround(static_cast<double>(n) * 1e9 / spec.rate_hz));
    s.position = p;
    s.velocity = profile.velocity(t);
    s.orientation = yaw(profile.heading(t)) * imu_in_body;
    out.push_back(s);
  }
  return out;
}

double uniform_period(const std::vector<GroundTruthSample>& gt) {
  if (gt.size() < 2) throw InputError("need at least two ground-truth samples");
  const double n = static_cast<double>(gt.size() - 1);
  const double nominal_ns = static_cast<double>(gt.back().t_ns - gt.front().t_ns) / n;
  if (!(nominal_ns > 0.0)) throw InputError("timestamps must be increasing");
  for (std::size_t i = 1; i < gt.size(); ++i) {
    const double step = static_cast<double>(gt[i].t_ns - gt[i - 1].t_ns);
    if (std::abs(step - nominal_ns) > 1.0) {
      throw InputError("non-uniform timestamps at sample " + std::to_string(i));
    }
  }
  return nominal_ns * 1e-9;
}

ImuNoiseSpec noise_from_process_variances(double q_gyro, double q_accel, double q_gyro_bias,
                                          double q_accel_bias, double rate_hz) {
  if (q_gyro < 0 || q_accel < 0 || q_gyro_bias < 0 || q_accel_bias < 0 || !(rate_hz > 0)) {
    throw InputError("noise variances must be non-negative and the rate positive");
  }
  const double dt = 1.0 / rate_hz;
  ImuNoiseSpec n;
  n.gyro_white_std = std::sqrt(q_gyro);
  n.accel_white_std = std::sqrt(q_accel);
  n.gyro_bias_walk_std = std::sqrt(q_gyro_bias * dt);
  n.accel_bias_walk_std = std::sqrt(q_accel_bias * dt);
  return n;
}

SynthesizedImu synthesize_imu(const std::vector<GroundTruthSample>& gt,
                              const ImuNoiseSpec& noise, std::uint64_t seed) {
  const double dt = uniform_period(gt);
  if (noise.gyro_white_std < 0 || noise.accel_white_std < 0 || noise.gyro_bias_walk_std < 0 ||
      noise.accel_bias_walk_std < 0) {
    throw InputError("noise standard deviations must be non-negative");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&]() { return Vec3(normal(rng), normal(rng), normal(rng)); };

  const double gyro_walk = noise.gyro_bias_walk_std * std::sqrt(dt);
  const double accel_walk = noise.accel_bias_walk_std * std::sqrt(dt);

  SynthesizedImu out;
  out.seed = seed;
  out.samples.reserve(gt.size());
  Vec3 bg = noise.initial_gyro_bias;
  Vec3 ba = noise.initial_accel_bias;
  Vec3 w_true = Vec3::Zero();
  Vec3 a_true = Vec3::Zero();
  for (std::size_t n = 0; n < gt.size(); ++n) {
    if (n + 1 < gt.size()) {
      const Rotation& R0 = gt[n].orientation;
      w_true = log_so3(R0.transpose() * gt[n + 1].orientation) / dt;
      a_true = R0.transpose() * (gt[n + 1].velocity - gt[n].velocity) / dt;
    }
    ImuSample s;
    s.t_ns = gt[n].t_ns;
    s.gyro = w_true + bg + noise.gyro_white_std * draw();
    s.accel = a_true + ba + noise.accel_white_std * draw();
    out.samples.push_back(s);
    out.gyro_bias.push_back(bg);
    out.accel_bias.push_back(ba);
    bg += gyro_walk * draw();
    ba += accel_walk * draw();
  }
  return out;
}

}  // namespace pdr::sim
