#pragma once

#include "pdr/types.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <vector>

namespace pdr {

using Sigma0 = std::array<double, 3>;  // (forward, lateral, up) variances

/// Baseline measurement variances (m^2/s^2) for forward, lateral and up.
inline constexpr Sigma0 kDefaultSigma0 = {3.0, 2.0, 0.2};

/// Failure while loading or validating an adapter weight file.
class WeightsError : public std::runtime_error {
 public:
  enum class Kind { kParse, kVersion, kShape, kValidation };
  WeightsError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Dilated 1-D convolution with no padding. taps[k] is (out x in) and
/// multiplies input frame t + k * dilation.
struct Conv1d {
  std::vector<Eigen::MatrixXd> taps;
  Eigen::VectorXd bias;
  int dilation = 1;

  int kernel() const { return static_cast<int>(taps.size()); }
  int in_channels() const { return taps.empty() ? 0 : static_cast<int>(taps.front().cols()); }
  int out_channels() const { return static_cast<int>(bias.size()); }
  /// (in x L) -> (out x (L - dilation * (kernel - 1)))
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
};

/// Network parameters plus the normalization statistics that travel with them.
/// Input channel order is (wx, wy, wz, ax, ay, az).
struct AdapterWeights {
  static constexpr int kFormatVersion = 1;
  static constexpr int kChannels = 6;
  static constexpr int kHidden = 32;
  static constexpr int kConv1Kernel = 6;
  static constexpr int kConv1Dilation = 2;
  static constexpr int kConv2Kernel = 5;
  static constexpr int kConv2Dilation = 3;
  static constexpr int kWindow = 23;

  int format_version = kFormatVersion;
  int window = kWindow;
  std::array<double, 6> norm_mean{};
  std::array<double, 6> norm_std{1, 1, 1, 1, 1, 1};
  Conv1d conv1;
  Conv1d conv2;
  Eigen::Matrix<double, 3, kHidden> fc_weight = Eigen::Matrix<double, 3, kHidden>::Zero();
  Eigen::Vector3d fc_bias = Eigen::Vector3d::Zero();
  Sigma0 sigma0 = kDefaultSigma0;

  /// All-zero network with identity normalization.
  static AdapterWeights zeros();
};

/// Reads and validates a weight file. Throws WeightsError.
AdapterWeights load_weights(const std::filesystem::path& path);
/// Parses weight-file text. Throws WeightsError.
AdapterWeights parse_weights(const std::string& text);
/// Serializes with 17 significant digits so a reload is bit-exact.
std::string serialize_weights(const AdapterWeights& w);
void save_weights(const std::filesystem::path& path, const AdapterWeights& w);

/// The last W IMU samples, oldest first. The first sample pushed is
/// replicated to fill the buffer so inference is defined from t = 0.
class WindowBuffer {
 public:
  explicit WindowBuffer(int capacity = AdapterWeights::kWindow);

  void push(const ImuSample& s);
  bool full() const { return count_ == capacity_; }
  int capacity() const { return capacity_; }
  void clear();
  /// 6 x W matrix, columns in time order.
  Eigen::MatrixXd matrix() const;

 private:
  int capacity_;
  int head_ = 0;   // next slot to write
  int count_ = 0;
  Eigen::MatrixXd data_;
};

/// Network forward pass, Z = 3 tanh(fc(relu(conv2(relu(conv1(x)))))).
Vec3 infer_z(const WindowBuffer& window, const AdapterWeights& weights);
/// Same forward pass on a raw 6 x W window.
Vec3 infer_z(const Eigen::MatrixXd& window, const AdapterWeights& weights);

/// diag(sigma0_k * 10^Z_k).
Mat3 measurement_noise(const Vec3& z, const Sigma0& sigma0);

/// Source of the per-step measurement covariance. One instance per filter run.
class NoiseAdapter {
 public:
  virtual ~NoiseAdapter() = default;
  /// Observe the newest IMU sample and return the covariance for this step.
  virtual Mat3 next(const ImuSample& latest) = 0;
  virtual void reset() {}
  virtual std::unique_ptr<NoiseAdapter> clone() const = 0;
};

class ConstantAdapter final : public NoiseAdapter {
 public:
  explicit ConstantAdapter(const Sigma0& sigma0 = kDefaultSigma0);
  Mat3 next(const ImuSample&) override { return n_; }
  std::unique_ptr<NoiseAdapter> clone() const override;

 private:
  Mat3 n_;
};

std::unique_ptr<NoiseAdapter> constant_adapter(const Sigma0& sigma0 = kDefaultSigma0);

class LearnedAdapter final : public NoiseAdapter {
 public:
  explicit LearnedAdapter(std::shared_ptr<const AdapterWeights> weights);
  Mat3 next(const ImuSample& latest) override;
  void reset() override { window_.clear(); }
  std::unique_ptr<NoiseAdapter> clone() const override;
  const Vec3& last_z() const { return last_z_; }

 private:
  std::shared_ptr<const AdapterWeights> weights_;
  WindowBuffer window_;
  Vec3 last_z_ = Vec3::Zero();
};

}  // namespace pdr
