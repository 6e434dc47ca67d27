#include "pdr/noise_adapter.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pdr {

namespace {

using json = nlohmann::json;
using Kind = WeightsError::Kind;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw WeightsError(Kind::kParse, std::string("missing field '") + key + "'");
  return j.at(key);
}

std::vector<double> read_vector(const json& j, const std::string& name, std::size_t n) {
  if (!j.is_array() || j.size() != n) {
    throw WeightsError(Kind::kShape, name + ": expected " + std::to_string(n) + " values");
  }
  std::vector<double> v;
  v.reserve(n);
  for (const auto& x : j) {
    if (!x.is_number()) throw WeightsError(Kind::kParse, name + ": non-numeric entry");
    v.push_back(x.get<double>());
  }
  return v;
}

Conv1d read_conv(const json& j, const std::string& name, int out, int in, int kernel,
                 int dilation) {
  const json& w = field(j, "weight");
  const std::string shape = "[" + std::to_string(out) + "][" + std::to_string(in) + "][" +
                            std::to_string(kernel) + "]";
  if (!w.is_array() || w.size() != static_cast<std::size_t>(out)) {
    throw WeightsError(Kind::kShape, name + ".weight: expected shape " + shape);
  }
  Conv1d c;
  c.dilation = dilation;
  c.taps.assign(kernel, Eigen::MatrixXd::Zero(out, in));
  for (int o = 0; o < out; ++o) {
    const json& row = w[o];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(in)) {
      throw WeightsError(Kind::kShape, name + ".weight: expected shape " + shape);
    }
    for (int i = 0; i < in; ++i) {
      const auto taps = read_vector(row[i], name + ".weight (expected shape " + shape + ")",
                                    static_cast<std::size_t>(kernel));
      for (int k = 0; k < kernel; ++k) c.taps[k](o, i) = taps[k];
    }
  }
  const auto b = read_vector(field(j, "bias"), name + ".bias", static_cast<std::size_t>(out));
  c.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), out);
  return c;
}

json write_conv(const Conv1d& c) {
  json weight = json::array();
  for (int o = 0; o < c.out_channels(); ++o) {
    json row = json::array();
    for (int i = 0; i < c.in_channels(); ++i) {
      json taps = json::array();
      for (int k = 0; k < c.kernel(); ++k) taps.push_back(c.taps[k](o, i));
      row.push_back(taps);
    }
    weight.push_back(row);
  }
  json bias = json::array();
  for (int o = 0; o < c.out_channels(); ++o) bias.push_back(c.bias(o));
  return {{"weight", weight}, {"bias", bias}};
}

// nlohmann prints the shortest round-trip form; the file format asks for a
// fixed 17 significant digits, so numbers are emitted by hand.
void emit(std::ostringstream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << json(it.key()).dump() << ": ";
        emit(os, it.value(), indent, depth + 1);
      }
      os << "\n" << close_pad << "}";
      break;
    }
    case json::value_t::array: {
      const bool leaf = !j.empty() && !j.front().is_structured();
      os << "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << (leaf ? ", " : ",");
        if (!leaf) os << "\n" << pad;
        emit(os, j[i], indent, depth + 1);
      }
      if (!leaf && !j.empty()) os << "\n" << close_pad;
      os << "]";
      break;
    }
    case json::value_t::number_float:
      os << fmt17(j.get<double>());
      break;
    default:
      os << j.dump();
  }
}

Eigen::MatrixXd relu(Eigen::MatrixXd m) { return m.cwiseMax(0.0); }

}  // namespace

Eigen::MatrixXd Conv1d::forward(const Eigen::MatrixXd& x) const {
  const int span = dilation * (kernel() - 1);
  const int len = static_cast<int>(x.cols()) - span;
  if (len <= 0) throw std::invalid_argument("Conv1d: input shorter than receptive field");
  Eigen::MatrixXd y = bias.replicate(1, len);
  for (int k = 0; k < kernel(); ++k) {
    y.noalias() += taps[k] * x.middleCols(k * dilation, len);
  }
  return y;
}

AdapterWeights AdapterWeights::zeros() {
  AdapterWeights w;
  w.conv1.dilation = kConv1Dilation;
  w.conv1.taps.assign(kConv1Kernel, Eigen::MatrixXd::Zero(kHidden, kChannels));
  w.conv1.bias = Eigen::VectorXd::Zero(kHidden);
  w.conv2.dilation = kConv2Dilation;
  w.conv2.taps.assign(kConv2Kernel, Eigen::MatrixXd::Zero(kHidden, kHidden));
  w.conv2.bias = Eigen::VectorXd::Zero(kHidden);
  return w;
}

AdapterWeights parse_weights(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw WeightsError(Kind::kParse, std::string("weight file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw WeightsError(Kind::kParse, "weight file must be a JSON object");

  AdapterWeights w;
  const json& version = field(j, "format_version");
  if (!version.is_number_integer() || version.get<int>() != AdapterWeights::kFormatVersion) {
    throw WeightsError(Kind::kVersion, "unsupported weight format_version " + version.dump());
  }
  const json& activation = field(j, "activation");
  if (!activation.is_string() || activation.get<std::string>() != "relu") {
    throw WeightsError(Kind::kValidation, "unsupported activation " + activation.dump());
  }
  const json& window = field(j, "window");
  if (!window.is_number_integer() || window.get<int>() != AdapterWeights::kWindow) {
    throw WeightsError(Kind::kShape, "window must be " + std::to_string(AdapterWeights::kWindow) +
                                         ", got " + window.dump());
  }
  w.window = AdapterWeights::kWindow;

  const auto mean = read_vector(field(j, "norm_mean"), "norm_mean", 6);
  const auto stdv = read_vector(field(j, "norm_std"), "norm_std", 6);
  for (int i = 0; i < 6; ++i) {
    w.norm_mean[i] = mean[i];
    if (!(stdv[i] > 0.0) || !std::isfinite(stdv[i])) {
      throw WeightsError(Kind::kValidation,
                         "norm_std[" + std::to_string(i) + "] must be positive and finite");
    }
    w.norm_std[i] = stdv[i];
  }

  w.conv1 = read_conv(field(j, "conv1"), "conv1", AdapterWeights::kHidden,
                      AdapterWeights::kChannels, AdapterWeights::kConv1Kernel,
                      AdapterWeights::kConv1Dilation);
  w.conv2 = read_conv(field(j, "conv2"), "conv2", AdapterWeights::kHidden,
                      AdapterWeights::kHidden, AdapterWeights::kConv2Kernel,
                      AdapterWeights::kConv2Dilation);

  const json& fc = field(j, "fc");
  const json& fcw = field(fc, "weight");
  if (!fcw.is_array() || fcw.size() != 3) {
    throw WeightsError(Kind::kShape, "fc.weight: expected shape [3][32]");
  }
  for (int r = 0; r < 3; ++r) {
    const auto row = read_vector(fcw[r], "fc.weight (expected shape [3][32])", 32);
    for (int c = 0; c < 32; ++c) w.fc_weight(r, c) = row[c];
  }
  const auto fcb = read_vector(field(fc, "bias"), "fc.bias", 3);
  w.fc_bias = Vec3(fcb[0], fcb[1], fcb[2]);

  const auto s0 = read_vector(field(j, "sigma0"), "sigma0", 3);
  for (int i = 0; i < 3; ++i) {
    if (!(s0[i] > 0.0)) throw WeightsError(Kind::kValidation, "sigma0 entries must be positive");
    w.sigma0[i] = s0[i];
  }
  return w;
}

AdapterWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw WeightsError(Kind::kParse, "cannot open weight file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_weights(ss.str());
}

std::string serialize_weights(const AdapterWeights& w) {
  json j;
  j["format_version"] = w.format_version;
  j["activation"] = "relu";
  j["window"] = w.window;
  j["norm_mean"] = w.norm_mean;
  j["norm_std"] = w.norm_std;
  j["conv1"] = write_conv(w.conv1);
  j["conv2"] = write_conv(w.conv2);
  json fcw = json::array();
  for (int r = 0; r < 3; ++r) {
    json row = json::array();
    for (int c = 0; c < 32; ++c) row.push_back(w.fc_weight(r, c));
    fcw.push_back(row);
  }
  j["fc"] = {{"weight", fcw}, {"bias", {w.fc_bias(0), w.fc_bias(1), w.fc_bias(2)}}};
  j["sigma0"] = w.sigma0;
  std::ostringstream os;
  emit(os, j, 2, 0);
  os << "\n";
  return os.str();
}

void save_weights(const std::filesystem::path& path, const AdapterWeights& w) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw WeightsError(Kind::kParse, "cannot write " + tmp.string());
    out << serialize_weights(w);
  }
  std::filesystem::rename(tmp, path);
}

WindowBuffer::WindowBuffer(int capacity)
    : capacity_(capacity), data_(Eigen::MatrixXd::Zero(6, capacity)) {
  if (capacity <= 0) throw std::invalid_argument("WindowBuffer capacity must be positive");
}

void WindowBuffer::push(const ImuSample& s) {
  Eigen::Matrix<double, 6, 1> col;
  col << s.gyro, s.accel;
  if (count_ == 0) {
    data_.colwise() = col;
    count_ = capacity_;
    head_ = 0;
    return;
  }
  data_.col(head_) = col;
  head_ = (head_ + 1) % capacity_;
}

void WindowBuffer::clear() {
  count_ = 0;
  head_ = 0;
}

Eigen::MatrixXd WindowBuffer::matrix() const {
  Eigen::MatrixXd out(6, capacity_);
  for (int i = 0; i < capacity_; ++i) out.col(i) = data_.col((head_ + i) % capacity_);
  return out;
}

Vec3 infer_z(const Eigen::MatrixXd& window, const AdapterWeights& w) {
  if (window.rows() != 6 || window.cols() != w.window) {
    throw std::invalid_argument("infer_z: window must be 6 x " + std::to_string(w.window));
  }
  Eigen::MatrixXd x = window;
  for (int c = 0; c < 6; ++c) {
    x.row(c) = (x.row(c).array() - w.norm_mean[c]) / w.norm_std[c];
  }
  const Eigen::MatrixXd h1 = relu(w.conv1.forward(x));
  const Eigen::MatrixXd h2 = relu(w.conv2.forward(h1));
  const Vec3 logits = w.fc_weight * h2.col(h2.cols() - 1) + w.fc_bias;
  return 3.0 * logits.array().tanh().matrix();
}

Vec3 infer_z(const WindowBuffer& window, const AdapterWeights& weights) {
  if (!window.full()) throw std::logic_error("infer_z: window buffer is not full");
  return infer_z(window.matrix(), weights);
}

Mat3 measurement_noise(const Vec3& z, const Sigma0& sigma0) {
  Mat3 n = Mat3::Zero();
  for (int k = 0; k < 3; ++k) n(k, k) = sigma0[k] * std::pow(10.0, z(k));
  return n;
}

ConstantAdapter::ConstantAdapter(const Sigma0& sigma0)
    : n_(measurement_noise(Vec3::Zero(), sigma0)) {}

std::unique_ptr<NoiseAdapter> ConstantAdapter::clone() const {
  return std::make_unique<ConstantAdapter>(*this);
}

std::unique_ptr<NoiseAdapter> constant_adapter(const Sigma0& sigma0) {
  return std::make_unique<ConstantAdapter>(sigma0);
}

LearnedAdapter::LearnedAdapter(std::shared_ptr<const AdapterWeights> weights)
    : weights_(std::move(weights)), window_(weights_->window) {}

Mat3 LearnedAdapter::next(const ImuSample& latest) {
  window_.push(latest);
  last_z_ = infer_z(window_, *weights_);
  return measurement_noise(last_z_, weights_->sigma0);
}

std::unique_ptr<NoiseAdapter> LearnedAdapter::clone() const {
  auto copy = std::make_unique<LearnedAdapter>(weights_);
  return copy;
}

}  // namespace pdr
