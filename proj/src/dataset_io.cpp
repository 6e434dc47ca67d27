#include "pdr/dataset_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace pdr::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Header-indexed CSV table.
class CsvTable {
 public:
  explicit CsvTable(const std::filesystem::path& path) : path_(path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
    const auto header = split(line);
    for (std::size_t i = 0; i < header.size(); ++i) columns_[header[i]] = i;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (trim(line).empty()) continue;
      auto cells = split(line);
      if (cells.size() != header.size()) {
        throw InputError(path.string() + ": row " + std::to_string(row) + " has " +
                         std::to_string(cells.size()) + " fields, expected " +
                         std::to_string(header.size()));
      }
      rows_.push_back(std::move(cells));
      row_numbers_.push_back(row);
    }
  }

  /// Column index; throws InputError naming the column if absent.
  std::size_t column(const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) {
      throw InputError(path_.string() + ": missing column '" + name + "'");
    }
    return it->second;
  }

  std::size_t size() const { return rows_.size(); }

  double number(std::size_t r, std::size_t c) const {
    const std::string& s = rows_[r][c];
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw InputError(path_.string() + ": row " + std::to_string(row_numbers_[r]) +
                       ": cannot parse '" + s + "' as a number");
    }
    return v;
  }

  Timestamp timestamp(std::size_t r, std::size_t c) const {
    const std::string& s = rows_[r][c];
    Timestamp t = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), t);
    if (ec == std::errc() && ptr == s.data() + s.size()) return t;
    return static_cast<Timestamp>(std::llround(number(r, c)));
  }

  Vec3 vec3(std::size_t r, const std::array<std::size_t, 3>& cols) const {
    return Vec3(number(r, cols[0]), number(r, cols[1]), number(r, cols[2]));
  }

 private:
  std::filesystem::path path_;
  std::map<std::string, std::size_t> columns_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> row_numbers_;
};

std::array<std::size_t, 3> cols3(const CsvTable& t, const std::string& a, const std::string& b,
                                 const std::string& c) {
  return {t.column(a), t.column(b), t.column(c)};
}

template <typename T>
void sort_and_check(std::vector<T>& v, const std::filesystem::path& path) {
  std::stable_sort(v.begin(), v.end(), [](const T& a, const T& b) { return a.t_ns < b.t_ns; });
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i].t_ns == v[i - 1].t_ns) {
      throw InputError(path.string() + ": duplicate timestamp " + std::to_string(v[i].t_ns));
    }
  }
}

std::vector<ImuSample> read_imu(const CsvTable& t, const std::string& time_col,
                                const std::array<std::size_t, 3>& gyro,
                                const std::array<std::size_t, 3>& accel) {
  const std::size_t tc = t.column(time_col);
  std::vector<ImuSample> out;
  out.reserve(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    out.push_back({t.timestamp(r, tc), t.vec3(r, gyro), t.vec3(r, accel)});
  }
  return out;
}

std::vector<PoseRecord> read_poses(const CsvTable& t, const std::filesystem::path& path,
                                   const std::string& time_col,
                                   const std::array<std::size_t, 3>& pos,
                                   const std::array<std::size_t, 4>& quat_wxyz) {
  const std::size_t tc = t.column(time_col);
  std::vector<PoseRecord> out;
  out.reserve(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    PoseRecord p;
    p.t_ns = t.timestamp(r, tc);
    p.position = t.vec3(r, pos);
    p.orientation = Quat(t.number(r, quat_wxyz[0]), t.number(r, quat_wxyz[1]),
                         t.number(r, quat_wxyz[2]), t.number(r, quat_wxyz[3]));
    if (std::abs(p.orientation.norm() - 1.0) > 1e-6) {
      throw InputError(path.string() + ": row " + std::to_string(r + 1) +
                       ": orientation quaternion is not unit length");
    }
    out.push_back(p);
  }
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

Quat nlerp(Quat a, Quat b, double alpha) {
  if (a.dot(b) < 0.0) b.coeffs() *= -1.0;
  Quat q;
  q.coeffs() = (1.0 - alpha) * a.coeffs() + alpha * b.coeffs();
  return q.normalized();
}

/// Index of the last element with t_ns <= t (stream must bracket t).
template <typename T>
std::size_t bracket(const std::vector<T>& v, Timestamp t) {
  auto it = std::upper_bound(v.begin(), v.end(), t,
                             [](Timestamp x, const T& s) { return x < s.t_ns; });
  return static_cast<std::size_t>(std::distance(v.begin(), it)) - 1;
}

template <typename T>
double weight(const std::vector<T>& v, std::size_t i, Timestamp t) {
  if (i + 1 >= v.size() || v[i].t_ns == t) return 0.0;
  return static_cast<double>(t - v[i].t_ns) / static_cast<double>(v[i + 1].t_ns - v[i].t_ns);
}

ImuSample interp_imu(const std::vector<ImuSample>& imu, Timestamp t) {
  const std::size_t i = bracket(imu, t);
  const double a = weight(imu, i, t);
  ImuSample s;
  s.t_ns = t;
  if (a == 0.0) {
    s.gyro = imu[i].gyro;
    s.accel = imu[i].accel;
  } else {
    s.gyro = (1.0 - a) * imu[i].gyro + a * imu[i + 1].gyro;
    s.accel = (1.0 - a) * imu[i].accel + a * imu[i + 1].accel;
  }
  return s;
}

PoseRecord interp_pose(const std::vector<PoseRecord>& poses, Timestamp t) {
  const std::size_t i = bracket(poses, t);
  const double a = weight(poses, i, t);
  if (a == 0.0) {
    PoseRecord p = poses[i];
    p.t_ns = t;
    return p;
  }
  PoseRecord p;
  p.t_ns = t;
  p.position = (1.0 - a) * poses[i].position + a * poses[i + 1].position;
  p.orientation = nlerp(poses[i].orientation, poses[i + 1].orientation, a);
  return p;
}

void fill_velocities(AlignedSequence& seq) {
  auto& s = seq.samples;
  const int n = static_cast<int>(s.size());
  const int half = seq.velocity_window / 2;
  for (int k = 0; k < n; ++k) {
    const int lo = std::max(0, k - half);
    const int hi = std::min(n - 1, k + half);
    if (lo == hi) {
      s[k].world_velocity = Vec3::Zero();
    } else {
      s[k].world_velocity =
          (s[hi].position - s[lo].position) / ns_to_s(s[hi].t_ns - s[lo].t_ns);
    }
  }
  const auto labels = body_velocity_labels(seq);
  for (int k = 0; k < n; ++k) s[k].body_velocity = labels[k];
}

}  // namespace

Format parse_format(const std::string& name) {
  if (name == "canonical") return Format::kCanonical;
  if (name == "ridi") return Format::kRidi;
  throw InputError("unknown format '" + name + "' (expected canonical or ridi)");
}

std::vector<ImuSample> load_imu_csv(const std::filesystem::path& path) {
  const CsvTable t(path);
  auto imu = read_imu(t, "t_ns", cols3(t, "wx", "wy", "wz"), cols3(t, "ax", "ay", "az"));
  sort_and_check(imu, path);
  return imu;
}

std::vector<PoseRecord> load_pose_csv(const std::filesystem::path& path) {
  const CsvTable t(path);
  auto poses = read_poses(t, path, "t_ns", cols3(t, "px", "py", "pz"),
                          {t.column("qw"), t.column("qx"), t.column("qy"), t.column("qz")});
  sort_and_check(poses, path);
  return poses;
}

RawSequence load_sequence(const std::filesystem::path& imu_path,
                          const std::filesystem::path& pose_path, Format format) {
  RawSequence seq;
  if (format == Format::kCanonical) {
    seq.imu = load_imu_csv(imu_path);
    if (!pose_path.empty()) seq.poses = load_pose_csv(pose_path);
    return seq;
  }
  const CsvTable imu_table(imu_path);
  seq.imu = read_imu(imu_table, "time", cols3(imu_table, "gyro_x", "gyro_y", "gyro_z"),
                     cols3(imu_table, "linacce_x", "linacce_y", "linacce_z"));
  sort_and_check(seq.imu, imu_path);
  const auto& pp = pose_path.empty() ? imu_path : pose_path;
  const CsvTable pose_table(pp);
  seq.poses = read_poses(pose_table, pp, "time", cols3(pose_table, "pos_x", "pos_y", "pos_z"),
                         {pose_table.column("ori_w"), pose_table.column("ori_x"),
                          pose_table.column("ori_y"), pose_table.column("ori_z")});
  sort_and_check(seq.poses, pp);
  return seq;
}

void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& imu) {
  auto out = open_out(path);
  out << "t_ns,wx,wy,wz,ax,ay,az\n";
  for (const auto& s : imu) {
    out << s.t_ns << ',' << num(s.gyro.x()) << ',' << num(s.gyro.y()) << ',' << num(s.gyro.z())
        << ',' << num(s.accel.x()) << ',' << num(s.accel.y()) << ',' << num(s.accel.z())
        << '\n';
  }
}

void write_pose_csv(const std::filesystem::path& path, const std::vector<PoseRecord>& poses) {
  auto out = open_out(path);
  out << "t_ns,px,py,pz,qw,qx,qy,qz\n";
  for (const auto& p : poses) {
    out << p.t_ns << ',' << num(p.position.x()) << ',' << num(p.position.y()) << ','
        << num(p.position.z()) << ',' << num(p.orientation.w()) << ','
        << num(p.orientation.x()) << ',' << num(p.orientation.y()) << ','
        << num(p.orientation.z()) << '\n';
  }
}

std::vector<ImuSample> AlignedSequence::imu() const {
  std::vector<ImuSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.imu);
  return out;
}

std::vector<GroundTruthSample> AlignedSequence::ground_truth() const {
  std::vector<GroundTruthSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s.t_ns, s.position, s.orientation, s.world_velocity});
  return out;
}

AlignedSequence synchronize(const std::vector<ImuSample>& imu,
                            const std::vector<PoseRecord>& poses) {
  if (imu.empty() || poses.empty()) throw DataMismatchError("cannot synchronize an empty stream");
  const Timestamp lo = std::max(imu.front().t_ns, poses.front().t_ns);
  const Timestamp hi = std::min(imu.back().t_ns, poses.back().t_ns);
  if (lo > hi) throw DataMismatchError("IMU and pose streams do not overlap in time");

  std::vector<Timestamp> inside;
  for (const auto& p : poses) {
    if (p.t_ns >= lo && p.t_ns <= hi) inside.push_back(p.t_ns);
  }
  if (inside.empty()) throw DataMismatchError("no pose timestamps inside the IMU time range");

  std::vector<Timestamp> grid;
  double rate = 0.0;
  if (inside.size() == 1) {
    grid = inside;
  } else {
    std::vector<Timestamp> steps;
    for (std::size_t i = 1; i < inside.size(); ++i) steps.push_back(inside[i] - inside[i - 1]);
    std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
    const double period = static_cast<double>(steps[steps.size() / 2]);
    rate = 1e9 / period;
    bool uniform = true;
    for (std::size_t i = 1; i < inside.size(); ++i) {
      const double step = static_cast<double>(inside[i] - inside[i - 1]);
      if (std::abs(step - period) > std::max(1.0, 1e-6 * period)) uniform = false;
    }
    if (uniform) {
      grid = inside;
    } else {
      for (long k = 0;; ++k) {
        const Timestamp t = inside.front() + std::llround(static_cast<double>(k) * period);
        if (t > inside.back()) break;
        grid.push_back(t);
      }
    }
  }

  AlignedSequence seq;
  seq.rate_hz = rate;
  seq.velocity_window = kVelocityWindow;
  seq.samples.reserve(grid.size());
  for (Timestamp t : grid) {
    AlignedSample s;
    s.t_ns = t;
    s.imu = interp_imu(imu, t);
    const PoseRecord p = interp_pose(poses, t);
    s.position = p.position;
    s.orientation = to_rotation(p.orientation);
    seq.samples.push_back(s);
  }
  fill_velocities(seq);
  return seq;
}

AlignedSequence from_ground_truth(const std::vector<GroundTruthSample>& gt,
                                  const std::vector<ImuSample>& imu) {
  if (gt.size() != imu.size()) throw DataMismatchError("ground truth and IMU lengths differ");
  AlignedSequence seq;
  if (gt.size() > 1) {
    seq.rate_hz = 1e9 * static_cast<double>(gt.size() - 1) /
                  static_cast<double>(gt.back().t_ns - gt.front().t_ns);
  }
  seq.velocity_window = 1;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i].t_ns != imu[i].t_ns) throw DataMismatchError("ground truth and IMU timestamps differ");
    AlignedSample s;
    s.t_ns = gt[i].t_ns;
    s.imu = imu[i];
    s.position = gt[i].position;
    s.orientation = gt[i].orientation;
    s.world_velocity = gt[i].velocity;
    seq.samples.push_back(s);
  }
  const auto labels = body_velocity_labels(seq);
  for (std::size_t i = 0; i < labels.size(); ++i) seq.samples[i].body_velocity = labels[i];
  return seq;
}

std::vector<Vec3> body_velocity_labels(const AlignedSequence& seq) {
  std::vector<Vec3> out;
  out.reserve(seq.samples.size());
  for (const auto& s : seq.samples) {
    const Vec3& v = s.world_velocity;
    Vec3 label = heading_rotation(v).transpose() * v;
    label.y() = 0.0;  // exact by construction; rounding would leave ~1e-17
    out.push_back(label);
  }
  return out;
}

void write_aligned_csv(const std::filesystem::path& path, const AlignedSequence& seq,
                       const std::vector<std::string>& sources) {
  {
    auto out = open_out(path);
    out << "t_ns,wx,wy,wz,ax,ay,az,px,py,pz,qw,qx,qy,qz,vx,vy,vz,vbx,vby,vbz\n";
    for (const auto& s : seq.samples) {
      const Quat q = to_quaternion(s.orientation);
      out << s.t_ns;
      for (const Vec3* v : {&s.imu.gyro, &s.imu.accel, &s.position}) {
        out << ',' << num(v->x()) << ',' << num(v->y()) << ',' << num(v->z());
      }
      out << ',' << num(q.w()) << ',' << num(q.x()) << ',' << num(q.y()) << ',' << num(q.z());
      for (const Vec3* v : {&s.world_velocity, &s.body_velocity}) {
        out << ',' << num(v->x()) << ',' << num(v->y()) << ',' << num(v->z());
      }
      out << '\n';
    }
  }
  nlohmann::json meta;
  meta["rate_hz"] = seq.rate_hz;
  meta["velocity_window"] = seq.velocity_window;
  meta["samples"] = seq.samples.size();
  meta["sources"] = sources;
  auto side = open_out(path.string() + ".json");
  side << meta.dump(2) << '\n';
}

AlignedSequence load_aligned_csv(const std::filesystem::path& path) {
  const CsvTable t(path);
  const std::size_t tc = t.column("t_ns");
  const auto gyro = cols3(t, "wx", "wy", "wz");
  const auto accel = cols3(t, "ax", "ay", "az");
  const auto pos = cols3(t, "px", "py", "pz");
  const auto vel = cols3(t, "vx", "vy", "vz");
  const auto vb = cols3(t, "vbx", "vby", "vbz");
  const std::array<std::size_t, 4> q = {t.column("qw"), t.column("qx"), t.column("qy"),
                                        t.column("qz")};
  AlignedSequence seq;
  for (std::size_t r = 0; r < t.size(); ++r) {
    AlignedSample s;
    s.t_ns = t.timestamp(r, tc);
    s.imu = {s.t_ns, t.vec3(r, gyro), t.vec3(r, accel)};
    s.position = t.vec3(r, pos);
    s.orientation =
        to_rotation(Quat(t.number(r, q[0]), t.number(r, q[1]), t.number(r, q[2]), t.number(r, q[3])));
    s.world_velocity = t.vec3(r, vel);
    s.body_velocity = t.vec3(r, vb);
    seq.samples.push_back(s);
  }
  const std::filesystem::path meta_path = path.string() + ".json";
  if (std::filesystem::exists(meta_path)) {
    std::ifstream in(meta_path);
    const auto meta = nlohmann::json::parse(in, nullptr, false);
    if (!meta.is_discarded()) {
      seq.rate_hz = meta.value("rate_hz", 0.0);
      seq.velocity_window = meta.value("velocity_window", kVelocityWindow);
    }
  }
  return seq;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrajectoryRow>& rows) {
  auto out = open_out(path);
  out << "t_ns,px,py,pz,qw,qx,qy,qz,vx,vy,vz\n";
  for (const auto& r : rows) {
    out << r.t_ns << ',' << num(r.position.x()) << ',' << num(r.position.y()) << ','
        << num(r.position.z()) << ',' << num(r.orientation.w()) << ','
        << num(r.orientation.x()) << ',' << num(r.orientation.y()) << ','
        << num(r.orientation.z()) << ',' << num(r.velocity.x()) << ',' << num(r.velocity.y())
        << ',' << num(r.velocity.z()) << '\n';
  }
}

std::vector<TrajectoryRow> load_trajectory_csv(const std::filesystem::path& path) {
  const CsvTable t(path);
  const std::size_t tc = t.column("t_ns");
  const auto pos = cols3(t, "px", "py", "pz");
  const auto vel = cols3(t, "vx", "vy", "vz");
  const std::array<std::size_t, 4> q = {t.column("qw"), t.column("qx"), t.column("qy"),
                                        t.column("qz")};
  std::vector<TrajectoryRow> rows;
  for (std::size_t r = 0; r < t.size(); ++r) {
    TrajectoryRow row;
    row.t_ns = t.timestamp(r, tc);
    row.position = t.vec3(r, pos);
    row.orientation = Quat(t.number(r, q[0]), t.number(r, q[1]), t.number(r, q[2]), t.number(r, q[3]));
    row.velocity = t.vec3(r, vel);
    rows.push_back(row);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].t_ns <= rows[i - 1].t_ns) {
      throw InputError(path.string() + ": timestamps not increasing at row " + std::to_string(i + 1));
    }
  }
  return rows;
}

}  // namespace pdr::io
