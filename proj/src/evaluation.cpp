#include "pdr/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pdr::eval {

namespace {

void check_timebase(const Trajectory& est, const Trajectory& gt) {
  if (est.empty() || gt.empty()) throw DataMismatchError("empty trajectory");
  if (est.t_ns != gt.t_ns) {
    throw DataMismatchError("estimate and ground truth do not share timestamps (" +
                            std::to_string(est.size()) + " vs " + std::to_string(gt.size()) +
                            " frames)");
  }
}

double rmse(const Trajectory& est, const Trajectory& gt, std::size_t begin, std::size_t end,
            const Vec3& shift) {
  double sum = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    sum += (est.position[k] - shift - gt.position[k]).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(end - begin));
}

}  // namespace

Trajectory from_ground_truth(const std::vector<GroundTruthSample>& gt) {
  Trajectory t;
  for (const auto& s : gt) {
    t.t_ns.push_back(s.t_ns);
    t.position.push_back(s.position);
    t.orientation.push_back(s.orientation);
    t.velocity.push_back(s.velocity);
  }
  return t;
}

Trajectory from_aligned(const io::AlignedSequence& seq) {
  return from_ground_truth(seq.ground_truth());
}

Trajectory from_filter(const std::vector<FilterOutput>& out) {
  Trajectory t;
  for (const auto& o : out) {
    t.t_ns.push_back(o.t_ns);
    t.position.push_back(o.state.position);
    t.orientation.push_back(o.state.orientation);
    t.velocity.push_back(o.state.velocity);
  }
  return t;
}

Trajectory from_rows(const std::vector<io::TrajectoryRow>& rows) {
  Trajectory t;
  for (const auto& r : rows) {
    t.t_ns.push_back(r.t_ns);
    t.position.push_back(r.position);
    t.orientation.push_back(to_rotation(r.orientation));
    t.velocity.push_back(r.velocity);
  }
  return t;
}

std::vector<io::TrajectoryRow> to_rows(const Trajectory& traj) {
  std::vector<io::TrajectoryRow> rows;
  rows.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    io::TrajectoryRow r;
    r.t_ns = traj.t_ns[k];
    r.position = traj.position[k];
    if (k < traj.orientation.size()) r.orientation = to_quaternion(traj.orientation[k]);
    if (k < traj.velocity.size()) r.velocity = traj.velocity[k];
    rows.push_back(r);
  }
  return rows;
}

double ate(const Trajectory& est, const Trajectory& gt) {
  check_timebase(est, gt);
  return rmse(est, gt, 0, est.size(), Vec3::Zero());
}

RteResult rte(const Trajectory& est, const Trajectory& gt, double interval_s) {
  check_timebase(est, gt);
  if (!(interval_s > 0.0)) throw InputError("RTE interval must be positive");
  const auto interval_ns = static_cast<Timestamp>(std::llround(interval_s * 1e9));
  const Timestamp t0 = gt.t_ns.front();
  const Timestamp span = gt.t_ns.back() - t0;
  const Timestamp full_windows = span / interval_ns;

  RteResult result;
  if (full_windows == 0) {
    result.value = ate(est, gt);
    result.fell_back_to_ate = true;
    return result;
  }

  double sum = 0.0;
  std::size_t k = 0;
  for (Timestamp j = 0; j < full_windows; ++j) {
    const Timestamp end_ns = t0 + (j + 1) * interval_ns;
    const std::size_t begin = k;
    while (k < gt.size() && gt.t_ns[k] < end_ns) ++k;
    if (k == begin) continue;
    const Vec3 shift = est.position[begin] - gt.position[begin];
    sum += rmse(est, gt, begin, k, shift);
    ++result.windows;
  }
  result.value = result.windows > 0 ? sum / result.windows : 0.0;
  return result;
}

Trajectory ndi_baseline(std::span<const ImuSample> imu, const FilterInit& init,
                        const FilterConfig& cfg) {
  if (imu.empty()) {
    Trajectory t;
    t.t_ns.push_back(0);
    t.position.push_back(init.pose.position);
    t.orientation.push_back(init.pose.orientation);
    t.velocity.push_back(init.v0);
    return t;
  }
  FilterConfig ndi = cfg;
  ndi.enable_update = false;
  return from_filter(run_sequence(imu, ndi, init, ConstantAdapter(cfg.sigma0)));
}

Trajectory inter_trajectory(std::span<const Timestamp> t_ns, std::span<const Vec3> velocity,
                            const Vec3& p0) {
  if (t_ns.size() != velocity.size()) throw InputError("timestamps and velocities differ in length");
  Trajectory t;
  if (t_ns.empty()) return t;
  Vec3 p = p0;
  for (std::size_t k = 0; k < t_ns.size(); ++k) {
    if (k > 0) p += velocity[k - 1] * ns_to_s(t_ns[k] - t_ns[k - 1]);
    t.t_ns.push_back(t_ns[k]);
    t.position.push_back(p);
    t.velocity.push_back(velocity[k]);
  }
  return t;
}

Trajectory inter_trajectory(const std::vector<FilterOutput>& out, const Vec3& p0) {
  std::vector<Timestamp> t;
  std::vector<Vec3> v;
  t.reserve(out.size());
  v.reserve(out.size());
  for (const auto& o : out) {
    t.push_back(o.t_ns);
    v.push_back(o.state.velocity);
  }
  Trajectory traj = inter_trajectory(t, v, p0);
  for (const auto& o : out) traj.orientation.push_back(o.state.orientation);
  return traj;
}

EvalReport compare(const std::map<std::string, Trajectory>& methods, const Trajectory& gt,
                   double interval_s) {
  EvalReport report;
  report.interval_s = interval_s;
  for (const auto& [label, traj] : methods) {
    MethodResult r;
    r.label = label;
    r.ate = ate(traj, gt);
    const RteResult rr = rte(traj, gt, interval_s);
    r.rte = rr.value;
    r.rte_fell_back = rr.fell_back_to_ate;
    r.duration_s = gt.duration_s();
    report.rows.push_back(r);
  }
  return report;
}

std::string format_table(const EvalReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %12s %12s %10s\n", "method", "ATE [m]", "RTE [m]",
                "length [s]");
  os << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-12s %12.4f %12.4f %10.2f%s\n", r.label.c_str(), r.ate,
                  r.rte, r.duration_s, r.rte_fell_back ? "  (RTE=ATE, shorter than interval)" : "");
    os << line;
  }
  std::snprintf(line, sizeof line, "RTE interval %.1f s, re-anchoring: %s\n", report.interval_s,
                report.rte_anchor.c_str());
  os << line;
  return os.str();
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "method,ate_m,rte_m,duration_s,interval_s,rte_fallback,rte_anchor\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  for (const auto& r : report.rows) {
    out << r.label << ',' << num(r.ate) << ',' << num(r.rte) << ',' << num(r.duration_s) << ','
        << num(report.interval_s) << ',' << (r.rte_fell_back ? 1 : 0) << ',' << report.rte_anchor
        << '\n';
  }
}

}  // namespace pdr::eval
