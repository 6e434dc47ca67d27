#pragma once

#include "pdr/dataset_io.hpp"
#include "pdr/iekf.hpp"
#include "pdr/types.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pdr::eval {

struct Trajectory {
  std::vector<Timestamp> t_ns;
  std::vector<Vec3> position;
  std::vector<Rotation> orientation;  // empty when not available
  std::vector<Vec3> velocity;         // empty when not available

  std::size_t size() const { return t_ns.size(); }
  bool empty() const { return t_ns.empty(); }
  double duration_s() const { return empty() ? 0.0 : ns_to_s(t_ns.back() - t_ns.front()); }
};

Trajectory from_ground_truth(const std::vector<GroundTruthSample>& gt);
Trajectory from_aligned(const io::AlignedSequence& seq);
/// The filter's position state ("IEKF").
Trajectory from_filter(const std::vector<FilterOutput>& out);
Trajectory from_rows(const std::vector<io::TrajectoryRow>& rows);
std::vector<io::TrajectoryRow> to_rows(const Trajectory& traj);

/// RMSE of position differences over every frame, no alignment.
/// Throws DataMismatchError unless both share the same timestamps.
double ate(const Trajectory& est, const Trajectory& gt);

struct RteResult {
  double value = 0.0;
  int windows = 0;
  /// Set when the trajectory is shorter than one interval; value is then the ATE.
  bool fell_back_to_ate = false;
};

/// Mean over disjoint windows [jT, (j+1)T) of the position RMSE after
/// shifting the estimate so it coincides with ground truth at the window's
/// first frame. Partial trailing windows are ignored.
RteResult rte(const Trajectory& est, const Trajectory& gt, double interval_s = 60.0);

/// Naive double integration: the filter's propagation with zero biases and
/// no measurement update. An empty stream gives only the initial pose.
Trajectory ndi_baseline(std::span<const ImuSample> imu, const FilterInit& init,
                        const FilterConfig& cfg = {});

/// Cumulative sum p_{k+1} = p_k + v_k (t_{k+1} - t_k) of the velocity state ("Inter").
Trajectory inter_trajectory(const std::vector<FilterOutput>& out, const Vec3& p0);
Trajectory inter_trajectory(std::span<const Timestamp> t_ns, std::span<const Vec3> velocity,
                            const Vec3& p0);

struct MethodResult {
  std::string label;
  double ate = 0.0;
  double rte = 0.0;
  double duration_s = 0.0;
  bool rte_fell_back = false;
};

struct EvalReport {
  std::vector<MethodResult> rows;  // sorted by label
  double interval_s = 60.0;
  /// RTE windows are re-anchored by position only (no heading alignment).
  std::string rte_anchor = "position";
};

EvalReport compare(const std::map<std::string, Trajectory>& methods, const Trajectory& gt,
                   double interval_s = 60.0);

std::string format_table(const EvalReport& report);
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace pdr::eval
