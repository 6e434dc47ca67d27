#pragma once

#include "pdr/iekf.hpp"
#include "pdr/imu_sim.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pdr::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kWeights = 3,
  kDataMismatch = 4,
  kNumeric = 5,
};

/// Reads an INI-style file (sections [initial_covariance], [process_noise],
/// [measurement], [filter]) on top of the default configuration.
/// Unknown sections or keys are rejected with InputError.
FilterConfig load_filter_config(const std::filesystem::path& path);

/// Parsed simulation request: trajectory plus sensor noise.
struct SimulationSpec {
  sim::TrajectorySpec trajectory;
  sim::ImuNoiseSpec noise;
};

SimulationSpec load_simulation_spec(const std::filesystem::path& path);

/// Parses "vx,vy,vz".
Vec3 parse_vec3(const std::string& text);

struct RunOptions {
  std::filesystem::path imu;
  std::filesystem::path pose;  // optional
  std::optional<Vec3> init_velocity;
  std::filesystem::path config;  // optional
  std::string adapter = "constant";
  std::filesystem::path out;
  std::string format = "canonical";
};

struct EvalOptions {
  std::vector<std::filesystem::path> estimates;
  std::filesystem::path gt;
  double interval_s = 60.0;
  std::filesystem::path out;  // optional report CSV
};

int cmd_simulate(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir,
                 std::uint64_t seed, std::ostream& log);
int cmd_run(const RunOptions& opts, std::ostream& log);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& log);

/// Full command-line entry point (subcommands simulate, run, eval).
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pdr::cli
