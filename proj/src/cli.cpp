#include "pdr/cli.hpp"

#include "pdr/dataset_io.hpp"
#include "pdr/evaluation.hpp"
#include "pdr/noise_adapter.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace pdr::cli {

namespace {

using json = nlohmann::json;

/// Maps the library's exception types onto exit codes.
int guarded(std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const WeightsError& e) {
    log << "error: " << e.what() << '\n';
    return kWeights;
  } catch (const DataMismatchError& e) {
    log << "error: " << e.what() << '\n';
    return kDataMismatch;
  } catch (const NumericError& e) {
    log << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const GeometryError& e) {
    log << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const InputError& e) {
    log << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const json::exception& e) {
    log << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return kUsage;
  }
}

double positive_number(const std::string& section, const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw InputError("config [" + section + "] " + key + ": not a number: '" + v + "'");
  }
  return x;
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError("config [" + section + "] " + key + ": not a boolean: '" + v + "'");
}

Vec3 json_vec3(const json& j, const char* key, const Vec3& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw InputError(std::string(key) + " must be [x, y, z]");
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

std::vector<PoseRecord> poses_from(const std::vector<GroundTruthSample>& gt) {
  std::vector<PoseRecord> out;
  out.reserve(gt.size());
  for (const auto& s : gt) out.push_back({s.t_ns, s.position, to_quaternion(s.orientation)});
  return out;
}

std::unique_ptr<NoiseAdapter> make_adapter(const std::string& spec, const FilterConfig& cfg) {
  if (spec == "constant") return constant_adapter(cfg.sigma0);
  auto weights = std::make_shared<const AdapterWeights>(load_weights(spec));
  return std::make_unique<LearnedAdapter>(std::move(weights));
}

}  // namespace

FilterConfig load_filter_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }

  FilterConfig cfg;
  using Setter = std::function<void(const std::string& section, const std::string& key,
                                    const std::string& value)>;
  auto num = [](double& field) -> Setter {
    return [&field](const std::string& s, const std::string& k, const std::string& v) {
      field = positive_number(s, k, v);
    };
  };
  const std::map<std::string, std::map<std::string, Setter>> schema = {
      {"initial_covariance",
       {{"rot", num(cfg.p0_rot)},
        {"vel", num(cfg.p0_vel)},
        {"pos", num(cfg.p0_pos)},
        {"gyro_bias", num(cfg.p0_gyro_bias)},
        {"accel_bias", num(cfg.p0_accel_bias)},
        {"misalign", num(cfg.p0_misalign)}}},
      {"process_noise",
       {{"gyro", num(cfg.q_gyro)},
        {"accel", num(cfg.q_accel)},
        {"gyro_bias", num(cfg.q_gyro_bias)},
        {"accel_bias", num(cfg.q_accel_bias)},
        {"misalign", num(cfg.q_misalign)}}},
      {"measurement",
       {{"sigma_forward", num(cfg.sigma0[0])},
        {"sigma_lateral", num(cfg.sigma0[1])},
        {"sigma_up", num(cfg.sigma0[2])},
        {"speed_window", num(cfg.speed_window_s)},
        {"min_speed_window", num(cfg.min_speed_window_s)},
        {"max_speed", num(cfg.max_speed)},
        {"use_forward",
         [&cfg](const std::string& s, const std::string& k, const std::string& v) {
           cfg.use_forward_observation = parse_bool(s, k, v);
         }}}},
      {"filter",
       {{"rate_hz", num(cfg.rate_hz)},
        {"reproject_every",
         [&cfg](const std::string& s, const std::string& k, const std::string& v) {
           cfg.reproject_every = static_cast<int>(positive_number(s, k, v));
         }},
        {"enable_update",
         [&cfg](const std::string& s, const std::string& k, const std::string& v) {
           cfg.enable_update = parse_bool(s, k, v);
         }}}},
  };

  for (const auto& [section, entries] : tree) {
    auto sec = schema.find(section);
    if (sec == schema.end()) throw InputError("config: unknown section [" + section + "]");
    for (const auto& [key, node] : entries) {
      auto setter = sec->second.find(key);
      if (setter == sec->second.end()) {
        throw InputError("config: unknown key '" + key + "' in [" + section + "]");
      }
      setter->second(section, key, node.get_value<std::string>());
    }
  }
  cfg.validate();
  return cfg;
}

SimulationSpec load_simulation_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open simulation spec " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("simulation spec: ") + e.what());
  }
  SimulationSpec spec;
  auto& t = spec.trajectory;
  t.rate_hz = j.value("rate_hz", 200.0);
  t.initial_position = json_vec3(j, "initial_position", Vec3::Zero());
  t.initial_heading = j.value("initial_heading", 0.0);
  t.body_in_imu = exp_so3(json_vec3(j, "body_in_imu", Vec3::Zero()));
  t.speed_blend_s = j.value("speed_blend_s", 0.5);
  if (!j.contains("segments") || !j["segments"].is_array()) {
    throw InputError("simulation spec: 'segments' array is required");
  }
  for (const auto& s : j["segments"]) {
    t.segments.push_back({s.at("duration").get<double>(), s.at("speed").get<double>(),
                          s.value("turn_rate", 0.0)});
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    spec.noise.gyro_white_std = n.value("gyro_white_std", 0.0);
    spec.noise.accel_white_std = n.value("accel_white_std", 0.0);
    spec.noise.gyro_bias_walk_std = n.value("gyro_bias_walk_std", 0.0);
    spec.noise.accel_bias_walk_std = n.value("accel_bias_walk_std", 0.0);
    spec.noise.initial_gyro_bias = json_vec3(n, "initial_gyro_bias", Vec3::Zero());
    spec.noise.initial_accel_bias = json_vec3(n, "initial_accel_bias", Vec3::Zero());
  }
  sim::validate(t);
  return spec;
}

Vec3 parse_vec3(const std::string& text) {
  std::stringstream ss(text);
  std::string cell;
  std::vector<double> v;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      throw InputError("expected 'x,y,z', got '" + text + "'");
    }
  }
  if (v.size() != 3) throw InputError("expected 'x,y,z', got '" + text + "'");
  return Vec3(v[0], v[1], v[2]);
}

int cmd_simulate(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir,
                 std::uint64_t seed, std::ostream& log) {
  return guarded(log, [&] {
    if (!std::filesystem::exists(spec_path)) {
      throw InputError("simulation spec not found: " + spec_path.string());
    }
    const SimulationSpec spec = load_simulation_spec(spec_path);
    const auto gt = sim::generate_trajectory(spec.trajectory);
    const auto imu = sim::synthesize_imu(gt, spec.noise, seed);

    std::filesystem::create_directories(out_dir);
    io::write_imu_csv(out_dir / "imu.csv", imu.samples);
    io::write_pose_csv(out_dir / "pose.csv", poses_from(gt));

    json meta;
    meta["seed"] = seed;
    meta["rate_hz"] = spec.trajectory.rate_hz;
    meta["samples"] = gt.size();
    meta["spec"] = spec_path.filename().string();
    const Vec3& v0 = gt.front().velocity;
    meta["initial_velocity"] = {v0.x(), v0.y(), v0.z()};
    std::ofstream(out_dir / "meta.json") << meta.dump(2) << '\n';
    log << "wrote " << gt.size() << " samples to " << out_dir.string() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_run(const RunOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    if (!opts.init_velocity) {
      throw InputError("--init-velocity is required (initial world velocity 'vx,vy,vz')");
    }
    if (opts.out.empty()) throw InputError("--out is required");
    const FilterConfig cfg = opts.config.empty() ? FilterConfig{} : load_filter_config(opts.config);
    const auto adapter = make_adapter(opts.adapter, cfg);
    const io::Format format = io::parse_format(opts.format);

    io::RawSequence raw = io::load_sequence(opts.imu, opts.pose, format);
    FilterInit init;
    init.v0 = *opts.init_velocity;
    std::vector<ImuSample> imu;
    std::optional<eval::Trajectory> gt;
    if (!raw.poses.empty()) {
      const io::AlignedSequence seq = io::synchronize(raw.imu, raw.poses);
      imu = seq.imu();
      init.pose.position = seq.samples.front().position;
      init.pose.orientation = seq.samples.front().orientation;
      gt = eval::from_aligned(seq);
    } else {
      imu = std::move(raw.imu);
    }

    const auto out = run_sequence(imu, cfg, init, *adapter);
    const Vec3 p0 = init.pose.position;
    std::filesystem::create_directories(opts.out);
    io::write_trajectory_csv(opts.out / "iekf.csv", eval::to_rows(eval::from_filter(out)));
    io::write_trajectory_csv(opts.out / "inter.csv", eval::to_rows(eval::inter_trajectory(out, p0)));
    io::write_trajectory_csv(opts.out / "ndi.csv", eval::to_rows(eval::ndi_baseline(imu, init, cfg)));
    if (gt) io::write_trajectory_csv(opts.out / "gt.csv", eval::to_rows(*gt));
    log << "filtered " << out.size() << " samples into " << opts.out.string() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    if (opts.estimates.empty()) throw InputError("no estimated trajectories given");
    const auto gt = eval::from_rows(io::load_trajectory_csv(opts.gt));
    std::map<std::string, eval::Trajectory> methods;
    for (const auto& path : opts.estimates) {
      std::string label = path.stem().string();
      if (methods.count(label)) label = path.string();
      methods[label] = eval::from_rows(io::load_trajectory_csv(path));
    }
    const eval::EvalReport report = eval::compare(methods, gt, opts.interval_s);
    out << eval::format_table(report);
    if (!opts.out.empty()) eval::write_report_csv(opts.out, report);
    return static_cast<int>(kOk);
  });
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pedestrian dead reckoning with an invariant EKF"};
  app.require_subcommand(1);

  std::string spec_path, sim_out;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "synthesize a walk and its IMU stream");
  simulate->add_option("spec", spec_path, "simulation spec (JSON)")->required();
  simulate->add_option("--out", sim_out, "output directory")->required();
  simulate->add_option("--seed", seed, "noise seed");

  RunOptions run;
  std::string run_imu, run_pose, run_config, run_out, init_velocity;
  auto* run_cmd = app.add_subcommand("run", "filter an IMU sequence");
  run_cmd->add_option("--imu", run_imu, "IMU CSV")->required();
  run_cmd->add_option("--pose", run_pose, "pose CSV (ground truth and initial pose)");
  run_cmd->add_option("--init-velocity", init_velocity, "initial world velocity vx,vy,vz");
  run_cmd->add_option("--config", run_config, "filter configuration (INI)");
  run_cmd->add_option("--adapter", run.adapter, "constant or a weight file path");
  run_cmd->add_option("--out", run_out, "output directory");
  run_cmd->add_option("--format", run.format, "canonical or ridi");
  run_cmd->add_option("--seed", seed, "unused by the filter; accepted for batch scripts");

  EvalOptions ev;
  std::vector<std::string> estimates;
  std::string ev_gt, ev_out;
  auto* eval_cmd = app.add_subcommand("eval", "score trajectories against ground truth");
  eval_cmd->add_option("estimates", estimates, "estimated trajectory CSVs")->required();
  eval_cmd->add_option("--gt", ev_gt, "ground-truth trajectory CSV")->required();
  eval_cmd->add_option("--interval", ev.interval_s, "RTE window in seconds");
  eval_cmd->add_option("--out", ev_out, "report CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (simulate->parsed()) return cmd_simulate(spec_path, sim_out, seed, err);
  if (run_cmd->parsed()) {
    run.imu = run_imu;
    run.pose = run_pose;
    run.config = run_config;
    run.out = run_out;
    if (!init_velocity.empty()) {
      try {
        run.init_velocity = parse_vec3(init_velocity);
      } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
      }
    }
    return cmd_run(run, err);
  }
  ev.gt = ev_gt;
  ev.out = ev_out;
  for (const auto& e : estimates) ev.estimates.emplace_back(e);
  return cmd_eval(ev, out, err);
}

}  // namespace pdr::cli
