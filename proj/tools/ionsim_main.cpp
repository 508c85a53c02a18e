// Batch front-end: fringe sweeps, Allan scans and compile/verify jobs driven
// by JSON run configurations. Outputs are deterministic for a fixed config and
// seed and carry a config-hash header comment.
//
// Exit codes: 0 success, 2 config or parse error, 3 physics error (truncation
// guard), 4 unreachable compile target.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ionsim/compiler.hpp"
#include "ionsim/interferometer.hpp"
#include "ionsim/io.hpp"
#include "ionsim/noise.hpp"

using json = nlohmann::ordered_json;
using namespace ionsim;

namespace {

constexpr double kPi = std::numbers::pi;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void reject_unknown_keys(const json& j, const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown config key: " + it.key());
}

double get_number(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j[key].get<double>();
}

long long get_integer(const json& j, const std::string& key, long long fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ConfigError("config key '" + key + "' must be an integer");
  return j[key].get<long long>();
}

json fringe_defaults() {
  InterferometerConfig c = InterferometerConfig::defaults(1);
  json j;
  j["order"] = 1;
  j["n_max"] = 0;  // 0: auto (2*order + 6)
  j["eta"] = c.trap.eta();
  j["omega_z"] = c.trap.omega_z;
  j["omega_pulse"] = c.omega_pulse;
  j["phi1"] = 0.0;
  j["phi2"] = 0.0;
  j["delta_omega_z"] = c.delta_omega_z;
  j["contrast"] = 1.0;
  j["t_max"] = 0.0;  // 0: auto (two fringe periods)
  j["points"] = 64;
  j["shots"] = 0;
  j["seed"] = 0;
  return j;
}

json allan_defaults() {
  json j = fringe_defaults();
  j.erase("t_max");
  j.erase("points");
  j.erase("shots");
  j["shots_total"] = 10000;
  j["phi_operating"] = 0.0;  // 0: auto (max slope, n*phi = pi/2)
  j["nb_list"] = json::array({4, 8, 16, 32, 64, 128, 256});
  return j;
}

json compile_defaults() {
  json j;
  j["expr_file"] = "";
  j["time"] = 1.0;
  j["delta_t"] = 0.02;
  j["max_depth"] = 2;
  j["n_max"] = 9;
  j["eta"] = 0.35;
  j["omega_z"] = 2.0 * kPi * 3.63e6;
  j["omega_ref"] = 1.0;
  j["seed"] = 0;
  return j;
}

InterferometerConfig interferometer_from_json(const json& j) {
  InterferometerConfig c = InterferometerConfig::defaults(1);
  c.order = static_cast<int>(get_integer(j, "order", 1));
  if (c.order < 1) throw ConfigError("config key 'order' must be >= 1");
  c.n_max = static_cast<int>(get_integer(j, "n_max", 0));
  c.trap = TrapConfig::paper();
  c.trap.eta_override = get_number(j, "eta", c.trap.eta());
  c.trap.omega_z = get_number(j, "omega_z", c.trap.omega_z);
  if (!(c.trap.eta_override > 0.0)) throw ConfigError("config key 'eta' must be positive");
  c.omega_pulse = get_number(j, "omega_pulse", (kPi / 4.0) / (4.0e-6 * c.trap.eta_override));
  if (!(c.omega_pulse > 0.0)) throw ConfigError("config key 'omega_pulse' must be positive");
  c.phi1 = get_number(j, "phi1", 0.0);
  c.phi2 = get_number(j, "phi2", 0.0);
  c.delta_omega_z = get_number(j, "delta_omega_z", 2.0 * kPi * 1.0e4);
  if (c.delta_omega_z == 0.0) throw ConfigError("config key 'delta_omega_z' must be nonzero");
  c.contrast = get_number(j, "contrast", 1.0);
  if (c.contrast < 0.0 || c.contrast > 1.0)
    throw ConfigError("config key 'contrast' must be within [0, 1]");
  int nm = c.n_max > 0 ? c.n_max : 2 * c.order + 6;
  if (nm < c.order + 4) throw ConfigError("config key 'n_max' must be >= order + 4");
  return c;
}

std::string header_comment(const std::string& command, const json& effective,
                           std::uint64_t seed) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "ionsim %s config_hash=0x%016llx seed=%llu",
                command.c_str(),
                static_cast<unsigned long long>(fnv1a64(effective.dump())),
                static_cast<unsigned long long>(seed));
  return buf;
}

json load_config(const std::string& path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

std::uint64_t effective_seed(json& j, const std::optional<std::uint64_t>& cli_seed) {
  std::uint64_t seed = cli_seed ? *cli_seed
                                : static_cast<std::uint64_t>(get_integer(j, "seed", 0));
  j["seed"] = seed;
  return seed;
}

int cmd_fringe(const std::string& config_path, std::optional<std::uint64_t> cli_seed,
               const std::string& out_dir) {
  json j = load_config(config_path);
  reject_unknown_keys(j, {"order", "n_max", "eta", "omega_z", "omega_pulse", "phi1", "phi2",
                          "delta_omega_z", "contrast", "t_max", "points", "shots", "seed"});
  std::uint64_t seed = effective_seed(j, cli_seed);
  InterferometerConfig cfg = interferometer_from_json(j);
  long long points = get_integer(j, "points", 64);
  if (points < 2) throw ConfigError("config key 'points' must be >= 2");
  long long shots = get_integer(j, "shots", 0);
  if (shots < 0) throw ConfigError("config key 'shots' must be >= 0");
  double t_max = get_number(j, "t_max", 0.0);
  if (t_max < 0.0) throw ConfigError("config key 't_max' must be >= 0");
  if (t_max == 0.0)
    t_max = 2.0 * (2.0 * kPi / (cfg.order * std::abs(cfg.delta_omega_z)));

  std::vector<double> t_grid(points);
  for (long long i = 0; i < points; ++i)
    t_grid[i] = t_max * static_cast<double>(i) / static_cast<double>(points - 1);

  FringeDataset ds = sweep(cfg, t_grid, shots, seed);
  FringeFit fit = fit_fringe(ds);

  std::string comment = header_comment("fringe", j, seed);
  std::string report = "# " + comment + "\n";
  report += "points = " + std::to_string(points) + "\n";
  report += "shots_per_point = " + std::to_string(shots) + "\n";
  report += "fitted_frequency_rad_s = " + format_g17(fit.frequency) + "\n";
  report += "fitted_frequency_over_delta_omega_z = " +
            format_g17(fit.frequency / std::abs(cfg.delta_omega_z)) + "\n";
  report += "fitted_contrast = " + format_g17(fit.contrast) + "\n";
  report += "fitted_phase_offset_rad = " + format_g17(fit.phase_offset) + "\n";
  report += "rms_residual = " + format_g17(fit.residual) + "\n";
  report += std::string("frequency_indeterminate = ") +
            (fit.frequency_indeterminate ? "true" : "false") + "\n";

  write_files_atomic({{out_dir + "/fringe.csv", fringe_csv(ds, comment)},
                      {out_dir + "/fringe_report.txt", report}});
  std::printf("wrote %s/fringe.csv and fringe_report.txt (fitted freq/dwz = %.6f, C = %.6f)\n",
              out_dir.c_str(), fit.frequency / std::abs(cfg.delta_omega_z), fit.contrast);
  return 0;
}

int cmd_allan(const std::string& config_path, std::optional<std::uint64_t> cli_seed,
              const std::string& out_dir) {
  json j = load_config(config_path);
  reject_unknown_keys(j, {"order", "n_max", "eta", "omega_z", "omega_pulse", "phi1", "phi2",
                          "delta_omega_z", "contrast", "shots_total", "phi_operating",
                          "nb_list", "seed"});
  std::uint64_t seed = effective_seed(j, cli_seed);
  InterferometerConfig cfg = interferometer_from_json(j);
  long long m = get_integer(j, "shots_total", 10000);
  if (m < 8) throw ConfigError("config key 'shots_total' must be >= 8");
  double phi_op = get_number(j, "phi_operating", 0.0);
  if (phi_op == 0.0) phi_op = kPi / (2.0 * cfg.order);
  std::vector<long long> nb_list;
  if (j.contains("nb_list")) {
    if (!j["nb_list"].is_array()) throw ConfigError("config key 'nb_list' must be an array");
    for (const auto& v : j["nb_list"]) {
      if (!v.is_number_integer()) throw ConfigError("config key 'nb_list' must hold integers");
      nb_list.push_back(v.get<long long>());
    }
  } else {
    nb_list = {4, 8, 16, 32, 64, 128, 256};
  }
  for (long long nb : nb_list)
    if (!(nb > 2 && 2 * nb < m))
      throw ConfigError("config key 'nb_list' entries must satisfy 2 < N_b < shots_total/2");

  double t_op = phi_op / cfg.delta_omega_z;
  ShotRecord record = sample_operating_point(cfg, t_op, m, seed);
  AllanResult result = allan_scan(record, cfg, nb_list);

  std::string comment = header_comment("allan", j, seed);
  write_files_atomic({{out_dir + "/allan.csv", allan_csv(result, true, comment)}});
  std::printf("wrote %s/allan.csv (M = %lld, slope = %.6f)\n", out_dir.c_str(), m,
              result.slope_used);
  return 0;
}

int cmd_compile(const std::string& config_path, const std::string& expr_path_flag,
                std::optional<double> time_flag, std::optional<double> delta_t_flag,
                std::optional<int> depth_flag, std::optional<std::uint64_t> cli_seed,
                const std::string& out_dir) {
  json j = config_path.empty() ? compile_defaults() : load_config(config_path);
  reject_unknown_keys(j, {"expr_file", "time", "delta_t", "max_depth", "n_max", "eta",
                          "omega_z", "omega_ref", "seed"});
  std::uint64_t seed = effective_seed(j, cli_seed);
  std::string expr_path = expr_path_flag.empty()
                              ? j.value("expr_file", std::string())
                              : expr_path_flag;
  if (expr_path.empty()) throw ConfigError("config key 'expr_file' (or --expr) is required");
  double time = time_flag ? *time_flag : get_number(j, "time", 1.0);
  double delta_t = delta_t_flag ? *delta_t_flag : get_number(j, "delta_t", 0.02);
  int depth = depth_flag ? *depth_flag : static_cast<int>(get_integer(j, "max_depth", 2));
  if (time < 0.0) throw ConfigError("config key 'time' must be >= 0");
  if (!(delta_t > 0.0)) throw ConfigError("config key 'delta_t' must be positive");
  if (depth < 1) throw ConfigError("config key 'max_depth' must be >= 1");
  int n_max = static_cast<int>(get_integer(j, "n_max", 9));
  if (n_max < 3) throw ConfigError("config key 'n_max' must be >= 3");
  j["expr_file"] = expr_path;
  j["time"] = time;
  j["delta_t"] = delta_t;
  j["max_depth"] = depth;

  TrapConfig trap = TrapConfig::paper();
  trap.eta_override = get_number(j, "eta", 0.35);
  trap.omega_z = get_number(j, "omega_z", trap.omega_z);
  if (!(trap.eta_override > 0.0)) throw ConfigError("config key 'eta' must be positive");
  CompilerOptions opt;
  opt.omega_ref = get_number(j, "omega_ref", 1.0);
  if (!(opt.omega_ref > 0.0)) throw ConfigError("config key 'omega_ref' must be positive");

  OperatorExpr target = parse_expr_text(read_file(expr_path));
  PulseCompiler compiler(trap, HilbertSpace(n_max), opt);
  auto [program, rep] = compiler.synthesize(target, time, delta_t, depth);

  std::string comment = header_comment("compile", j, seed);
  std::string prog_text = "# " + comment + "\n" + format_program_text(program);
  std::string report = "# " + comment + "\n";
  report += "measured_error = " + format_g17(rep.measured_error) + "\n";
  report += "full_space_error = " + format_g17(rep.full_space_error) + "\n";
  report += "step_count = " + std::to_string(rep.step_count) + "\n";
  report += "depth = " + std::to_string(rep.depth) + "\n";
  report += "delta_t = " + format_g17(rep.delta_t) + "\n";
  report += "total_duration_s = " + format_g17(program.total_duration()) + "\n";

  write_files_atomic({{out_dir + "/program.txt", prog_text},
                      {out_dir + "/compile_report.txt", report}});
  std::printf("wrote %s/program.txt and compile_report.txt (error = %.3e, %zu steps)\n",
              out_dir.c_str(), rep.measured_error, rep.step_count);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ionsim: trapped-ion spin-oscillator simulator batch front-end"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", expr_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> time_flag, delta_t_flag;
  std::optional<int> depth_flag;
  bool print_defaults = false;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* copt = sub->add_option("--config", config_path, "JSON run configuration");
    if (config_required) copt->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--print-defaults", print_defaults, "print the default config and exit");
  };

  CLI::App* fringe = app.add_subcommand("fringe", "sweep the interferometer and fit the fringe");
  add_common(fringe, true);
  CLI::App* allan = app.add_subcommand("allan", "projection-noise Allan scan at one operating point");
  add_common(allan, true);
  CLI::App* compile = app.add_subcommand("compile", "lower an operator expression to a pulse program");
  add_common(compile, false);
  compile->add_option("--expr", expr_path, "operator expression file");
  compile->add_option("--time", time_flag, "evolution time, s");
  compile->add_option("--delta-t", delta_t_flag, "gadget step bound, s");
  compile->add_option("--depth", depth_flag, "maximum gadget nesting depth");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fringe->parsed()) {
      if (print_defaults) {
        std::printf("%s\n", fringe_defaults().dump(2).c_str());
        return 0;
      }
      if (config_path.empty()) throw ConfigError("--config is required");
      return cmd_fringe(config_path, seed, out_dir);
    }
    if (allan->parsed()) {
      if (print_defaults) {
        std::printf("%s\n", allan_defaults().dump(2).c_str());
        return 0;
      }
      if (config_path.empty()) throw ConfigError("--config is required");
      return cmd_allan(config_path, seed, out_dir);
    }
    if (compile->parsed()) {
      if (print_defaults) {
        std::printf("%s\n", compile_defaults().dump(2).c_str());
        return 0;
      }
      return cmd_compile(config_path, expr_path, time_flag, delta_t_flag, depth_flag, seed,
                         out_dir);
    }
  } catch (const UnreachableTargetError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const TruncationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ExprParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
