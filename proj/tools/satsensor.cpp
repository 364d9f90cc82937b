// satsensor: command-line front end for the single-atom transistor field
// sensor model. Every command writes its data (CSV and/or JSON) plus a run
// manifest from which the outputs can be regenerated with `replay`.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "satsensor/config.hpp"
#include "satsensor/csv.hpp"
#include "satsensor/satsensor.hpp"

extern char** environ;

namespace {

using satsensor::json;
using satsensor::RunConfig;
using satsensor::numerics::Interval;

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kNumericFailure = 1, kUsageError = 2 };

struct CommandOutput {
  std::optional<std::string> csv;
  std::optional<json> summary;  ///< features / summary JSON
  json derived = json::object();
  std::vector<std::string> warnings;
};

/// Physics objects resolved from a configuration.
struct Model {
  RunConfig cfg;
  satsensor::Collision coll;

  explicit Model(RunConfig c) : cfg(std::move(c)), coll(cfg.momentum(), cfg.trap) {}
  const satsensor::ResonanceParams& params() const { return cfg.resonance; }
  const satsensor::TrapGeometry& geom() const { return cfg.trap; }
};

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double width(const RunConfig& cfg) { return std::abs(cfg.resonance.delta); }

json collision_summary(const Model& m) {
  return {{"p", m.coll.p()},
          {"k", m.coll.wavenumber()},
          {"e_total", m.coll.total_energy()},
          {"confinement_factor", m.coll.confinement()},
          {"temperature_nk", satsensor::momentum_to_temperature(m.coll.p(), m.cfg.species)}};
}

double arg_or(const json& args, const char* key, double fallback) {
  return args.contains(key) && !args.at(key).is_null() ? args.at(key).get<double>() : fallback;
}

/// Fills defaults so that the stored arguments fully determine the run.
json resolve_field_range(json args, const RunConfig& cfg, std::int64_t default_points) {
  args["b_min"] = arg_or(args, "b_min", cfg.resonance.b_res - 5.0 * width(cfg));
  args["b_max"] = arg_or(args, "b_max", cfg.resonance.b_res + 5.0 * width(cfg));
  if (!args.contains("points") || args["points"].is_null()) args["points"] = default_points;
  return args;
}

std::vector<double> field_grid(const json& args) {
  const auto n = args.at("points").get<std::int64_t>();
  const double lo = args.at("b_min").get<double>();
  const double hi = args.at("b_max").get<double>();
  if (n < 1) throw satsensor::ConfigError("field range needs at least one point");
  if (n > 1 && !(hi > lo)) throw satsensor::ConfigError("field range needs b_max > b_min");
  return satsensor::numerics::linspace(lo, hi, static_cast<std::size_t>(n));
}

void add_landmarks(CommandOutput& out, const Model& m, Interval range) {
  out.derived["collision"] = collision_summary(m);
  out.derived["zero_crossing_b"] = satsensor::find_zero_crossing(m.params(), m.coll);
  out.derived["cir_b"] = number_or_null(satsensor::locate_cir(m.coll, m.params(), m.geom(), range));
}

CommandOutput cmd_transmission(const Model& m, json& args) {
  args = resolve_field_range(args, m.cfg, 401);
  const auto grid = field_grid(args);
  const bool averaged = m.cfg.budget.sigma_p > 0.0;
  CommandOutput out;
  satsensor::csv::Writer w = averaged ? satsensor::csv::Writer{"B", "T", "T_averaged"} : satsensor::csv::Writer{"B", "T"};
  const auto t = satsensor::transmission_profile(grid, m.coll, m.params(), m.geom());
  bool truncated = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (averaged) {
      const auto avg = satsensor::averaged_transmission(grid[i], m.coll.p(), m.cfg.budget.sigma_p, m.params(), m.geom());
      truncated = truncated || avg.truncated;
      w.row({satsensor::csv::cell(grid[i]), satsensor::csv::cell(t[i]), satsensor::csv::cell(avg.value)});
    } else {
      w.row({satsensor::csv::cell(grid[i]), satsensor::csv::cell(t[i])});
    }
  }
  if (truncated) out.warnings.push_back("momentum distribution truncated by more than 1% at the single-mode window");
  out.csv = w.str();
  add_landmarks(out, m, {grid.front(), grid.back()});
  return out;
}

CommandOutput cmd_precision(const Model& m, json& args) {
  args = resolve_field_range(args, m.cfg, 401);
  const auto grid = field_grid(args);
  CommandOutput out;
  satsensor::csv::Writer w{"B", "F", "deltaB", "T", "dTdB"};
  for (double b : grid) {
    const double f = satsensor::fisher_information(b, m.coll, m.params(), m.geom(), m.cfg.detector);
    w.row({satsensor::csv::cell(b), satsensor::csv::cell(f), satsensor::csv::cell(satsensor::precision_from_fisher(f)),
           satsensor::csv::cell(satsensor::transmission(b, m.coll, m.params(), m.geom())),
           satsensor::csv::cell(satsensor::transmission_derivative(b, m.coll, m.params(), m.geom()))});
  }
  out.csv = w.str();
  add_landmarks(out, m, {grid.front(), grid.back()});
  return out;
}

json resolve_momentum_window(json args, const RunConfig& cfg, double lo_pd, double hi_pd) {
  args["p_min"] = arg_or(args, "p_min", lo_pd / cfg.trap.d);
  args["p_max"] = arg_or(args, "p_max", hi_pd / cfg.trap.d);
  return args;
}

CommandOutput cmd_map(const Model& m, json& args, unsigned threads) {
  args = resolve_field_range(args, m.cfg, 256);
  args = resolve_momentum_window(args, m.cfg, 0.02, 1.0);
  if (!args.contains("p_points") || args["p_points"].is_null()) args["p_points"] = 128;
  if (!args.contains("log_p") || args["log_p"].is_null()) args["log_p"] = true;
  const auto b_grid = field_grid(args);
  const auto np = args.at("p_points").get<std::int64_t>();
  if (np < 1) throw satsensor::ConfigError("map needs at least one momentum point");
  const double p_lo = args.at("p_min").get<double>();
  const double p_hi = args.at("p_max").get<double>();
  if (np > 1 && !(p_hi > p_lo)) throw satsensor::ConfigError("map needs p_max > p_min");
  const auto p_grid = args.at("log_p").get<bool>() ? satsensor::numerics::logspace(p_lo, p_hi, np)
                                                    : satsensor::numerics::linspace(p_lo, p_hi, np);

  const auto map = satsensor::precision_map(m.params(), m.geom(), m.cfg.detector, b_grid, p_grid, threads);
  CommandOutput out;
  satsensor::csv::Writer w{"B", "p", "deltaB"};
  std::size_t best = 0;
  for (std::size_t ip = 0; ip < p_grid.size(); ++ip)
    for (std::size_t ib = 0; ib < b_grid.size(); ++ib) {
      const std::size_t idx = ip * b_grid.size() + ib;
      if (map.delta_b[idx] < map.delta_b[best]) best = idx;
      w.row({satsensor::csv::cell(b_grid[ib]), satsensor::csv::cell(p_grid[ip]), satsensor::csv::cell(map.delta_b[idx])});
    }
  out.csv = w.str();

  json features;
  features["p"] = p_grid;
  features["cir_B"] = json::array();
  features["zero_crossing_B"] = json::array();
  features["unit_transmission_B"] = json::array();
  for (std::size_t ip = 0; ip < p_grid.size(); ++ip) {
    features["cir_B"].push_back(number_or_null(map.cir_b[ip]));
    features["zero_crossing_B"].push_back(number_or_null(map.zero_crossing_b[ip]));
    features["unit_transmission_B"].push_back(number_or_null(map.unit_transmission_b()[ip]));
  }
  const std::size_t ip = best / b_grid.size();
  const std::size_t ib = best % b_grid.size();
  const auto branch = satsensor::detail::nearest_feature(b_grid[ib], map.cir_b[ip], map.zero_crossing_b[ip]);
  features["best"] = {{"B", b_grid[ib]},
                      {"p", p_grid[ip]},
                      {"deltaB", number_or_null(map.delta_b[best])},
                      {"branch", std::string(satsensor::to_string(branch))}};
  out.summary = features;
  out.derived["collision"] = collision_summary(m);
  out.derived["best"] = features["best"];
  return out;
}

/// Monotone segment of T(B) containing b_true, bounded by the CIR and the
/// unit-transmission peak.
Interval automatic_prior(const Model& m, double b_true) {
  const double w = width(m.cfg);
  const double peak = satsensor::find_zero_crossing(m.params(), m.coll);
  const double cir =
      satsensor::locate_cir(m.coll, m.params(), m.geom(), {m.params().b_res - 1e4 * w, m.params().b_res + 1e4 * w});
  if (std::isnan(cir)) return {peak - 10.0 * w, peak + 10.0 * w};
  const double lo = std::min(cir, peak);
  const double hi = std::max(cir, peak);
  if (b_true > lo && b_true < hi) return {lo, hi};
  const double reach = 2.0 * std::max(10.0 * w, std::max(std::abs(b_true - lo), std::abs(b_true - hi)));
  if (b_true <= lo) return {lo - reach, lo};
  return {hi, hi + reach};
}

CommandOutput cmd_estimate(const Model& m, json& args, unsigned threads) {
  if (!args.contains("b_true") || args["b_true"].is_null()) throw satsensor::ConfigError("estimate needs --b-true");
  const double b_true = args.at("b_true").get<double>();
  if (!args.contains("m_sent") || args["m_sent"].is_null()) args["m_sent"] = 10000;
  if (!args.contains("trials") || args["trials"].is_null()) args["trials"] = 1000;
  Interval prior;
  if (args.contains("prior_min") && !args["prior_min"].is_null()) {
    prior = {args["prior_min"].get<double>(), args.at("prior_max").get<double>()};
  } else if (m.cfg.prior_min_g) {
    prior = {*m.cfg.prior_min_g, *m.cfg.prior_max_g};
  } else {
    prior = automatic_prior(m, b_true);
  }
  args["prior_min"] = prior.lo;
  args["prior_max"] = prior.hi;
  const auto m_sent = args.at("m_sent").get<std::int64_t>();
  const auto trials = args.at("trials").get<std::int64_t>();
  if (m_sent < 1) throw satsensor::ConfigError("estimate needs --m-sent >= 1");

  const auto rep = satsensor::crlb_saturation_experiment(b_true, m.coll, m.params(), m.geom(), m.cfg.detector, m_sent,
                                                         trials, m.cfg.seed, prior, threads);
  CommandOutput out;
  satsensor::csv::Writer w{"trial", "n_detected", "n_reflected", "b_hat", "clamped"};
  for (std::size_t i = 0; i < rep.trials.size(); ++i) {
    const auto& t = rep.trials[i];
    w.row({satsensor::csv::cell(static_cast<std::int64_t>(i)), satsensor::csv::cell(t.record.n_detected),
           satsensor::csv::cell(t.record.n_reflected), satsensor::csv::cell(t.estimate.b_hat),
           satsensor::csv::cell(t.estimate.clamped)});
  }
  out.csv = w.str();
  json summary = {{"b_true", b_true},
                  {"m_sent", m_sent},
                  {"n_trials", trials},
                  {"prior", {prior.lo, prior.hi}},
                  {"mean", rep.mean},
                  {"variance", rep.variance},
                  {"fisher", rep.fisher},
                  {"crlb_variance", number_or_null(1.0 / (static_cast<double>(m_sent) * rep.fisher))},
                  {"crlb_ratio", number_or_null(rep.ratio)},
                  {"clamp_rate", rep.clamp_rate},
                  {"valid", rep.valid},
                  {"warning", nullptr}};
  if (!rep.valid) {
    const std::string msg = "clamp rate " + satsensor::csv::format_number(rep.clamp_rate) +
                            " exceeds 1%; the CRLB ratio is not meaningful (check b_true against the prior)";
    summary["warning"] = msg;
    out.warnings.push_back(msg);
  }
  out.summary = summary;
  out.derived["collision"] = collision_summary(m);
  out.derived["crlb_ratio"] = summary["crlb_ratio"];
  return out;
}

CommandOutput cmd_optimize(const Model& m, json& args, unsigned threads) {
  args = resolve_field_range(args, m.cfg, 256);
  args = resolve_momentum_window(args, m.cfg, 0.01, 1.9);
  if (!args.contains("p_points") || args["p_points"].is_null()) args["p_points"] = 128;
  satsensor::OptimizeOptions opts;
  opts.nb = static_cast<std::size_t>(args.at("points").get<std::int64_t>());
  opts.np = static_cast<std::size_t>(args.at("p_points").get<std::int64_t>());
  opts.threads = threads;
  const Interval b_window{args.at("b_min").get<double>(), args.at("b_max").get<double>()};
  const Interval p_window{args.at("p_min").get<double>(), args.at("p_max").get<double>()};
  const auto opt = satsensor::minimize_deltaB(m.params(), m.geom(), m.cfg.detector, b_window, p_window, opts);

  // best field at the configured collision momentum, for comparison
  const auto b_grid = satsensor::numerics::linspace(b_window.lo, b_window.hi, opts.nb);
  const auto at_config = satsensor::detail::best_field(m.coll.p(), b_grid, m.params(), m.geom(), m.cfg.detector);

  const double c0 = satsensor::confinement_factor(0.0, m.geom());
  const double g = m.geom().mass_factor * m.params().a_bg;
  const double t_star = satsensor::momentum_to_temperature(opt.p, m.cfg.species);
  json result = {
      {"B_star", opt.b},
      {"p_star", opt.p},
      {"deltaB_star", number_or_null(opt.delta_b)},
      {"branch", std::string(satsensor::to_string(opt.branch))},
      {"on_boundary", opt.on_boundary},
      {"temperature_nk", t_star},
      {"cir_B", number_or_null(opt.cir_b)},
      {"peak_B", number_or_null(opt.peak_b)},
      {"at_configured_p",
       {{"p", m.coll.p()},
        {"temperature_nk", satsensor::momentum_to_temperature(m.coll.p(), m.cfg.species)},
        {"B", at_config.b},
        {"deltaB", number_or_null(at_config.delta_b)}}},
      {"asymptotic",
       {{"cir_p_opt", satsensor::cir_optimal_momentum(m.geom())},
        {"cir_deltaB_min", std::abs(g * m.params().delta) * c0 / m.geom().d},
        {"cir_deltaB_at_p_star", satsensor::deltaB_cir_asymptotic(opt.p, m.params(), m.geom())},
        {"peak_deltaB_at_p_star", number_or_null(m.params().a_bg != 0.0
                                                     ? satsensor::deltaB_peak_asymptotic(opt.p, m.params(), m.geom())
                                                     : NAN)}}},
      {"budget",
       {{"n_tubes", m.cfg.budget.n_tubes},
        {"repetitions", m.cfg.budget.repetitions()},
        {"tau_s", m.cfg.budget.tau},
        {"ensemble_deltaB", number_or_null(satsensor::ensemble_precision(opt.delta_b, m.cfg.budget))},
        {"sensitivity_t_per_rthz", number_or_null(satsensor::sensitivity_per_root_hz(opt.delta_b, m.cfg.budget))}}}};
  CommandOutput out;
  out.summary = result;
  if (opt.on_boundary) out.warnings.push_back("optimum lies on the search window boundary");
  out.derived["achieved_deltaB"] = result["deltaB_star"];
  out.derived["p_star_temperature_nk"] = t_star;
  out.derived["asymptotic_cir_deltaB_min"] = result["asymptotic"]["cir_deltaB_min"];
  out.derived["on_boundary"] = opt.on_boundary;
  out.derived["deltaB_at_configured_p"] = result["at_configured_p"]["deltaB"];
  return out;
}

CommandOutput run_command(const std::string& command, const RunConfig& cfg, json& args, unsigned threads) {
  const Model m(cfg);
  if (command == "transmission") return cmd_transmission(m, args);
  if (command == "precision") return cmd_precision(m, args);
  if (command == "map") return cmd_map(m, args, threads);
  if (command == "estimate") return cmd_estimate(m, args, threads);
  if (command == "optimize") return cmd_optimize(m, args, threads);
  throw satsensor::ConfigError("unknown command '" + command + "'");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

std::string output_prefix(const std::string& flag, const RunConfig& cfg, const std::string& command) {
  std::string prefix = !flag.empty() ? flag : (!cfg.output_path.empty() ? cfg.output_path : command);
  if (prefix.size() > 4 && prefix.compare(prefix.size() - 4, 4, ".csv") == 0) prefix.resize(prefix.size() - 4);
  return prefix;
}

/// Runs one command and writes data files plus manifest in a single pass.
void execute(const std::string& command, const RunConfig& cfg, json args, const std::string& out_flag,
             unsigned threads) {
  const CommandOutput out = run_command(command, cfg, args, threads);
  const std::string prefix = output_prefix(out_flag, cfg, command);
  json manifest = {{"tool", "satsensor"},
                   {"version", kVersion},
                   {"timestamp", utc_timestamp()},
                   {"command", command},
                   {"arguments", args},
                   {"config", satsensor::to_json(cfg)},
                   {"derived", out.derived},
                   {"warnings", out.warnings},
                   {"outputs", json::array()}};
  if (out.csv) {
    write_file(prefix + ".csv", *out.csv);
    manifest["outputs"].push_back(prefix + ".csv");
  }
  if (out.summary) {
    write_file(prefix + ".json", out.summary->dump(2) + "\n");
    manifest["outputs"].push_back(prefix + ".json");
  }
  write_file(prefix + ".manifest.json", manifest.dump(2) + "\n");
  for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<std::pair<std::string, std::string>> environment_overrides() {
  std::vector<std::pair<std::string, std::string>> env;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    if (entry.rfind(satsensor::kEnvPrefix, 0) == 0) env.emplace_back(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return env;
}

template <class T>
void put(json& args, const char* key, const std::optional<T>& v) {
  if (v) args[key] = *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"satsensor: magnetic field sensing with a single-atom transistor"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "override the configured RNG seed");
  app.add_option("--out", out_path, "output prefix (writes PREFIX.csv / PREFIX.json / PREFIX.manifest.json)");
  app.add_option("--threads", threads, "worker threads for grids and Monte Carlo trials")->check(CLI::PositiveNumber);

  std::optional<double> b_min, b_max, p_min, p_max, b_true, prior_min, prior_max;
  std::optional<std::int64_t> points, p_points, m_sent, trials;
  bool linear_p = false;
  std::string manifest_path;

  auto add_field_range = [&](CLI::App* sub) {
    sub->add_option("--b-min", b_min, "lower field (G)");
    sub->add_option("--b-max", b_max, "upper field (G)");
    sub->add_option("--points", points, "number of field points");
  };
  auto add_momentum_range = [&](CLI::App* sub) {
    sub->add_option("--p-min", p_min, "lower momentum (1/abar)");
    sub->add_option("--p-max", p_max, "upper momentum (1/abar)");
    sub->add_option("--p-points", p_points, "number of momentum points");
  };

  auto* transmission = app.add_subcommand("transmission", "T(B) sweep at the configured momentum");
  add_field_range(transmission);
  auto* precision = app.add_subcommand("precision", "Fisher information and single-shot precision over B");
  add_field_range(precision);
  auto* map = app.add_subcommand("map", "single-shot precision over a (B, p) grid");
  add_field_range(map);
  add_momentum_range(map);
  map->add_flag("--linear-p", linear_p, "linear instead of logarithmic momentum spacing");
  auto* estimate = app.add_subcommand("estimate", "Monte Carlo maximum-likelihood estimation against the CRLB");
  estimate->add_option("--b-true", b_true, "true field (G)");
  estimate->add_option("--m-sent", m_sent, "atoms per trial");
  estimate->add_option("--trials", trials, "number of trials");
  estimate->add_option("--prior-min", prior_min, "prior interval lower end (G)");
  estimate->add_option("--prior-max", prior_max, "prior interval upper end (G)");
  auto* optimize = app.add_subcommand("optimize", "minimize the single-shot precision over (B, p)");
  add_field_range(optimize);
  add_momentum_range(optimize);
  auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay->add_option("manifest", manifest_path, "manifest written by a previous run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    std::string command;
    RunConfig cfg;
    json args = json::object();
    if (replay->parsed()) {
      const json manifest = satsensor::read_json_file(manifest_path);
      if (!manifest.contains("command") || !manifest.contains("config") || !manifest.contains("arguments"))
        throw satsensor::ConfigError("replay: " + manifest_path + " is not a satsensor manifest");
      command = manifest.at("command").get<std::string>();
      cfg = satsensor::parse_config(manifest.at("config"));
      args = manifest.at("arguments");
    } else {
      if (config_path.empty()) throw satsensor::ConfigError("--config is required");
      json root = satsensor::read_json_file(config_path);
      satsensor::apply_env_overrides(root, environment_overrides());
      if (seed) root["seed"] = *seed;
      cfg = satsensor::parse_config(root);
      command = app.get_subcommands().front()->get_name();
      put(args, "b_min", b_min);
      put(args, "b_max", b_max);
      put(args, "points", points);
      put(args, "p_min", p_min);
      put(args, "p_max", p_max);
      put(args, "p_points", p_points);
      put(args, "b_true", b_true);
      put(args, "m_sent", m_sent);
      put(args, "trials", trials);
      if (prior_min.has_value() != prior_max.has_value())
        throw satsensor::ConfigError("--prior-min and --prior-max go together");
      put(args, "prior_min", prior_min);
      put(args, "prior_max", prior_max);
      if (command == "map") args["log_p"] = !linear_p;
    }
    execute(command, cfg, args, out_path, threads);
    return kOk;
  } catch (const satsensor::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const satsensor::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kNumericFailure;
  }
}
