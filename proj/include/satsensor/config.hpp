#pragma once

// JSON run configuration: strict key checking, environment overrides and a
// resolved echo for run manifests.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "satsensor/errors.hpp"
#include "satsensor/metrology.hpp"
#include "satsensor/scattering.hpp"
#include "satsensor/units.hpp"

namespace satsensor {

using json = nlohmann::json;

struct RunConfig {
  Species species;
  ResonanceParams resonance;  ///< dmu already converted to natural units
  std::optional<double> dmu_mhz_per_g;
  TrapGeometry trap;
  std::optional<double> p;               ///< exactly one of p / temperature_nk
  std::optional<double> temperature_nk;
  DetectorModel detector;
  SensorBudget budget;
  std::optional<double> prior_min_g;
  std::optional<double> prior_max_g;
  std::uint64_t seed = 0;
  std::string output_path;
  std::string output_format = "csv";

  /// Longitudinal momentum of the configured collision (1/abar).
  double momentum() const { return p ? *p : temperature_to_momentum(*temperature_nk, species); }
};

inline std::string_view to_string(DetectionScheme s) {
  return s == DetectionScheme::BothPorts ? "both_ports" : "transmitted_only";
}

namespace detail {

inline void check_keys(const json& obj, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError("config: '" + std::string(section) + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("config: unknown key '" + key + "' in '" + std::string(section) + "'");
  }
}

template <class T>
T required(const json& obj, std::string_view section, const char* key) {
  if (!obj.contains(key))
    throw ConfigError("config: missing '" + std::string(section) + "." + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: '" + std::string(section) + "." + key + "' has the wrong type");
  }
}

template <class T>
std::optional<T> optional_value(const json& obj, std::string_view section, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return required<T>(obj, section, key);
}

inline const json& section(const json& root, const char* name, bool mandatory) {
  static const json kEmpty = json::object();
  if (!root.contains(name)) {
    if (mandatory) throw ConfigError(std::string("config: missing section '") + name + "'");
    return kEmpty;
  }
  return root.at(name);
}

}  // namespace detail

/// Parses and validates a configuration document. Unknown keys are errors.
inline RunConfig parse_config(const json& root) {
  using detail::optional_value;
  using detail::required;
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  detail::check_keys(root, "<root>",
                     {"species", "resonance", "trap", "collision", "detector", "budget", "estimation", "seed",
                      "output"});
  RunConfig cfg;

  const json& sp = detail::section(root, "species", true);
  detail::check_keys(sp, "species", {"name", "mass_amu", "abar_bohr"});
  cfg.species.name = optional_value<std::string>(sp, "species", "name").value_or("");
  cfg.species.mass_amu = required<double>(sp, "species", "mass_amu");
  cfg.species.abar_bohr = required<double>(sp, "species", "abar_bohr");

  const json& res = detail::section(root, "resonance", true);
  detail::check_keys(res, "resonance", {"a_bg", "delta", "b_res", "dmu_mhz_per_g"});
  cfg.resonance.a_bg = required<double>(res, "resonance", "a_bg");
  cfg.resonance.delta = required<double>(res, "resonance", "delta");
  cfg.resonance.b_res = required<double>(res, "resonance", "b_res");
  cfg.dmu_mhz_per_g = optional_value<double>(res, "resonance", "dmu_mhz_per_g");

  const json& trap = detail::section(root, "trap", false);
  detail::check_keys(trap, "trap", {"d", "mass_factor"});
  cfg.trap.d = optional_value<double>(trap, "trap", "d").value_or(cfg.trap.d);
  cfg.trap.mass_factor = optional_value<double>(trap, "trap", "mass_factor").value_or(cfg.trap.mass_factor);

  const json& coll = detail::section(root, "collision", true);
  detail::check_keys(coll, "collision", {"p", "temperature_nk"});
  cfg.p = optional_value<double>(coll, "collision", "p");
  cfg.temperature_nk = optional_value<double>(coll, "collision", "temperature_nk");
  if (cfg.p.has_value() == cfg.temperature_nk.has_value())
    throw ConfigError("config: collision needs exactly one of 'p' and 'temperature_nk'");

  const json& det = detail::section(root, "detector", false);
  detail::check_keys(det, "detector", {"eta", "scheme"});
  cfg.detector.eta = optional_value<double>(det, "detector", "eta").value_or(1.0);
  const auto scheme = optional_value<std::string>(det, "detector", "scheme").value_or("both_ports");
  if (scheme == "both_ports")
    cfg.detector.scheme = DetectionScheme::BothPorts;
  else if (scheme == "transmitted_only")
    cfg.detector.scheme = DetectionScheme::TransmittedOnly;
  else
    throw ConfigError("config: detector.scheme must be 'both_ports' or 'transmitted_only'");

  const json& bud = detail::section(root, "budget", false);
  detail::check_keys(bud, "budget", {"n_tubes", "m_reps", "tau_s", "total_time_s", "sigma_p"});
  cfg.budget.n_tubes = optional_value<std::int64_t>(bud, "budget", "n_tubes").value_or(1);
  cfg.budget.m_reps = optional_value<std::int64_t>(bud, "budget", "m_reps").value_or(1);
  cfg.budget.tau = optional_value<double>(bud, "budget", "tau_s").value_or(cfg.budget.tau);
  cfg.budget.total_time = optional_value<double>(bud, "budget", "total_time_s");
  cfg.budget.sigma_p = optional_value<double>(bud, "budget", "sigma_p").value_or(0.0);

  const json& est = detail::section(root, "estimation", false);
  detail::check_keys(est, "estimation", {"prior_min_g", "prior_max_g"});
  cfg.prior_min_g = optional_value<double>(est, "estimation", "prior_min_g");
  cfg.prior_max_g = optional_value<double>(est, "estimation", "prior_max_g");
  if (cfg.prior_min_g.has_value() != cfg.prior_max_g.has_value())
    throw ConfigError("config: estimation needs both prior_min_g and prior_max_g");

  cfg.seed = optional_value<std::uint64_t>(root, "<root>", "seed").value_or(0);

  const json& out = detail::section(root, "output", false);
  detail::check_keys(out, "output", {"path", "format"});
  cfg.output_path = optional_value<std::string>(out, "output", "path").value_or("");
  cfg.output_format = optional_value<std::string>(out, "output", "format").value_or("csv");
  if (cfg.output_format != "csv") throw ConfigError("config: output.format must be 'csv'");

  // component invariants, reported as configuration errors
  try {
    cfg.species.validate();
    cfg.trap.validate();
    cfg.detector.validate();
    cfg.budget.validate();
    if (cfg.dmu_mhz_per_g) {
      if (!(*cfg.dmu_mhz_per_g > 0.0)) throw std::invalid_argument("resonance.dmu_mhz_per_g must be positive");
      cfg.resonance.dmu = UnitSystem(cfg.species).dmu_from_hz_per_gauss(*cfg.dmu_mhz_per_g * 1e6);
    }
    cfg.resonance.validate();
    if (cfg.temperature_nk && !(*cfg.temperature_nk >= 0.0))
      throw std::invalid_argument("collision.temperature_nk must be >= 0");
    const double p = cfg.momentum();
    if (!(p > 0.0) || !(p * cfg.trap.d < 2.0))
      throw std::invalid_argument("collision momentum must satisfy 0 < p d < 2");
    if (cfg.prior_min_g && !(*cfg.prior_min_g < *cfg.prior_max_g))
      throw std::invalid_argument("estimation prior must have prior_min_g < prior_max_g");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

/// Resolved configuration with every default made explicit; parse_config of
/// the result yields the same RunConfig.
inline json to_json(const RunConfig& cfg) {
  json j;
  j["species"] = {{"name", cfg.species.name}, {"mass_amu", cfg.species.mass_amu}, {"abar_bohr", cfg.species.abar_bohr}};
  j["resonance"] = {{"a_bg", cfg.resonance.a_bg}, {"delta", cfg.resonance.delta}, {"b_res", cfg.resonance.b_res}};
  if (cfg.dmu_mhz_per_g) j["resonance"]["dmu_mhz_per_g"] = *cfg.dmu_mhz_per_g;
  j["trap"] = {{"d", cfg.trap.d}, {"mass_factor", cfg.trap.mass_factor}};
  j["collision"] = json::object();
  if (cfg.p) j["collision"]["p"] = *cfg.p;
  if (cfg.temperature_nk) j["collision"]["temperature_nk"] = *cfg.temperature_nk;
  j["detector"] = {{"eta", cfg.detector.eta}, {"scheme", std::string(to_string(cfg.detector.scheme))}};
  j["budget"] = {{"n_tubes", cfg.budget.n_tubes},
                 {"m_reps", cfg.budget.m_reps},
                 {"tau_s", cfg.budget.tau},
                 {"sigma_p", cfg.budget.sigma_p}};
  if (cfg.budget.total_time) j["budget"]["total_time_s"] = *cfg.budget.total_time;
  if (cfg.prior_min_g) j["estimation"] = {{"prior_min_g", *cfg.prior_min_g}, {"prior_max_g", *cfg.prior_max_g}};
  j["seed"] = cfg.seed;
  j["output"] = {{"path", cfg.output_path}, {"format", cfg.output_format}};
  return j;
}

inline constexpr std::string_view kEnvPrefix = "SATSENSOR_";

/// Applies NAME=VALUE overrides of the form SATSENSOR_<SECTION>__<KEY>
/// (or SATSENSOR_<KEY> for top-level keys); names are case-insensitive.
/// Values are parsed as JSON, falling back to a plain string.
inline void apply_env_overrides(json& root, const std::vector<std::pair<std::string, std::string>>& env) {
  for (const auto& [name, value] : env) {
    if (name.rfind(kEnvPrefix, 0) != 0) continue;
    std::string rest = name.substr(kEnvPrefix.size());
    std::transform(rest.begin(), rest.end(), rest.begin(), [](unsigned char c) { return std::tolower(c); });
    std::vector<std::string> path;
    for (std::size_t start = 0;;) {
      const auto pos = rest.find("__", start);
      path.push_back(rest.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 2;
    }
    if (path.empty() || path.size() > 2 || std::any_of(path.begin(), path.end(), [](auto& s) { return s.empty(); }))
      throw ConfigError("config: malformed override variable " + name);
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = value;
    }
    json* node = &root;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      if (!node->contains(path[i])) (*node)[path[i]] = json::object();
      node = &(*node)[path[i]];
      if (!node->is_object()) throw ConfigError("config: override " + name + " targets a non-object");
    }
    (*node)[path.back()] = parsed;
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
}

}  // namespace satsensor
