#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zeronoise/field_library.hpp"

namespace zeronoise {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"convergence", "scaling", "large-time",
                                              "exit-dist",   "modulus", "noise-selftest"};
  return names;
}

struct ExperimentConfig {
  std::string experiment;
  FieldConfig field;
  double alpha = 2.0;
  double beta = 0.5;
  double c = 1.0;
  int d = 1;
  std::vector<double> eps_list{0.5, 0.1, 0.02};
  double delta = 0.05;
  double R = 50.0;
  double T = 1.0;
  double h = 1e-3;
  std::size_t N = 2000;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::size_t thinning = 1;
  unsigned threads = 1;

  // Starting point; empty means the experiment's default.
  std::vector<double> x0;
  // convergence: exit-time check P(tau_delta > mu) < mu.
  double mu = 0.1;
  // scaling
  std::vector<double> t_points{1.0};
  double ks_threshold = 0.04;
  // large-time
  double large_time_T = 1e4;
  std::size_t runs = 10;
  double counterexample_T = 1e3;
  double tail_fraction = 0.5;
  // modulus
  double modulus_mu = 0.2;
  double modulus_delta = 0.01;
  // noise-selftest
  std::size_t selftest_samples = 100000;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("key '" + key + "': '" + v + "' is not a nonnegative integer");
  return out;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("key '" + key + "': empty list entry");
    out.push_back(parse_double(key, item));
  }
  return out;
}

}  // namespace detail

// Flat "key = value" document; '#' starts a comment; lists are comma separated.
inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    if (!out.emplace(key, value).second) throw ConfigError("duplicate key '" + key + "'");
  }
  return out;
}

inline void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& v) {
  using detail::parse_double, detail::parse_uint, detail::parse_list;
  if (key == "experiment") cfg.experiment = v;
  else if (key == "field") cfg.field.name = v;
  else if (key == "alpha") cfg.alpha = parse_double(key, v);
  else if (key == "beta") cfg.beta = parse_double(key, v);
  else if (key == "c") cfg.c = parse_double(key, v);
  else if (key == "d") cfg.d = static_cast<int>(parse_uint(key, v));
  else if (key == "eps_list") cfg.eps_list = parse_list(key, v);
  else if (key == "delta") cfg.delta = parse_double(key, v);
  else if (key == "R") cfg.R = parse_double(key, v);
  else if (key == "T") cfg.T = parse_double(key, v);
  else if (key == "h") cfg.h = parse_double(key, v);
  else if (key == "N") cfg.N = parse_uint(key, v);
  else if (key == "seed") cfg.seed = parse_uint(key, v);
  else if (key == "output_dir") cfg.output_dir = v;
  else if (key == "thinning") cfg.thinning = parse_uint(key, v);
  else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_uint(key, v));
  else if (key == "x0") cfg.x0 = parse_list(key, v);
  else if (key == "mu") cfg.mu = parse_double(key, v);
  else if (key == "t_points") cfg.t_points = parse_list(key, v);
  else if (key == "ks_threshold") cfg.ks_threshold = parse_double(key, v);
  else if (key == "large_time_T") cfg.large_time_T = parse_double(key, v);
  else if (key == "runs") cfg.runs = parse_uint(key, v);
  else if (key == "counterexample_T") cfg.counterexample_T = parse_double(key, v);
  else if (key == "tail_fraction") cfg.tail_fraction = parse_double(key, v);
  else if (key == "modulus_mu") cfg.modulus_mu = parse_double(key, v);
  else if (key == "modulus_delta") cfg.modulus_delta = parse_double(key, v);
  else if (key == "selftest_samples") cfg.selftest_samples = parse_uint(key, v);
  else if (key == "a_const") cfg.field.a_const = parse_double(key, v);
  else if (key == "a_plus") cfg.field.a_plus = parse_double(key, v);
  else if (key == "a_minus") cfg.field.a_minus = parse_double(key, v);
  else if (key == "cosine_amplitude") cfg.field.cosine_amplitude = parse_double(key, v);
  else if (key == "table") cfg.field.table = parse_list(key, v);
  else if (key == "n") cfg.field.n = static_cast<int>(parse_uint(key, v));
  else if (key == "R_rad") cfg.field.r_rad = parse_double(key, v);
  else if (key == "gamma") cfg.field.gamma = parse_double(key, v);
  else throw ConfigError("unknown key '" + key + "'");
}

inline void validate(const ExperimentConfig& cfg) {
  if (std::find(experiment_names().begin(), experiment_names().end(), cfg.experiment) == experiment_names().end())
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  if (std::find(field_names().begin(), field_names().end(), cfg.field.name) == field_names().end())
    throw ConfigError("unknown field '" + cfg.field.name + "'");
  if (!(cfg.alpha > 1.0 && cfg.alpha <= 2.0)) throw ConfigError("alpha must lie in (1, 2]");
  if (!(cfg.c > 0.0)) throw ConfigError("c must be positive");
  if (!(std::abs(cfg.beta) < 1.0)) throw ConfigError("beta must satisfy |beta| < 1");
  if (!(cfg.alpha + cfg.beta > 1.0))
    throw ConfigError("alpha + beta must exceed 1: below that threshold the perturbed equation is not known to "
                      "have a unique solution and the time-space rescaling degenerates");
  if (cfg.d < 1 || cfg.d > 3) throw ConfigError("d must be 1, 2 or 3");
  if (!(cfg.h > 0.0)) throw ConfigError("h must be positive");
  if (!(cfg.T > 0.0)) throw ConfigError("T must be positive");
  if (!(cfg.delta > 0.0)) throw ConfigError("delta must be positive");
  if (!(cfg.R > 0.0)) throw ConfigError("R must be positive");
  if (cfg.N == 0) throw ConfigError("N must be positive");
  if (cfg.thinning == 0) throw ConfigError("thinning must be at least 1");
  if (cfg.threads == 0) throw ConfigError("threads must be at least 1");
  if (!cfg.x0.empty() && cfg.x0.size() != static_cast<std::size_t>(cfg.d))
    throw ConfigError("x0 must have d entries");
  if (!(cfg.tail_fraction > 0.0 && cfg.tail_fraction < 1.0)) throw ConfigError("tail_fraction must lie in (0, 1)");
  if (cfg.eps_list.empty()) throw ConfigError("eps_list must not be empty");
  const bool allow_zero = cfg.experiment == "modulus";
  for (double e : cfg.eps_list)
    if (!(e > 0.0 || (allow_zero && e == 0.0))) throw ConfigError("eps_list entries must be positive");
  if (cfg.experiment == "convergence" || cfg.experiment == "modulus") {
    for (std::size_t i = 1; i < cfg.eps_list.size(); ++i)
      if (!(cfg.eps_list[i] < cfg.eps_list[i - 1])) throw ConfigError("eps_list must be strictly decreasing");
    if (cfg.eps_list.size() < 2) throw ConfigError("eps_list needs at least two entries");
  }
  if (cfg.t_points.empty()) throw ConfigError("t_points must not be empty");
}

inline ExperimentConfig parse_config(const std::string& text, const std::string& experiment = "") {
  ExperimentConfig cfg;
  for (const auto& [k, v] : parse_key_values(text)) apply_key(cfg, k, v);
  if (!experiment.empty()) {
    if (!cfg.experiment.empty() && cfg.experiment != experiment)
      throw ConfigError("config names experiment '" + cfg.experiment + "' but '" + experiment + "' was requested");
    cfg.experiment = experiment;
  }
  cfg.field.beta = cfg.beta;
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, const std::string& experiment = "") {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), experiment);
}

// Everything that determines the result; threads and output_dir are left out
// because they do not.
inline nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["experiment"] = cfg.experiment;
  j["field"] = cfg.field.name;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["c"] = cfg.c;
  j["d"] = cfg.d;
  j["eps_list"] = cfg.eps_list;
  j["delta"] = cfg.delta;
  j["R"] = cfg.R;
  j["T"] = cfg.T;
  j["h"] = cfg.h;
  j["N"] = cfg.N;
  j["seed"] = cfg.seed;
  j["thinning"] = cfg.thinning;
  j["x0"] = cfg.x0;
  j["mu"] = cfg.mu;
  j["t_points"] = cfg.t_points;
  j["ks_threshold"] = cfg.ks_threshold;
  j["large_time_T"] = cfg.large_time_T;
  j["runs"] = cfg.runs;
  j["counterexample_T"] = cfg.counterexample_T;
  j["tail_fraction"] = cfg.tail_fraction;
  j["modulus_mu"] = cfg.modulus_mu;
  j["modulus_delta"] = cfg.modulus_delta;
  j["selftest_samples"] = cfg.selftest_samples;
  auto& f = j["field_params"];
  f["a_const"] = cfg.field.a_const;
  f["a_plus"] = cfg.field.a_plus ? nlohmann::ordered_json(*cfg.field.a_plus) : nlohmann::ordered_json(nullptr);
  f["a_minus"] = cfg.field.a_minus ? nlohmann::ordered_json(*cfg.field.a_minus) : nlohmann::ordered_json(nullptr);
  f["cosine_amplitude"] = cfg.field.cosine_amplitude;
  f["table"] = cfg.field.table;
  f["n"] = cfg.field.n;
  f["R_rad"] = cfg.field.r_rad;
  f["gamma"] = cfg.field.gamma;
  return j;
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(cfg).dump())));
  return buf;
}

}  // namespace zeronoise
