#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "zeronoise/config.hpp"

#ifndef ZERONOISE_VERSION
#define ZERONOISE_VERSION "0.1.0"
#endif

namespace zeronoise {

// Where a statistic came from: sample size, seed and the stream range used.
struct Provenance {
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  std::uint64_t first_stream = 0;
  std::uint64_t last_stream = 0;

  static Provenance streams(std::size_t n, std::uint64_t seed, std::uint64_t first) {
    return {n, seed, first, n == 0 ? first : first + n - 1};
  }
  // Deterministic computations with no random input.
  static Provenance none() { return {}; }
};

inline nlohmann::ordered_json to_json(const Provenance& p) {
  nlohmann::ordered_json j;
  j["sample_size"] = p.sample_size;
  if (p.sample_size == 0) {
    j["seed"] = nullptr;
    j["streams"] = nullptr;
  } else {
    j["seed"] = p.seed;
    j["streams"] = {p.first_stream, p.last_stream};
  }
  return j;
}

struct Check {
  std::string name;
  double value = 0.0;
  std::string comparison;  // "<", "<=", ">=", "in"
  double lower = 0.0;
  double upper = 0.0;
  bool passed = false;
  Provenance provenance;
  std::string note;
};

class ExperimentReport {
 public:
  ExperimentReport() = default;
  explicit ExperimentReport(const ExperimentConfig& cfg)
      : experiment_(cfg.experiment), config_(zeronoise::to_json(cfg)), hash_(config_hash(cfg)), seed_(cfg.seed) {}

  void metric(const std::string& name, nlohmann::ordered_json value, const Provenance& p) {
    nlohmann::ordered_json m;
    m["value"] = std::move(value);
    m["provenance"] = zeronoise::to_json(p);
    metrics_[name] = std::move(m);
  }

  // Table-valued metric; each row carries its own provenance.
  nlohmann::ordered_json& metric_array(const std::string& name) {
    auto& m = metrics_[name];
    m["rows"] = nlohmann::ordered_json::array();
    return m["rows"];
  }

  const Check& check_below(const std::string& name, double value, double bound, const Provenance& p,
                           bool strict = true, std::string note = "") {
    Check c{name, value, strict ? "<" : "<=", bound, bound, strict ? value < bound : value <= bound, p,
            std::move(note)};
    checks_.push_back(std::move(c));
    return checks_.back();
  }

  const Check& check_at_least(const std::string& name, double value, double bound, const Provenance& p,
                              std::string note = "") {
    checks_.push_back({name, value, ">=", bound, bound, value >= bound, p, std::move(note)});
    return checks_.back();
  }

  const Check& check_within(const std::string& name, double value, double lo, double hi, const Provenance& p,
                            std::string note = "") {
    checks_.push_back({name, value, "in", lo, hi, value >= lo && value <= hi, p, std::move(note)});
    return checks_.back();
  }

  void warn(std::string message) { warnings_.push_back(std::move(message)); }

  // Files written next to report.json, keyed by file name.
  void artifact(const std::string& file, std::string content) { artifacts_[file] = std::move(content); }

  bool passed() const {
    for (const auto& c : checks_)
      if (!c.passed) return false;
    return true;
  }

  const std::vector<Check>& checks() const { return checks_; }
  const Check* find_check(const std::string& name) const {
    for (const auto& c : checks_)
      if (c.name == name) return &c;
    return nullptr;
  }
  const nlohmann::ordered_json& metrics() const { return metrics_; }
  const std::map<std::string, std::string>& artifacts() const { return artifacts_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["experiment"] = experiment_;
    j["passed"] = passed();
    auto& prov = j["provenance"];
    prov["config_hash"] = hash_;
    prov["seed"] = seed_;
    prov["code_version"] = ZERONOISE_VERSION;
    prov["distance_note"] =
        "closeness in law is measured by Kolmogorov-Smirnov and 1-Wasserstein distances, used as computable "
        "surrogates for the Levy-Prokhorov metric; they bound or approximate it but are not identical";
    j["config"] = config_;
    auto& cs = j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : checks_) {
      nlohmann::ordered_json cj;
      cj["name"] = c.name;
      cj["value"] = c.value;
      cj["comparison"] = c.comparison;
      if (c.comparison == "in") cj["bounds"] = {c.lower, c.upper};
      else cj["threshold"] = c.upper;
      cj["passed"] = c.passed;
      cj["provenance"] = zeronoise::to_json(c.provenance);
      if (!c.note.empty()) cj["note"] = c.note;
      cs.push_back(std::move(cj));
    }
    j["metrics"] = metrics_;
    j["warnings"] = warnings_;
    auto& files = j["artifacts"] = nlohmann::ordered_json::array();
    for (const auto& [name, _] : artifacts_) files.push_back(name);
    return j;
  }

  std::string dump() const { return to_json().dump(2) + "\n"; }

 private:
  std::string experiment_;
  nlohmann::ordered_json config_;
  std::string hash_;
  std::uint64_t seed_ = 0;
  nlohmann::ordered_json metrics_ = nlohmann::ordered_json::object();
  std::vector<Check> checks_;
  std::vector<std::string> warnings_;
  std::map<std::string, std::string> artifacts_;
};

}  // namespace zeronoise
