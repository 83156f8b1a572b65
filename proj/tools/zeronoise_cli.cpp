#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "zeronoise/experiments.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kThresholdFail = 1;
constexpr int kConfigError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-noise limit experiments for power-law drifts with stable noise"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;

  for (const auto& name : zeronoise::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the '" + name + "' experiment");
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads (overrides the config)");
    sub->add_option("--out", out, "output directory (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  const std::string experiment = app.get_subcommands().front()->get_name();
  zeronoise::ExperimentReport report;
  std::filesystem::path dir;
  try {
    zeronoise::ExperimentConfig cfg = config_path.empty() ? zeronoise::parse_config("", experiment)
                                                          : zeronoise::load_config(config_path, experiment);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (out) cfg.output_dir = *out;
    dir = cfg.output_dir;
    report = zeronoise::run_experiment(cfg);
  } catch (const zeronoise::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kThresholdFail;
  }

  zeronoise::write_report(report, dir);
  for (const auto& c : report.checks())
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << c.value << '\n';
  for (const auto& w : report.warnings()) std::cout << "warning: " << w << '\n';
  std::cout << (report.passed() ? "passed" : "failed") << "; report written to " << (dir / "report.json").string()
            << '\n';
  return report.passed() ? kPass : kThresholdFail;
}
