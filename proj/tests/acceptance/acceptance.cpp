// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [--out DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "zeronoise/asymptotics_lab.hpp"
#include "zeronoise/config.hpp"
#include "zeronoise/experiments.hpp"
#include "zeronoise/field_library.hpp"
#include "zeronoise/sde_engine.hpp"

using namespace zeronoise;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kSelftestRuntime = 30.0;          // seconds
constexpr double kClosedFormRelative = 1e-8;
constexpr double kAngleDrift = 1e-10;
constexpr double kScalingKs = 0.04;
constexpr double kScalingKsHeavy = 0.05;
constexpr double kScalingRuntime = 300.0;          // seconds
constexpr double kForcedRatioLo = 0.98, kForcedRatioHi = 1.02;
constexpr double kForcedCauchy = 0.05;
constexpr double kCounterexampleSup = 4.0;
constexpr double kSettledNeeded = 8.0;             // of 10 runs
constexpr double kSplitLo = 0.485, kSplitHi = 0.515;
constexpr double kUniformKs = 0.03;
constexpr double kOracleError = 0.03;
constexpr double kRStabilityKs = 0.04;
constexpr double kDistanceRatio = 0.5;
constexpr double kSplitHalfWidth = 0.03;
constexpr double kTauProbability = 0.1;
constexpr double kConvergenceRuntime = 600.0;      // seconds
constexpr double kPolarClosedForm = 1e-6;

struct Line {
  int id;
  bool passed;
  std::string detail;
};

std::vector<Line> g_lines;
fs::path g_out = "acceptance_out";

void report_line(int id, bool passed, const std::string& detail) {
  g_lines.push_back({id, passed, detail});
  std::printf("%s criterion %d: %s\n", passed ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentReport run_and_save(const std::string& text, const std::string& experiment, const std::string& dir) {
  const auto cfg = parse_config(text, experiment);
  auto report = run_experiment(cfg);
  write_report(report, g_out / dir);
  return report;
}

double check_value(const ExperimentReport& r, const std::string& name) {
  const Check* c = r.find_check(name);
  if (!c) throw std::runtime_error("missing check " + name);
  return c->value;
}

// A failure to run counts as a failed criterion.
void guarded(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report_line(id, false, std::string("error: ") + e.what());
  }
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_and_save("d = 1\nselftest_samples = 100000\nseed = 2\n", "noise-selftest", "c01_noise_selftest");
  const double elapsed = seconds_since(t0);
  bool ok = elapsed < kSelftestRuntime;
  double worst_ratio = 0.0;
  int count = 0;
  for (const auto& c : r.checks()) {
    if (c.name.rfind("charfn_error_", 0) != 0) continue;
    ++count;
    ok = ok && c.passed;
    worst_ratio = std::max(worst_ratio, c.value / c.upper);
  }
  ok = ok && count == 6;
  report_line(1, ok,
              "noise characteristic function, " + std::to_string(count) + " cases, worst error/tolerance " +
                  fmt("%.3f", worst_ratio) + ", runtime " + fmt("%.1f", elapsed) + " s");
}

void criterion2() {
  const auto f = model_field<2>(AngularProfile<2>(1.0), 0.5);
  const Point<2> x0(0.6, 0.8);
  const auto traj = integrate_ode<2>(f, x0, UniformGrid::over(1.0, 1e-3));
  const double rel = std::abs(traj.states.back().norm() - 2.25) / 2.25;
  double drift = 0.0;
  for (const auto& x : traj.states) drift = std::max(drift, geodesic_distance<2>(Point<2>(x / x.norm()), x0));
  report_line(2, rel < kClosedFormRelative && drift < kAngleDrift,
              "RK4 closed form, relative error " + fmt("%.2e", rel) + ", angle drift " + fmt("%.2e", drift));
}

void criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string common = "N = 5000\neps_list = 0.5\nt_points = 1\n";
  const auto a = run_and_save(common + "alpha = 2\nbeta = 0.5\nd = 1\nseed = 3\nks_threshold = 0.04\n", "scaling",
                              "c03_scaling_a2_b05_d1");
  const auto b = run_and_save(common + "alpha = 2\nbeta = 0.5\nd = 2\nseed = 4\nks_threshold = 0.04\n", "scaling",
                              "c03_scaling_a2_b05_d2");
  const auto c = run_and_save(common + "alpha = 1.5\nbeta = 0.7\nd = 1\nseed = 5\nks_threshold = 0.05\n", "scaling",
                              "c03_scaling_a15_b07_d1");
  const double elapsed = seconds_since(t0);
  const double ka = check_value(a, "worst_ks_eps_0.5");
  const double kb = check_value(b, "worst_ks_eps_0.5");
  const double kc = check_value(c, "worst_ks_eps_0.5");
  const bool ok = ka < kScalingKs && kb < kScalingKs && kc < kScalingKsHeavy && elapsed < kScalingRuntime;
  report_line(3, ok,
              "scaling identity KS " + fmt("%.4f", ka) + " (d=1), " + fmt("%.4f", kb) + " (d=2), " + fmt("%.4f", kc) +
                  " (alpha=1.5, beta=0.7), runtime " + fmt("%.1f", elapsed) + " s");
}

// Criteria 4, 5 and 6 share one large-time run.
void criteria456() {
  const auto r = run_and_save("d = 2\nalpha = 1.5\nbeta = 0.5\nlarge_time_T = 10000\nruns = 10\ncounterexample_T = 1000\n"
                              "tail_fraction = 0.5\nseed = 5\n",
                              "large-time", "c04_large_time");
  const double ratio = check_value(r, "forced_a_bar_ratio");
  const double cauchy = check_value(r, "forced_cauchy_diag");
  report_line(4, ratio >= kForcedRatioLo && ratio <= kForcedRatioHi && cauchy < kForcedCauchy,
              "bounded forcing, fitted a_bar ratio " + fmt("%.5f", ratio) + ", angular Cauchy diagnostic " +
                  fmt("%.2e", cauchy));
  const double sup = check_value(r, "counterexample_sup_radius");
  report_line(5, sup <= kCounterexampleSup, "counterexample sup radius " + fmt("%.5f", sup) + " over [0, 1000]");
  const double settled = check_value(r, "stochastic_settled_runs");
  report_line(6, settled >= kSettledNeeded,
              "stochastic long runs settled " + fmt("%.0f", settled) + " of 10 (ratio in [0.9, 1.1], diagnostic < 0.1)");
}

void criterion7() {
  const auto sym = run_and_save("d = 1\nalpha = 2\nbeta = 0.5\nR = 50\nN = 10000\nseed = 13\n", "exit-dist",
                                "c07_exit_1d_symmetric");
  const auto asym = run_and_save("d = 1\nalpha = 2\nbeta = 0.5\na_plus = 2\na_minus = 1\nR = 50\nN = 10000\nseed = 7\n",
                                 "exit-dist", "c07_exit_1d_asymmetric");
  const auto iso = run_and_save("d = 2\nalpha = 2\nbeta = 0.5\nR = 50\nN = 10000\nseed = 11\n", "exit-dist",
                                "c07_exit_2d");
  const double split = sym.metrics()["law_R"]["value"]["fraction_positive"].get<double>();
  const double oracle = check_value(asym, "oracle_error");
  const double uniform = check_value(iso, "ks_uniform_R");
  double stability = 0.0;
  for (const auto* r : {&sym, &asym, &iso}) stability = std::max(stability, check_value(*r, "ks_R_vs_2R"));
  const bool ok = split >= kSplitLo && split <= kSplitHi && uniform < kUniformKs && oracle <= kOracleError &&
                  stability < kRStabilityKs;
  report_line(7, ok,
              "exit angles: symmetric split " + fmt("%.4f", split) + ", 2D uniform KS " + fmt("%.4f", uniform) +
                  ", oracle error " + fmt("%.4f", oracle) + ", worst KS(R=50 vs 100) " + fmt("%.4f", stability));
}

void criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_and_save("field = sign1d\nd = 1\nalpha = 2\nbeta = 0.5\neps_list = 0.5, 0.1, 0.02\nT = 1\n"
                              "h = 0.001\nN = 2000\nR = 50\ndelta = 0.05\nmu = 0.1\nseed = 1\n",
                              "convergence", "c08_convergence");
  const double elapsed = seconds_since(t0);
  const double ratio = check_value(r, "distance_ratio_last_over_first");
  const double conc = check_value(r, "support_distance_ratio_last_over_first");
  const auto& rows = r.metrics()["eps_sweep"]["rows"];
  const double split = rows.back()["fraction_positive"].get<double>();
  const double tau = check_value(r, "p_tau_delta_gt_mu");
  const bool ratio_ok = ratio <= kDistanceRatio;
  const bool conc_ok = conc <= kDistanceRatio;
  const bool split_ok = std::abs(split - 0.5) <= kSplitHalfWidth;
  const bool tau_ok = tau < kTauProbability;
  const bool time_ok = elapsed < kConvergenceRuntime;
  report_line(8, ratio_ok && conc_ok && split_ok && tau_ok && time_ok,
              "convergence: distance ratio " + fmt("%.3f", ratio) + (ratio_ok ? "" : " [fail]") +
                  ", support-distance ratio " + fmt("%.3f", conc) + (conc_ok ? "" : " [fail]") + ", split " +
                  fmt("%.4f", split) + (split_ok ? "" : " [fail]") + ", P(tau_0.05 > 0.1) " + fmt("%.4f", tau) +
                  (tau_ok ? "" : " [fail]") + ", runtime " + fmt("%.1f", elapsed) + " s");
}

void criterion9() {
  // b = 0, a = 1: closed form.
  PolarSystem<2> radial;
  radial.a = [](double, const Point<2>&) { return 1.0; };
  radial.b = [](double, const Point<2>&) { return Point<2>::Zero(); };
  radial.beta = 0.5;
  radial.delta = 0.3;
  const Point<2> phi0(0.6, 0.8);
  const auto sol = polar_ode_solve<2>(radial, 0.0, phi0, 4.0);
  double closed_err = 0.0;
  for (int k = 1; k <= 400; ++k) {
    const double t = 0.01 * k;
    const auto s = sol.at(t);
    const double exact = 0.25 * t * t;
    closed_err = std::max(closed_err, std::abs(s.r - exact) / std::max(1.0, exact));
    closed_err = std::max(closed_err, (s.phi - phi0).norm());
  }

  // Bounded a with a tangential part: R between the two comparison solutions.
  PolarSystem<2> twisted;
  twisted.a = [](double r, const Point<2>& p) { return 1.0 + 0.3 * p[0] + 0.2 * std::sin(r); };
  twisted.b = [](double, const Point<2>& p) { return Point<2>(-p[1], p[0]) * (0.5 + 0.3 * p[1]); };
  twisted.beta = 0.5;
  twisted.delta = 0.4;
  bool bounds_ok = true;
  for (double th : {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}) {
    const auto s = polar_ode_solve<2>(twisted, 0.0, Point<2>(std::cos(th), std::sin(th)), 5.0);
    for (int k = 1; k <= 100; ++k) {
      const double t = 0.05 * k;
      const double r = s.at(t).r;
      bounds_ok = bounds_ok && r > 0.0 && r >= closed_form_radius(s.a_lower, 0.5, 0.0, t) * (1 - 1e-9) &&
                  r <= closed_form_radius(s.a_upper, 0.5, 0.0, t) * (1 + 1e-9);
    }
  }

  // Sup over an angle grid of the gap between neighbouring starts at t = 1,
  // for grids of 16, 64 and 256 angles.
  std::vector<double> sups;
  for (int m : {16, 64, 256}) {
    std::vector<Point<2>> ends;
    for (int i = 0; i <= m; ++i) {
      const double th = 2.0 * std::numbers::pi * i / m;
      ends.push_back(polar_ode_solve<2>(twisted, 0.0, Point<2>(std::cos(th), std::sin(th)), 1.0, {1000, 90, 50})
                         .at(1.0)
                         .phi);
    }
    double sup = 0.0;
    for (int i = 0; i < m; ++i) sup = std::max(sup, geodesic_distance<2>(ends[i], ends[i + 1]));
    sups.push_back(sup);
  }
  const bool continuity_ok = sups[1] < sups[0] && sups[2] < sups[1] && sups[2] < 0.1;
  report_line(9, closed_err < kPolarClosedForm && bounds_ok && continuity_ok,
              "polar solver: closed-form error " + fmt("%.2e", closed_err) + ", comparison bounds " +
                  (bounds_ok ? "hold" : "violated") + ", angle-gap sup " + fmt("%.4f", sups[0]) + " -> " +
                  fmt("%.4f", sups[1]) + " -> " + fmt("%.4f", sups[2]));
}

void criterion10() {
  const std::map<std::string, std::string> small{
      {"convergence", "field = sign1d\nN = 200\neps_list = 0.5, 0.1\nseed = 21\n"},
      {"scaling", "N = 400\neps_list = 0.5, 0.25\nseed = 22\n"},
      {"large-time", "d = 2\nalpha = 1.5\nlarge_time_T = 300\nruns = 4\ncounterexample_T = 50\nseed = 23\n"},
      {"exit-dist", "d = 2\nR = 5\nN = 300\nseed = 24\n"},
      {"modulus", "field = sign1d\nN = 200\neps_list = 0.5, 0.1\nseed = 25\n"},
      {"noise-selftest", "d = 2\nselftest_samples = 5000\nseed = 26\n"},
  };
  std::vector<std::string> mismatched;
  for (const auto& [name, text] : small) {
    auto cfg = parse_config(text, name);
    cfg.threads = 1;
    const auto first = run_experiment(cfg);
    const auto again = run_experiment(cfg);
    cfg.threads = 4;
    const auto parallel = run_experiment(cfg);
    const bool same = first.dump() == again.dump() && first.dump() == parallel.dump() &&
                      first.artifacts() == again.artifacts() && first.artifacts() == parallel.artifacts();
    if (!same) mismatched.push_back(name);
    write_report(first, g_out / ("c10_" + name));
  }
  std::string detail = "reruns and serial/parallel runs byte-identical for " + std::to_string(small.size()) +
                       " experiments";
  if (!mismatched.empty()) {
    detail = "mismatch in:";
    for (const auto& m : mismatched) detail += " " + m;
  }
  report_line(10, mismatched.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--out" && i + 1 < argc) {
      g_out = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--out DIR]\n");
      return 2;
    }
  }
  fs::create_directories(g_out);

  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, criterion3);
  try {
    criteria456();
  } catch (const std::exception& e) {
    for (int id : {4, 5, 6}) report_line(id, false, std::string("error: ") + e.what());
  }
  guarded(7, criterion7);
  guarded(8, criterion8);
  guarded(9, criterion9);
  guarded(10, criterion10);

  int failed = 0;
  for (const auto& l : g_lines) failed += !l.passed;
  std::printf("%d of %zu criteria passed\n", static_cast<int>(g_lines.size()) - failed, g_lines.size());
  return failed == 0 ? 0 : 1;
}
