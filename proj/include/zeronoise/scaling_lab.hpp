#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zeronoise/ensemble.hpp"
#include "zeronoise/sde_engine.hpp"
#include "zeronoise/statistics.hpp"

namespace zeronoise {

// Exponents of the time-space transform
//   X~(t) = eps^(-space_exp) X_eps(eps^(time_exp) t),
// space_exp = alpha / (alpha + beta - 1), time_exp = alpha (1 - beta) / (alpha + beta - 1).
struct ScalingExponents {
  double space_exp = 0.0;
  double time_exp = 0.0;
};

inline ScalingExponents exponents(double alpha, double beta) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw std::domain_error("alpha must lie in (1, 2]");
  if (!(std::abs(beta) < 1.0)) throw std::domain_error("beta must satisfy |beta| < 1");
  if (!(alpha + beta > 1.0))
    throw std::domain_error("alpha + beta must exceed 1 (uniqueness regime of the perturbed equation)");
  const double denom = alpha + beta - 1.0;
  return {alpha / denom, alpha * (1.0 - beta) / denom};
}

// Applies the transform with parameter eps to a stored path. The result lives
// on the induced grid t_k / eps^time_exp and carries amplitude
// traj.epsilon / eps (an eps-path maps to a unit-amplitude path).
template <int Dim>
Trajectory<Dim> rescale(const Trajectory<Dim>& traj, double eps, const ScalingExponents& exps) {
  if (!(eps > 0.0)) throw std::domain_error("rescaling parameter eps must be positive");
  Trajectory<Dim> out = traj;
  const double space = std::pow(eps, -exps.space_exp);
  const double time = std::pow(eps, -exps.time_exp);
  for (auto& t : out.times) t *= time;
  for (auto& x : out.states) x *= space;
  out.epsilon = traj.epsilon / eps;
  out.h = traj.h * time;
  return out;
}

struct ScalingRow {
  double t = 0.0;
  std::vector<double> ks_coordinates;
  double ks_radius = 0.0;

  double worst() const {
    double w = ks_radius;
    for (double v : ks_coordinates) w = std::max(w, v);
    return w;
  }
};

struct ScalingReport {
  double eps = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  int d = 1;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double h = 0.0;
  double threshold = 0.04;
  std::vector<ScalingRow> rows;
  std::vector<std::string> warnings;
  // The identity is exact in law only for the model drift.
  bool exact_identity = true;

  double worst() const {
    double w = 0.0;
    for (const auto& r : rows) w = std::max(w, r.worst());
    return w;
  }
  bool passed() const { return worst() < threshold; }
};

inline nlohmann::json to_json(const ScalingReport& r) {
  nlohmann::json j;
  j["eps"] = r.eps;
  j["alpha"] = r.alpha;
  j["beta"] = r.beta;
  j["d"] = r.d;
  j["n_per_ensemble"] = r.n;
  j["seed"] = r.seed;
  j["streams"] = {{"eps_ensemble", {0, r.n - 1}}, {"unit_ensemble", {r.n, 2 * r.n - 1}}};
  j["h"] = r.h;
  j["threshold"] = r.threshold;
  j["worst_ks"] = r.worst();
  j["passed"] = r.passed();
  j["exact_identity"] = r.exact_identity;
  j["warnings"] = r.warnings;
  auto& rows = j["t_points"] = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"t", row.t}, {"ks_coordinates", row.ks_coordinates}, {"ks_radius", row.ks_radius}});
  return j;
}

struct ScalingTestOptions {
  std::uint64_t seed = 1;
  double h = 1e-3;
  unsigned threads = 1;
  double threshold = 0.04;
};

// Compares X_eps(t) with eps^space_exp X_1(eps^-time_exp t): n paths of each,
// both started at 0, independent streams ([0, n) and [n, 2n)). Reports the
// per-coordinate and radial two-sample KS distances at each t.
template <int Dim>
ScalingReport scaling_identity_test(const FieldSpec<Dim>& field, double eps, const std::vector<double>& t_points,
                                    std::size_t n, const StableParams& noise, const ScalingTestOptions& opt = {}) {
  if (!(eps > 0.0)) throw std::domain_error("eps must be positive");
  const ScalingExponents exps = exponents(noise.alpha, field.beta);
  ScalingReport report;
  report.eps = eps;
  report.alpha = noise.alpha;
  report.beta = field.beta;
  report.d = Dim;
  report.n = n;
  report.seed = opt.seed;
  report.h = opt.h;
  report.threshold = opt.threshold;
  report.exact_identity = field.exact_power;
  if (!field.exact_power)
    report.warnings.push_back("field '" + field.name + "' is not the model drift; the identity is not exact");
  if (n < 100) {
    report.warnings.push_back("fewer than 100 paths per ensemble; KS distances are not meaningful");
    std::cerr << "warning: scaling identity test with n=" << n << " < 100\n";
  }
  const double time_factor = std::pow(eps, -exps.time_exp);
  const double space_factor = std::pow(eps, exps.space_exp);
  std::vector<double> unit_times;
  for (double t : t_points) unit_times.push_back(t * time_factor);
  const Point<Dim> origin = Point<Dim>::Zero();

  using Marginals = std::vector<Point<Dim>>;
  const auto small = parallel_map<Marginals>(n, opt.threads, [&](std::size_t i) {
    return simulate_marginals<Dim>(field, eps, noise, origin, opt.h, t_points, opt.seed, i);
  });
  const auto unit = parallel_map<Marginals>(n, opt.threads, [&](std::size_t i) {
    return simulate_marginals<Dim>(field, 1.0, noise, origin, opt.h, unit_times, opt.seed, n + i);
  });

  for (std::size_t j = 0; j < t_points.size(); ++j) {
    ScalingRow row;
    row.t = t_points[j];
    for (int c = 0; c < Dim; ++c) {
      std::vector<double> a, b;
      a.reserve(n);
      b.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        a.push_back(small[i][j][c]);
        b.push_back(space_factor * unit[i][j][c]);
      }
      row.ks_coordinates.push_back(stats::ks_two_sample(std::move(a), std::move(b)));
    }
    std::vector<double> ra, rb;
    for (std::size_t i = 0; i < n; ++i) {
      ra.push_back(small[i][j].norm());
      rb.push_back(space_factor * unit[i][j].norm());
    }
    row.ks_radius = stats::ks_two_sample(std::move(ra), std::move(rb));
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace zeronoise
