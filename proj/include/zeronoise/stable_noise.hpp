#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "zeronoise/rng.hpp"
#include "zeronoise/types.hpp"

namespace zeronoise {

// Law of the driving noise B_alpha: isotropic, symmetric, with
//   E exp(i <z, B(t)>) = exp(-c |z|^alpha t).
// c multiplies the characteristic exponent; it is not a standard deviation.
// For alpha = 2 the increment over dt is N(0, 2 c dt I).
struct StableParams {
  double alpha = 2.0;
  double c = 1.0;
  int d = 1;

  void validate() const {
    if (!(alpha > 1.0 && alpha <= 2.0))
      throw std::domain_error("stable index alpha must lie in (1, 2], got " + std::to_string(alpha));
    if (!(c > 0.0)) throw std::domain_error("stable scale c must be positive");
    if (d < 1) throw std::domain_error("dimension d must be at least 1");
  }
};

// Positive stable variable S with E exp(-lambda S) = exp(-lambda^a), 0 < a < 1,
// by Kanter's representation S = (K(U) / E)^((1-a)/a) with U ~ U(0, pi) and
// E ~ Exp(1), where
//   K(u) = (sin(a u) / sin u)^(1/(1-a)) * sin((1-a) u) / sin(a u).
// Evaluated in logs so that a close to 1 does not overflow.
inline double sample_positive_stable(double a, RandomStream& rng) {
  if (!(a > 0.0 && a < 1.0)) throw std::domain_error("positive stable index must lie in (0, 1)");
  const double u = std::numbers::pi * rng.uniform();
  const double e = rng.exponential();
  const double log_k = (std::log(std::sin(a * u)) - std::log(std::sin(u))) / (1.0 - a) +
                       std::log(std::sin((1.0 - a) * u)) - std::log(std::sin(a * u));
  return std::exp((1.0 - a) / a * (log_k - std::log(e)));
}

// Increment B(t + dt) - B(t).
//
// Gaussian subordination: X = G sqrt(S) with G ~ N(0, I_d) and S positive
// (alpha/2)-stable. Conditionally on S, E exp(i<z,X>) = exp(-S |z|^2 / 2), so
//   E exp(i<z,X>) = E exp(-lambda S),  lambda = |z|^2 / 2.
// Taking S = kappa^(2/alpha) S1 with S1 standard (Laplace exp(-lambda^(alpha/2)))
// gives exp(-kappa (|z|^2/2)^(alpha/2)) = exp(-kappa 2^(-alpha/2) |z|^alpha),
// which equals exp(-c |z|^alpha dt) for kappa = c dt 2^(alpha/2).
// At alpha = 2 the subordinator is the constant kappa = 2 c dt.
template <int Dim>
Point<Dim> sample_increment(const StableParams& params, double dt, RandomStream& rng) {
  params.validate();
  if (params.d != Dim)
    throw std::domain_error("StableParams.d does not match the point dimension");
  if (!(dt > 0.0)) throw std::domain_error("increment length dt must be positive");
  Point<Dim> g;
  for (int i = 0; i < Dim; ++i) g[i] = rng.gaussian();
  if (params.alpha == 2.0) return g * std::sqrt(2.0 * params.c * dt);
  const double a = 0.5 * params.alpha;
  const double kappa = params.c * dt * std::pow(2.0, a);
  const double s = std::pow(kappa, 1.0 / a) * sample_positive_stable(a, rng);
  return g * std::sqrt(s);
}

template <int Dim>
struct NoisePath {
  StableParams params;
  std::vector<double> times;
  std::vector<Point<Dim>> increments;  // increments[k] covers [times[k], times[k+1]]
  std::vector<Point<Dim>> values;      // values[k] = B(times[k]), values[0] = 0
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty() || grid.front() != 0.0) throw std::domain_error("time grid must start at 0");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw std::domain_error("time grid must be strictly increasing");
}

template <int Dim>
NoisePath<Dim> sample_path(const StableParams& params, const std::vector<double>& grid,
                           std::uint64_t seed, std::uint64_t stream) {
  params.validate();
  check_grid(grid);
  RandomStream rng(seed, stream);
  NoisePath<Dim> path{params, grid, {}, {}, seed, stream};
  path.increments.reserve(grid.size() - 1);
  path.values.reserve(grid.size());
  path.values.push_back(Point<Dim>::Zero());
  for (std::size_t k = 1; k < grid.size(); ++k) {
    path.increments.push_back(sample_increment<Dim>(params, grid[k] - grid[k - 1], rng));
    path.values.push_back(path.values.back() + path.increments.back());
  }
  return path;
}

// sup |B(t)| / t^(1/alpha') over each full dyadic window [2^k, 2^(k+1)] with
// 2^k >= first grid step, in increasing k. The ratio tends to 0 a.s. for any
// alpha' < alpha, so the window maxima trend downward.
template <int Dim>
std::vector<double> khintchine_window_maxima(const NoisePath<Dim>& path, double alpha_prime) {
  if (!(alpha_prime > 1.0 && alpha_prime < path.params.alpha))
    throw std::domain_error("alpha' must lie in (1, alpha); the statistic diverges otherwise");
  std::vector<double> maxima;
  if (path.times.size() < 2) return maxima;
  const double horizon = path.times.back();
  const double exponent = 1.0 / alpha_prime;
  int k = static_cast<int>(std::ceil(std::log2(path.times[1])));
  std::size_t idx = 1;
  for (; std::ldexp(1.0, k + 1) <= horizon; ++k) {
    const double lo = std::ldexp(1.0, k);
    const double hi = std::ldexp(1.0, k + 1);
    while (idx < path.times.size() && path.times[idx] < lo) ++idx;
    double best = 0.0;
    std::size_t j = idx;
    for (; j < path.times.size() && path.times[j] <= hi; ++j)
      best = std::max(best, path.values[j].norm() / std::pow(path.times[j], exponent));
    maxima.push_back(best);
  }
  return maxima;
}

template <int Dim>
double khintchine_statistic(const NoisePath<Dim>& path, double alpha_prime) {
  double best = 0.0;
  for (double m : khintchine_window_maxima(path, alpha_prime)) best = std::max(best, m);
  return best;
}

}  // namespace zeronoise
