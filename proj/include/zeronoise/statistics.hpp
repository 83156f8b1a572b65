#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace zeronoise::stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("correlation needs paired samples");
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Linear-interpolation quantile of an unsorted sample, q in [0, 1].
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|; ties are stepped
// over together so that atoms shared by both samples cancel.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS distance needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// One-sample KS distance against a continuous CDF.
inline double ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw std::invalid_argument("KS distance needs a nonempty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// 1-Wasserstein distance between two empirical laws on the line:
// the integral of |F_a - F_b|.
inline double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("Wasserstein distance needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double prev = std::min(a.front(), b.front());
  double total = 0.0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) x = a[i];
    else x = b[j];
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (x - prev);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    prev = x;
  }
  return total;
}

// Polar angle mapped to [0, 1).
inline double unit_turn(double theta) {
  double u = theta / (2.0 * std::numbers::pi);
  u -= std::floor(u);
  return u >= 1.0 ? 0.0 : u;
}

// 1-Wasserstein distance on the circle of circumference 2 pi between two
// empirical angle laws. With D = F_a - F_b on [0, 1),
//   W1 = 2 pi * min_c int_0^1 |D(u) - c| du,
// the minimum being attained at a length-weighted median of D.
inline double circular_wasserstein1(const std::vector<double>& theta_a, const std::vector<double>& theta_b) {
  if (theta_a.empty() || theta_b.empty()) throw std::invalid_argument("circular W1 needs two nonempty samples");
  std::vector<std::pair<double, double>> events;  // (position, jump of D)
  events.reserve(theta_a.size() + theta_b.size());
  const double wa = 1.0 / static_cast<double>(theta_a.size());
  const double wb = 1.0 / static_cast<double>(theta_b.size());
  for (double t : theta_a) events.emplace_back(unit_turn(t), wa);
  for (double t : theta_b) events.emplace_back(unit_turn(t), -wb);
  std::sort(events.begin(), events.end());
  // Segments [u_k, u_{k+1}) carry constant D; the first segment [0, u_0) has D = 0.
  std::vector<std::pair<double, double>> segments;  // (D value, length)
  double level = 0.0;
  double pos = 0.0;
  for (const auto& [u, jump] : events) {
    if (u > pos) segments.emplace_back(level, u - pos);
    level += jump;
    pos = u;
  }
  if (pos < 1.0) segments.emplace_back(level, 1.0 - pos);
  std::vector<std::pair<double, double>> sorted = segments;
  std::sort(sorted.begin(), sorted.end());
  double acc = 0.0;
  double median = sorted.front().first;
  for (const auto& [value, length] : sorted) {
    acc += length;
    median = value;
    if (acc >= 0.5) break;
  }
  double total = 0.0;
  for (const auto& [value, length] : segments) total += std::abs(value - median) * length;
  return 2.0 * std::numbers::pi * total;
}

// Binomial standard error of a proportion.
inline double proportion_se(double p, std::size_t n) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace zeronoise::stats
