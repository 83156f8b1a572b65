#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zeronoise/rng.hpp"
#include "zeronoise/stable_noise.hpp"
#include "zeronoise/types.hpp"
#include "zeronoise/vector_fields.hpp"

namespace zeronoise {

// Uniform grid t_k = k h, k = 0..steps.
struct UniformGrid {
  double h = 1e-3;
  std::size_t steps = 0;

  static UniformGrid over(double horizon, double h) {
    if (!(h > 0.0)) throw std::domain_error("grid step h must be positive");
    if (!(horizon >= 0.0)) throw std::domain_error("grid horizon must be nonnegative");
    return {h, static_cast<std::size_t>(std::llround(horizon / h))};
  }

  double time(std::size_t k) const { return static_cast<double>(k) * h; }
  double horizon() const { return time(steps); }

  void validate() const {
    if (!(h > 0.0)) throw std::domain_error("grid step h must be positive");
  }
};

template <int Dim>
struct Trajectory {
  std::vector<double> times;
  std::vector<Point<Dim>> states;
  double epsilon = 0.0;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> stream;
  std::string field_name;
  std::optional<StableParams> noise;
  double h = 0.0;

  std::size_t size() const { return times.size(); }

  std::vector<double> radii() const {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& x : states) out.push_back(x.norm());
    return out;
  }

  std::vector<Point<Dim>> angles() const {
    std::vector<Point<Dim>> out;
    out.reserve(states.size());
    for (const auto& x : states) out.push_back(direction<Dim>(x));
    return out;
  }
};

template <int Dim>
struct ExitRecord {
  double tau = 0.0;
  std::size_t index = 0;
  Point<Dim> state;
  Point<Dim> angle;
  double radius = 0.0;
  double overshoot = 0.0;
};

template <int Dim>
ExitRecord<Dim> make_exit_record(double t, std::size_t index, const Point<Dim>& x, double delta) {
  const double r = x.norm();
  return {t, index, x, direction<Dim>(x), r, r - delta};
}

// First stored index with |X| >= delta, or nullopt when the trajectory never
// gets there.
template <int Dim>
std::optional<ExitRecord<Dim>> first_exit(const Trajectory<Dim>& traj, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("exit radius delta must be positive");
  for (std::size_t k = 0; k < traj.size(); ++k)
    if (traj.states[k].norm() >= delta) return make_exit_record<Dim>(traj.times[k], k, traj.states[k], delta);
  return std::nullopt;
}

// Options shared by the fixed-step integrators.
struct StepOptions {
  // Keep every thinning-th state (the final state is always kept).
  std::size_t thinning = 1;
  // Stop as soon as |X| >= stop_radius; exit detection runs on every step.
  std::optional<double> stop_radius;
};

namespace detail {

template <int Dim>
void check_finite(const Point<Dim>& x, double t) {
  if (!all_finite<Dim>(x)) throw IntegrationError("non-finite state", t);
}

template <int Dim>
class Recorder {
 public:
  Recorder(Trajectory<Dim>& traj, const StepOptions& opt, std::size_t steps) : traj_(traj), opt_(opt) {
    if (opt_.thinning == 0) throw std::domain_error("thinning factor must be at least 1");
    traj_.times.reserve(steps / opt_.thinning + 2);
    traj_.states.reserve(steps / opt_.thinning + 2);
  }

  // Returns false when integration should stop.
  bool operator()(std::size_t k, double t, const Point<Dim>& x, bool last) {
    const bool stop = opt_.stop_radius && x.norm() >= *opt_.stop_radius;
    if (k % opt_.thinning == 0 || last || stop) {
      traj_.times.push_back(t);
      traj_.states.push_back(x);
    }
    return !stop;
  }

 private:
  Trajectory<Dim>& traj_;
  const StepOptions& opt_;
};

}  // namespace detail

// One explicit Euler step with an additive increment. Shared by every
// integrator so that forced and stochastic runs round identically.
template <int Dim>
Point<Dim> euler_step(const FieldSpec<Dim>& field, const Point<Dim>& x, double h, const Point<Dim>& increment) {
  const Point<Dim> drifted = x + field(x) * h;
  return drifted + increment;
}

// Euler-Maruyama for dX = A(X) dt + eps dB_alpha, with exact-in-law stable
// increments. The observer sees (k, t_k, X_k, is_last) and may stop the run.
template <int Dim, class Observer>
void euler_maruyama(const FieldSpec<Dim>& field, double eps, const StableParams& noise, const Point<Dim>& x0,
                    const UniformGrid& grid, RandomStream& rng, Observer&& observer) {
  grid.validate();
  if (!(eps >= 0.0)) throw std::domain_error("noise amplitude eps must be nonnegative");
  if (eps > 0.0) noise.validate();
  Point<Dim> x = x0;
  detail::check_finite<Dim>(x, 0.0);
  if (!observer(std::size_t{0}, 0.0, x, grid.steps == 0)) return;
  const double h = grid.h;
  for (std::size_t k = 1; k <= grid.steps; ++k) {
    const Point<Dim> dB = eps > 0.0 ? Point<Dim>(eps * sample_increment<Dim>(noise, h, rng))
                                    : Point<Dim>(Point<Dim>::Zero());
    x = euler_step(field, x, h, dB);
    const double t = grid.time(k);
    detail::check_finite<Dim>(x, t);
    if (!observer(k, t, x, k == grid.steps)) return;
  }
}

template <int Dim>
Trajectory<Dim> integrate_sde(const FieldSpec<Dim>& field, double eps, const StableParams& noise,
                              const Point<Dim>& x0, const UniformGrid& grid, std::uint64_t seed,
                              std::uint64_t stream, const StepOptions& opt = {}) {
  Trajectory<Dim> traj;
  traj.epsilon = eps;
  traj.seed = seed;
  traj.stream = stream;
  traj.field_name = field.name;
  traj.noise = noise;
  traj.h = grid.h;
  RandomStream rng(seed, stream);
  detail::Recorder<Dim> rec(traj, opt, grid.steps);
  euler_maruyama<Dim>(field, eps, noise, x0, grid, rng, rec);
  return traj;
}

// Runs until the first grid time with |X| >= delta, checking every step, and
// returns the exit record (nullopt if the horizon is reached first).
template <int Dim>
std::optional<ExitRecord<Dim>> simulate_exit(const FieldSpec<Dim>& field, double eps, const StableParams& noise,
                                             const Point<Dim>& x0, const UniformGrid& grid, double delta,
                                             std::uint64_t seed, std::uint64_t stream) {
  if (!(delta > 0.0)) throw std::domain_error("exit radius delta must be positive");
  RandomStream rng(seed, stream);
  std::optional<ExitRecord<Dim>> out;
  euler_maruyama<Dim>(field, eps, noise, x0, grid, rng,
                      [&](std::size_t k, double t, const Point<Dim>& x, bool) {
                        if (x.norm() >= delta) {
                          out = make_exit_record<Dim>(t, k, x, delta);
                          return false;
                        }
                        return true;
                      });
  return out;
}

// Classical RK4 on dX = A(X) dt from x0 != 0. Coming within
// singular_fraction * |x0| of the origin is treated as reaching it: near a
// non-Lipschitz origin RK4 stalls at a spurious radius of order h^2.
template <int Dim>
Trajectory<Dim> integrate_ode(const FieldSpec<Dim>& field, const Point<Dim>& x0, const UniformGrid& grid,
                              const StepOptions& opt = {}, double singular_fraction = 1e-6) {
  grid.validate();
  if (x0.norm() == 0.0) throw std::domain_error("ODE start must be away from the origin");
  const double singular_radius = singular_fraction * x0.norm();
  Trajectory<Dim> traj;
  traj.field_name = field.name;
  traj.h = grid.h;
  detail::Recorder<Dim> rec(traj, opt, grid.steps);
  Point<Dim> x = x0;
  if (!rec(0, 0.0, x, grid.steps == 0)) return traj;
  const double h = grid.h;
  for (std::size_t k = 1; k <= grid.steps; ++k) {
    const Point<Dim> k1 = field(x);
    const Point<Dim> k2 = field(x + 0.5 * h * k1);
    const Point<Dim> k3 = field(x + 0.5 * h * k2);
    const Point<Dim> k4 = field(x + h * k3);
    const Point<Dim> prev = x;
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t = grid.time(k);
    detail::check_finite<Dim>(x, t);
    // A step can jump across the origin without landing near it.
    const Point<Dim> step = x - prev;
    const double s = step.squaredNorm() > 0.0 ? std::clamp(-prev.dot(step) / step.squaredNorm(), 0.0, 1.0) : 0.0;
    if ((prev + s * step).norm() <= singular_radius)
      throw SingularityError("solution reached the origin (left the Lipschitz region)", t);
    if (!rec(k, t, x, k == grid.steps)) break;
  }
  return traj;
}

template <int Dim>
using Forcing = std::function<Point<Dim>(double)>;

// Right-continuous step function: value_before until the first switch time,
// then the values in turn.
template <int Dim>
struct PiecewiseConstantForcing {
  std::vector<double> switch_times;
  std::vector<Point<Dim>> values;  // values[i] holds on [switch_times[i-1], switch_times[i])

  Point<Dim> operator()(double t) const {
    const auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t);
    return values[static_cast<std::size_t>(it - switch_times.begin())];
  }

  double sup_norm() const {
    double s = 0.0;
    for (const auto& v : values) s = std::max(s, v.norm());
    return s;
  }
};

// Euler scheme for Z(t) = x0 + int_0^t A(Z) ds + xi(t):
//   Z[k+1] = Z[k] + A(Z[k]) h + (xi(t_{k+1}) - xi(t_k)).
template <int Dim>
Trajectory<Dim> integrate_with_forcing(const FieldSpec<Dim>& field, const Forcing<Dim>& xi, const Point<Dim>& x0,
                                       const UniformGrid& grid, const StepOptions& opt = {}) {
  grid.validate();
  if (xi(0.0).norm() != 0.0) throw std::domain_error("forcing must vanish at t = 0");
  Trajectory<Dim> traj;
  traj.field_name = field.name;
  traj.h = grid.h;
  detail::Recorder<Dim> rec(traj, opt, grid.steps);
  Point<Dim> x = x0;
  detail::check_finite<Dim>(x, 0.0);
  if (!rec(0, 0.0, x, grid.steps == 0)) return traj;
  Point<Dim> xi_prev = xi(0.0);
  for (std::size_t k = 1; k <= grid.steps; ++k) {
    const double t = grid.time(k);
    const Point<Dim> xi_next = xi(t);
    x = euler_step(field, x, grid.h, Point<Dim>(xi_next - xi_prev));
    xi_prev = xi_next;
    detail::check_finite<Dim>(x, t);
    if (!rec(k, t, x, k == grid.steps)) break;
  }
  return traj;
}

// Linear interpolation of the stored path at time t (clamped to its span).
template <int Dim>
Point<Dim> interpolate(const Trajectory<Dim>& traj, double t) {
  if (traj.size() == 0) throw std::domain_error("cannot interpolate an empty trajectory");
  if (t <= traj.times.front()) return traj.states.front();
  if (t >= traj.times.back()) return traj.states.back();
  const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
  const auto i = static_cast<std::size_t>(it - traj.times.begin());
  const double w = (t - traj.times[i - 1]) / (traj.times[i] - traj.times[i - 1]);
  return (1.0 - w) * traj.states[i - 1] + w * traj.states[i];
}

// States of one Euler-Maruyama path at the given increasing times, linearly
// interpolated between the bracketing grid points. Nothing else is stored.
template <int Dim>
std::vector<Point<Dim>> simulate_marginals(const FieldSpec<Dim>& field, double eps, const StableParams& noise,
                                           const Point<Dim>& x0, double h, const std::vector<double>& times,
                                           std::uint64_t seed, std::uint64_t stream) {
  if (times.empty()) return {};
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] < 0.0 || (i > 0 && times[i] < times[i - 1]))
      throw std::domain_error("marginal times must be nonnegative and increasing");
  const UniformGrid grid{h, static_cast<std::size_t>(std::ceil(times.back() / h)) + 1};
  std::vector<Point<Dim>> out;
  out.reserve(times.size());
  Point<Dim> prev = x0;
  double prev_t = 0.0;
  RandomStream rng(seed, stream);
  euler_maruyama<Dim>(field, eps, noise, x0, grid, rng, [&](std::size_t, double t, const Point<Dim>& x, bool) {
    while (out.size() < times.size() && times[out.size()] <= t) {
      const double target = times[out.size()];
      const double w = t > prev_t ? (target - prev_t) / (t - prev_t) : 1.0;
      out.push_back((1.0 - w) * prev + w * x);
    }
    prev = x;
    prev_t = t;
    return out.size() < times.size();
  });
  return out;
}

}  // namespace zeronoise
