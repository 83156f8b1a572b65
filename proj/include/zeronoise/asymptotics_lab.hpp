#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "zeronoise/ensemble.hpp"
#include "zeronoise/sde_engine.hpp"
#include "zeronoise/statistics.hpp"
#include "zeronoise/types.hpp"
#include "zeronoise/vector_fields.hpp"

namespace zeronoise {

// Solution of dX = a_bar(phi) X^beta dt leaving the origin at time t0 in
// direction phi: (a_bar (1-beta) (t-t0))^(1/(1-beta)) phi for t >= t0, else 0.
template <int Dim>
Point<Dim> closed_form_solution(double a_bar_at_phi, double beta, double t0, const Point<Dim>& phi, double t) {
  if (!(std::abs(beta) < 1.0)) throw std::domain_error("closed form requires |beta| < 1");
  if (t <= t0) return Point<Dim>::Zero();
  return std::pow(a_bar_at_phi * (1.0 - beta) * (t - t0), 1.0 / (1.0 - beta)) * phi;
}

// Radius of the closed form: (r0^(1-beta) + (1-beta) a t)^(1/(1-beta)).
inline double closed_form_radius(double a, double beta, double r0, double t) {
  return std::pow(std::pow(r0, 1.0 - beta) + (1.0 - beta) * a * t, 1.0 / (1.0 - beta));
}

template <int Dim>
struct AngleSampleMeta {
  std::string field;
  double alpha = 2.0;
  double c = 1.0;
  double beta = 0.5;
  double radius = 0.0;  // exit radius R
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t first_stream = 0;
  double h = 0.0;
  double horizon = 0.0;
  std::size_t non_exits = 0;
};

template <int Dim>
struct AngleSample {
  std::vector<Point<Dim>> samples;
  std::vector<double> exit_times;
  AngleSampleMeta<Dim> meta;

  // Polar angles in d = 2.
  std::vector<double> polar_angles() const {
    static_assert(Dim == 2, "polar angles are defined for d = 2");
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(std::atan2(s[1], s[0]));
    return out;
  }

  // Fraction of samples with positive first coordinate.
  double fraction_positive() const {
    if (samples.empty()) return 0.0;
    std::size_t k = 0;
    for (const auto& s : samples) k += s[0] > 0.0;
    return static_cast<double>(k) / static_cast<double>(samples.size());
  }

  std::vector<double> coordinate(int c) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s[c]);
    return out;
  }
};

struct LimitAngleResult {
  // Final direction of the trajectory.
  Eigen::VectorXd phi_hat;
  // Largest geodesic distance between directions in the tail window.
  double cauchy_diag = 0.0;
  std::size_t window_points = 0;
};

// Direction at the final time and the angular spread over the last
// tail_fraction of the time span. Windows with more than max_points states are
// thinned evenly before the pairwise scan.
template <int Dim>
LimitAngleResult limit_angle(const Trajectory<Dim>& traj, double tail_fraction, std::size_t max_points = 3000) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw std::domain_error("tail fraction must lie in (0, 1)");
  if (traj.size() == 0) throw std::domain_error("empty trajectory");
  const double t_end = traj.times.back();
  const double t_lo = t_end - tail_fraction * (t_end - traj.times.front());
  std::vector<Point<Dim>> dirs;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] < t_lo) continue;
    const double r = traj.states[k].norm();
    if (!(r > 0.0)) throw std::domain_error("radius vanishes inside the tail window");
    dirs.push_back(traj.states[k] / r);
  }
  if (dirs.size() > max_points) {
    std::vector<Point<Dim>> thinned;
    const double stride = static_cast<double>(dirs.size() - 1) / static_cast<double>(max_points - 1);
    for (std::size_t i = 0; i < max_points; ++i)
      thinned.push_back(dirs[static_cast<std::size_t>(std::llround(i * stride))]);
    dirs = std::move(thinned);
  }
  LimitAngleResult out;
  out.phi_hat = dirs.back();
  out.window_points = dirs.size();
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (std::size_t j = i + 1; j < dirs.size(); ++j)
      out.cauchy_diag = std::max(out.cauchy_diag, geodesic_distance<Dim>(dirs[i], dirs[j]));
  return out;
}

struct RadialFit {
  double a_bar_hat = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double residual = 0.0;  // max relative deviation of r^(1-beta) from the fitted line
  double intercept = 0.0;
};

// Least-squares line through (t, r(t)^(1-beta)) over [t_lo, t_hi]; the slope
// divided by (1 - beta) estimates a_bar at the limit angle.
template <int Dim>
RadialFit radial_fit(const Trajectory<Dim>& traj, double beta, double t_lo, double t_hi) {
  if (!(t_hi > t_lo)) throw std::domain_error("fit window must have positive length");
  if (!(beta < 1.0)) throw std::domain_error("radial fit requires beta < 1");
  std::vector<double> ts, ys;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    if (t < t_lo || t > t_hi) continue;
    const double r = traj.states[k].norm();
    if (!(r > 0.0)) throw std::domain_error("nonpositive radius inside the fit window");
    ts.push_back(t);
    ys.push_back(std::pow(r, 1.0 - beta));
  }
  if (ts.size() < 2) throw std::domain_error("fit window holds fewer than two states");
  const double mt = stats::mean(ts), my = stats::mean(ys);
  double sty = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sty += (ts[i] - mt) * (ys[i] - my);
    stt += (ts[i] - mt) * (ts[i] - mt);
  }
  RadialFit fit;
  const double slope = sty / stt;
  fit.intercept = my - slope * mt;
  fit.a_bar_hat = slope / (1.0 - beta);
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double line = fit.intercept + slope * ts[i];
    fit.residual = std::max(fit.residual, std::abs(ys[i] - line) / std::abs(line));
  }
  return fit;
}

struct ExitDistributionOptions {
  std::uint64_t seed = 1;
  std::uint64_t first_stream = 0;
  double h = 1e-3;
  unsigned threads = 1;
  // Horizon = margin * (time for the noiseless radius to reach R at the
  // smallest a_bar on the angle grid).
  double horizon_margin = 10.0;
  double max_non_exit_fraction = 0.01;
};

// Exit directions at radius R of the unit-amplitude equation
//   dX = A(X) dt + dB_alpha,  X(0) = 0,
// one path per stream. For large R their law approximates the law of the
// limit angle of X(t)/|X(t)| as t -> infinity.
template <int Dim>
AngleSample<Dim> exit_angle_distribution(const FieldSpec<Dim>& field, const StableParams& noise, double radius,
                                         std::size_t n, const ExitDistributionOptions& opt = {}) {
  noise.validate();
  if (!(radius > 0.0)) throw std::domain_error("exit radius must be positive");
  if (n < 100) throw std::domain_error("exit-angle law needs at least 100 paths");
  double a_min = std::numeric_limits<double>::infinity();
  for (const auto& phi : angle_grid<Dim>(720)) a_min = std::min(a_min, field.a_bar(phi));
  const double t_reach = std::pow(radius, 1.0 - field.beta) / ((1.0 - field.beta) * a_min);
  const double horizon = opt.horizon_margin * t_reach;
  const UniformGrid grid = UniformGrid::over(horizon, opt.h);
  const Point<Dim> origin = Point<Dim>::Zero();
  const auto exits = parallel_map<std::optional<ExitRecord<Dim>>>(n, opt.threads, [&](std::size_t i) {
    return simulate_exit<Dim>(field, 1.0, noise, origin, grid, radius, opt.seed, opt.first_stream + i);
  });
  AngleSample<Dim> out;
  out.meta = {field.name, noise.alpha, noise.c, field.beta, radius, n, opt.seed, opt.first_stream, opt.h,
              grid.horizon(), 0};
  for (const auto& e : exits) {
    if (!e) {
      ++out.meta.non_exits;
      continue;
    }
    out.samples.push_back(e->angle);
    out.exit_times.push_back(e->tau);
  }
  if (static_cast<double>(out.meta.non_exits) > opt.max_non_exit_fraction * static_cast<double>(n))
    throw std::runtime_error(std::to_string(out.meta.non_exits) + " of " + std::to_string(n) +
                             " paths did not reach radius " + std::to_string(radius) +
                             " within the horizon; R and horizon do not match");
  return out;
}

// P(exit at +R before -R | start 0) for the d = 1 diffusion
//   dX = a_+- |X|^beta sign(X) dt + sqrt(2c) dW,
// from the scale function s(x) = int_0^x exp(-int_0^y 2 b(z)/sigma^2 dz) dy,
// sigma^2 = 2c:  p_+ = (s(0) - s(-R)) / (s(R) - s(-R)) = I_- / (I_+ + I_-),
//   I_+- = int_0^R exp(-2 a_+- y^(1+beta) / ((1+beta) sigma^2)) dy.
inline double scale_function_oracle_1d(double a_plus, double a_minus, double beta, double radius, double c = 1.0,
                                       double tolerance = 1e-8) {
  if (!(a_plus > 0.0 && a_minus > 0.0)) throw std::domain_error("a_plus and a_minus must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("oracle requires beta in (0, 1)");
  if (!(radius > 0.0)) throw std::domain_error("oracle radius must be positive");
  const double sigma2 = 2.0 * c;
  auto branch = [&](double a) {
    const auto density = [&](double y) { return std::exp(-2.0 * a * std::pow(y, 1.0 + beta) / ((1.0 + beta) * sigma2)); };
    // Split at the e-folding point of the integrand so both pieces are smooth on scale.
    const double knee = std::min(radius, std::pow((1.0 + beta) * sigma2 / (2.0 * a), 1.0 / (1.0 + beta)));
    double total = 0.0;
    for (auto [lo, hi] : {std::pair{0.0, knee}, std::pair{knee, radius}}) {
      if (hi <= lo) continue;
      double err = 0.0;
      const double v =
          boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, lo, hi, 20, tolerance, &err);
      if (!(err <= tolerance * std::max(1.0, std::abs(v))) || !std::isfinite(v))
        throw std::runtime_error("scale-function quadrature did not converge");
      total += v;
    }
    return total;
  };
  const double i_plus = branch(a_plus);
  const double i_minus = branch(a_minus);
  return i_minus / (i_plus + i_minus);
}

// Polar system
//   dR = a(R, Phi) R^beta dt,   dPhi = b(R, Phi) R^(beta+delta-1) dt,
// with b projected onto the tangent space at Phi.
template <int Dim>
struct PolarSystem {
  std::function<double(double, const Point<Dim>&)> a;
  std::function<Point<Dim>(double, const Point<Dim>&)> b;
  double beta = 0.5;
  double delta = 0.3;

  Point<Dim> tangential_b(double r, const Point<Dim>& phi) const {
    const Point<Dim> v = b(r, phi);
    return v - v.dot(phi) * phi;
  }

  // Induced drift a R^beta phi + b_tan R^(beta+delta) in Cartesian form.
  Point<Dim> cartesian_field(const Point<Dim>& x) const {
    const double r = x.norm();
    if (r == 0.0) return Point<Dim>::Zero();
    const Point<Dim> phi = x / r;
    return a(r, phi) * std::pow(r, beta) * phi + tangential_b(r, phi) * std::pow(r, beta + delta);
  }
};

template <int Dim>
struct PolarSolution {
  // Nodes in the substituted variable w = (r0 + s)^delta, s being the
  // time-changed clock in which R grows at unit speed.
  std::vector<double> w;
  std::vector<double> v;  // R^(1-beta) at the node
  std::vector<double> t;  // physical time at the node
  std::vector<Point<Dim>> phi;
  std::vector<Point<Dim>> dphi_dw;
  std::vector<double> dt_dv;
  double beta = 0.5;
  double delta = 0.3;
  double a_lower = 0.0;  // bounds of a seen on the check grid
  double a_upper = 0.0;
  double max_renormalization = 0.0;

  struct State {
    double r;
    Point<Dim> phi;
  };

  // (R(t), Phi(t)) by inverting the time change between nodes.
  State at(double time) const {
    if (time <= t.front()) return {std::pow(v.front(), 1.0 / (1.0 - beta)), phi.front()};
    if (time > t.back()) throw std::domain_error("time beyond the solved horizon");
    const auto it = std::lower_bound(t.begin(), t.end(), time);
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    // Cubic Hermite t(v) on [v_i, v_{i+1}], solved for v by safeguarded Newton.
    const double v0 = v[i], v1 = v[i + 1], dv = v1 - v0;
    auto hermite = [&](double s, double y0, double y1, double m0, double m1) {
      const double s2 = s * s, s3 = s2 * s;
      return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * m1;
    };
    auto hermite_d = [&](double s, double y0, double y1, double m0, double m1) {
      const double s2 = s * s;
      return (6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * y1 + (3 * s2 - 2 * s) * m1;
    };
    const double m0 = dt_dv[i] * dv, m1 = dt_dv[i + 1] * dv;
    double lo = 0.0, hi = 1.0, s = (time - t[i]) / (t[i + 1] - t[i]);
    for (int iter = 0; iter < 60; ++iter) {
      const double f = hermite(s, t[i], t[i + 1], m0, m1) - time;
      if (f > 0.0) hi = s;
      else lo = s;
      const double df = hermite_d(s, t[i], t[i + 1], m0, m1);
      double next = df > 0.0 ? s - f / df : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - s) < 1e-15) {
        s = next;
        break;
      }
      s = next;
    }
    const double vv = v0 + s * dv;
    const double r = std::pow(vv, 1.0 / (1.0 - beta));
    const double ww = std::pow(r, delta);
    const double dw = w[i + 1] - w[i];
    const double sw = dw > 0.0 ? std::clamp((ww - w[i]) / dw, 0.0, 1.0) : 0.0;
    Point<Dim> p;
    for (int c = 0; c < Dim; ++c)
      p[c] = hermite(sw, phi[i][c], phi[i + 1][c], dphi_dw[i][c] * dw, dphi_dw[i + 1][c] * dw);
    return {r, p / p.norm()};
  }
};

struct PolarSolveOptions {
  std::size_t steps = 4000;
  // Radii and angles at which a is checked for positivity (and bounded).
  int check_angles = 360;
  int check_radii = 200;
};

// Solves the polar system from (r0, phi0) up to time horizon via the time
// change in which R~(s) = r0 + s:
//   dPhi~/ds = (b/a)(r0+s, Phi~) (r0+s)^(delta-1),
// integrated by RK4 in w = (r0+s)^delta (which removes the singularity at
// r0 = 0), and t(s) = int_0^s a^-1 (r0+z)^-beta dz accumulated in
// v = (r0+s)^(1-beta) with the RK4 stage values. For r0 = 0 this is the
// solution that leaves the origin in direction phi0 with R > 0 for t > 0.
template <int Dim>
PolarSolution<Dim> polar_ode_solve(const PolarSystem<Dim>& sys, double r0, const Point<Dim>& phi0, double horizon,
                                   const PolarSolveOptions& opt = {}) {
  const double beta = sys.beta, delta = sys.delta;
  if (!(beta > 0.0 && beta < 1.0 && delta > 0.0 && delta < 1.0))
    throw std::domain_error("polar system requires beta, delta in (0, 1)");
  if (!(r0 >= 0.0)) throw std::domain_error("initial radius must be nonnegative");
  if (!(horizon > 0.0)) throw std::domain_error("horizon must be positive");
  if (std::abs(phi0.norm() - 1.0) > 1e-12) throw std::domain_error("initial angle must be a unit vector");

  // Positivity and bounds of a on a check grid, radii up to the largest
  // radius reachable by the horizon.
  double a_lo = std::numeric_limits<double>::infinity(), a_hi = 0.0;
  const auto angles = angle_grid<Dim>(opt.check_angles);
  auto scan = [&](double r) {
    for (const auto& p : angles) {
      const double val = sys.a(r, p);
      if (!(val > 0.0)) throw std::domain_error("radial rate a is not positive on the check grid");
      a_lo = std::min(a_lo, val);
      a_hi = std::max(a_hi, val);
    }
  };
  scan(r0);
  scan(r0 + 1.0);
  double r_max = closed_form_radius(a_hi, beta, r0, horizon);
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i <= opt.check_radii; ++i) scan(r0 + r_max * i / opt.check_radii);
    r_max = closed_form_radius(a_hi, beta, r0, horizon);
  }

  PolarSolution<Dim> sol;
  sol.beta = beta;
  sol.delta = delta;
  sol.a_lower = a_lo;
  sol.a_upper = a_hi;
  const double w0 = std::pow(r0, delta);
  const double w_end = std::pow(r_max, delta) * 1.05 + 1e-12;
  const double dw = (w_end - w0) / static_cast<double>(opt.steps);

  auto radius_of = [&](double w) { return std::pow(w, 1.0 / delta); };
  auto rhs = [&](double w, const Point<Dim>& p) -> Point<Dim> {
    const double r = radius_of(w);
    return sys.tangential_b(r, p) / (sys.a(r, p) * delta);
  };
  auto push = [&](double w, double t, const Point<Dim>& p) {
    const double r = radius_of(w);
    sol.w.push_back(w);
    sol.v.push_back(std::pow(r, 1.0 - beta));
    sol.t.push_back(t);
    sol.phi.push_back(p);
    sol.dphi_dw.push_back(rhs(w, p));
    sol.dt_dv.push_back(1.0 / (sys.a(r, p) * (1.0 - beta)));
  };

  double w = w0, t = 0.0;
  Point<Dim> p = phi0;
  push(w, t, p);
  for (std::size_t k = 0; t < horizon; ++k) {
    if (k > 20 * opt.steps) throw IntegrationError("polar solver did not reach the horizon", t);
    const double wm = w + 0.5 * dw, w1 = w + dw;
    const Point<Dim> k1 = rhs(w, p);
    const Point<Dim> p2 = p + 0.5 * dw * k1;
    const Point<Dim> k2 = rhs(wm, p2);
    const Point<Dim> p3 = p + 0.5 * dw * k2;
    const Point<Dim> k3 = rhs(wm, p3);
    const Point<Dim> p4 = p + dw * k3;
    const Point<Dim> k4 = rhs(w1, p4);
    // dt = dv / (a (1-beta)), Simpson-type weights on the same stages.
    const double g1 = 1.0 / sys.a(radius_of(w), p);
    const double g2 = 1.0 / sys.a(radius_of(wm), p2);
    const double g3 = 1.0 / sys.a(radius_of(wm), p3);
    const double g4 = 1.0 / sys.a(radius_of(w1), p4);
    const double dv = std::pow(radius_of(w1), 1.0 - beta) - std::pow(radius_of(w), 1.0 - beta);
    t += dv / (1.0 - beta) * (g1 + 2.0 * g2 + 2.0 * g3 + g4) / 6.0;
    p += (dw / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double norm = p.norm();
    sol.max_renormalization = std::max(sol.max_renormalization, std::abs(norm - 1.0));
    p /= norm;
    w = w1;
    if (!std::isfinite(t) || !all_finite<Dim>(p)) throw IntegrationError("polar solver produced non-finite state", t);
    push(w, t, p);
  }
  return sol;
}

}  // namespace zeronoise
