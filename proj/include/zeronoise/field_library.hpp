#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zeronoise/sde_engine.hpp"
#include "zeronoise/types.hpp"
#include "zeronoise/vector_fields.hpp"

namespace zeronoise {

// Parameters of the named fields. Unused entries are ignored by a given name.
struct FieldConfig {
  std::string name = "model";
  double beta = 0.5;
  double a_const = 1.0;
  // d = 1 profile: a_bar(+1) and a_bar(-1). Default to a_const when unset.
  std::optional<double> a_plus;
  std::optional<double> a_minus;
  // angular-cosine: a_bar(phi) = 1 + amplitude * phi_1.
  double cosine_amplitude = 0.3;
  // custom-table: a_bar sampled on the uniform polar-angle grid [0, 2 pi).
  std::vector<double> table;
  // counterexample.
  int n = 2;
  double r_rad = 1.0;
  double gamma = 0.5;
};

// Unit tangent obtained by rotating x/|x| a quarter turn in the (x1, x2) plane.
template <int Dim>
Point<Dim> quarter_turn(const Point<Dim>& phi) {
  static_assert(Dim >= 2, "rotation needs at least two coordinates");
  Point<Dim> out = Point<Dim>::Zero();
  out[0] = -phi[1];
  out[1] = phi[0];
  return out;
}

template <int Dim>
AngularProfile<Dim> profile_from_config(const FieldConfig& cfg) {
  if constexpr (Dim == 1) {
    const double ap = cfg.a_plus.value_or(cfg.a_const);
    const double am = cfg.a_minus.value_or(cfg.a_const);
    if (!(ap > 0.0 && am > 0.0)) throw std::domain_error("a_plus and a_minus must be positive");
    if (ap == am) return AngularProfile<Dim>(ap);
    return AngularProfile<Dim>([ap, am](const Point<Dim>& phi) { return phi[0] > 0.0 ? ap : am; });
  } else {
    return AngularProfile<Dim>(cfg.a_const);
  }
}

// d = 2 profile from values on a uniform polar-angle grid, periodically
// interpolated.
inline AngularProfile<2> table_profile(std::vector<double> values) {
  if (values.size() < 2) throw std::domain_error("custom table needs at least two values");
  for (double v : values)
    if (!(v > 0.0)) throw std::domain_error("custom table values must be positive");
  return AngularProfile<2>([values = std::move(values)](const Point<2>& phi) {
    double t = std::atan2(phi[1], phi[0]);
    if (t < 0.0) t += 2.0 * std::numbers::pi;
    const double pos = t / (2.0 * std::numbers::pi) * static_cast<double>(values.size());
    const auto i = static_cast<std::size_t>(pos) % values.size();
    const double w = pos - std::floor(pos);
    return (1.0 - w) * values[i] + w * values[(i + 1) % values.size()];
  });
}

// x^beta plus a rotation of size coef * r^(beta + gamma): satisfies the
// tangential decay condition at 0 with constant |coef|.
template <int Dim>
FieldSpec<Dim> rotating_power_field(double beta, double gamma, double coef) {
  FieldSpec<Dim> f;
  f.name = "rotating-power";
  f.beta = beta;
  f.gamma = gamma;
  f.asymptotics_at_zero = true;
  f.asymptotics_at_infinity = false;
  f.tangential_constant = std::abs(coef);
  f.drift = [beta, gamma, coef](const Point<Dim>& x) -> Point<Dim> {
    const double r = x.norm();
    if (r == 0.0) return Point<Dim>::Zero();
    const Point<Dim> phi = x / r;
    return radial_power(r, beta) * phi + coef * std::pow(r, beta + gamma) * quarter_turn<Dim>(phi);
  };
  return f;
}

// Same radial part, but the rotation scales like r^(beta - gamma) while
// gamma is still declared: the tangential condition at 0 fails.
template <int Dim>
FieldSpec<Dim> broken_tangential_field(double beta, double gamma) {
  FieldSpec<Dim> f = rotating_power_field<Dim>(beta, gamma, 1.0);
  f.name = "broken-tangential";
  f.drift = [beta, gamma](const Point<Dim>& x) -> Point<Dim> {
    const double r = x.norm();
    if (r == 0.0) return Point<Dim>::Zero();
    const Point<Dim> phi = x / r;
    return radial_power(r, beta) * phi + std::pow(r, beta - gamma) * quarter_turn<Dim>(phi);
  };
  return f;
}

// Bounded-trajectory construction in d = 2.
//
// Radial part r^beta phi for r >= r_rad (linear inside). On the annulus
// n <= r <= n+1 a rotation
//   A_tan = r^beta (k - (gain/2) sin(2 (theta - k ln(r/n)))) phi_perp,
//   k = pi / ln((n+1)/n),
// turns the polar angle by exactly pi while the radius climbs from n to n+1,
// i.e. over the time sigma = ((n+1)^(1-beta) - n^(1-beta)) / (1-beta). The
// sine term pulls theta onto the spiral theta = k ln(r/n) (mod pi) and
// vanishes on it. The forcing alternates between (0,0) and (1,0), bringing the
// orbit from (-(n+1),0) back to (-n,0) and from (n+1,0) back to (n,0).
struct Counterexample {
  FieldSpec<2> field;
  PiecewiseConstantForcing<2> forcing;
  double sigma = 0.0;
  Point<2> start;
};

inline double counterexample_sigma(int n, double beta) {
  return (std::pow(n + 1.0, 1.0 - beta) - std::pow(static_cast<double>(n), 1.0 - beta)) / (1.0 - beta);
}

inline FieldSpec<2> counterexample_field(int n, double beta, double r_rad, double steering_gain = 20.0) {
  if (n < 1) throw std::domain_error("counterexample needs n >= 1");
  if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("counterexample needs beta in (0, 1)");
  if (!(r_rad > 0.0 && r_rad <= n)) throw std::domain_error("counterexample needs 0 < R_rad <= n");
  const double inner = n;
  const double outer = n + 1.0;
  const double k = std::numbers::pi / std::log(outer / inner);
  FieldSpec<2> f;
  f.name = "counterexample";
  f.beta = beta;
  f.gamma = 1.0;
  f.asymptotics_at_zero = false;
  f.asymptotics_at_infinity = true;
  f.tangential_constant = 0.0;
  f.drift = [=](const Point<2>& x) -> Point<2> {
    const double r = x.norm();
    if (r == 0.0) return Point<2>::Zero();
    const Point<2> phi = x / r;
    const double radial = r >= r_rad ? std::pow(r, beta) : std::pow(r_rad, beta) * r / r_rad;
    Point<2> out = radial * phi;
    if (r >= inner && r <= outer) {
      const double theta = std::atan2(phi[1], phi[0]);
      const double spiral = k * std::log(r / inner);
      const double speed = k - 0.5 * steering_gain * std::sin(2.0 * (theta - spiral));
      out += std::pow(r, beta) * speed * quarter_turn<2>(phi);
    }
    return out;
  };
  return f;
}

// Builds the pair for start (n, 0) on the given grid. The forcing switches at
// the first grid time the orbit reaches radius n+1; the radial flow r' = r^beta
// expands perturbations, so switch times fixed in advance would let rounding
// errors grow geometrically. The returned forcing is an ordinary function of
// time: integrate_with_forcing on the same grid reproduces the orbit exactly.
inline Counterexample counterexample_pair(int n, double beta, double r_rad, const UniformGrid& grid,
                                          double steering_gain = 20.0) {
  grid.validate();
  Counterexample out;
  out.field = counterexample_field(n, beta, r_rad, steering_gain);
  out.sigma = counterexample_sigma(n, beta);
  out.start = Point<2>(n, 0.0);
  const Point<2> off = Point<2>::Zero();
  const Point<2> on(1.0, 0.0);
  out.forcing.values.push_back(off);
  Point<2> x = out.start;
  bool is_on = false;
  double last_switch = 0.0;
  for (std::size_t k = 1; k <= grid.steps; ++k) {
    const double t = grid.time(k);
    const Point<2> drifted = euler_step<2>(out.field, x, grid.h, Point<2>::Zero());
    if (drifted.norm() >= n + 1.0 && t - last_switch > 0.5 * out.sigma) {
      const Point<2> jump = is_on ? Point<2>(off - on) : Point<2>(on - off);
      is_on = !is_on;
      out.forcing.switch_times.push_back(t);
      out.forcing.values.push_back(is_on ? on : off);
      last_switch = t;
      x = euler_step<2>(out.field, x, grid.h, jump);
    } else {
      x = drifted;
    }
  }
  return out;
}

template <int Dim>
FieldSpec<Dim> make_field(const FieldConfig& cfg) {
  FieldSpec<Dim> f;
  if (cfg.name == "model") {
    f = model_field<Dim>(profile_from_config<Dim>(cfg), cfg.beta);
  } else if (cfg.name == "sign1d") {
    if constexpr (Dim != 1) {
      throw std::domain_error("field 'sign1d' is one-dimensional");
    } else {
      f = truncated_power_field<1>(profile_from_config<1>(cfg), cfg.beta);
    }
  } else if (cfg.name == "truncated-power") {
    f = truncated_power_field<Dim>(profile_from_config<Dim>(cfg), cfg.beta);
  } else if (cfg.name == "angular-cosine") {
    const double amp = cfg.cosine_amplitude;
    if (!(std::abs(amp) < 1.0)) throw std::domain_error("cosine amplitude must be below 1 in magnitude");
    f = model_field<Dim>(AngularProfile<Dim>([amp](const Point<Dim>& phi) { return 1.0 + amp * phi[0]; }),
                         cfg.beta);
  } else if (cfg.name == "custom-table") {
    if constexpr (Dim == 2) {
      f = truncated_power_field<2>(table_profile(cfg.table), cfg.beta);
    } else if constexpr (Dim == 1) {
      if (cfg.table.size() != 2) throw std::domain_error("d = 1 custom table holds a_bar(+1), a_bar(-1)");
      FieldConfig pm = cfg;
      pm.a_plus = cfg.table[0];
      pm.a_minus = cfg.table[1];
      f = truncated_power_field<1>(profile_from_config<1>(pm), cfg.beta);
    } else {
      throw std::domain_error("custom-table fields are available for d = 1, 2");
    }
  } else if (cfg.name == "rotating-power") {
    if constexpr (Dim >= 2) f = rotating_power_field<Dim>(cfg.beta, cfg.gamma, 1.0);
    else throw std::domain_error("rotating-power needs d >= 2");
  } else if (cfg.name == "broken-tangential") {
    if constexpr (Dim >= 2) f = broken_tangential_field<Dim>(cfg.beta, cfg.gamma);
    else throw std::domain_error("broken-tangential needs d >= 2");
  } else if (cfg.name == "counterexample") {
    if constexpr (Dim == 2) f = counterexample_field(cfg.n, cfg.beta, cfg.r_rad);
    else throw std::domain_error("counterexample field is two-dimensional");
  } else {
    throw std::domain_error("unknown field '" + cfg.name + "'");
  }
  f.name = cfg.name;
  f.validate();
  return f;
}

inline const std::vector<std::string>& field_names() {
  static const std::vector<std::string> names{"model",          "sign1d",         "truncated-power",
                                              "angular-cosine", "custom-table",   "rotating-power",
                                              "broken-tangential", "counterexample"};
  return names;
}

}  // namespace zeronoise
