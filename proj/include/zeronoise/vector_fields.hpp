#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zeronoise/types.hpp"

namespace zeronoise {

// x^beta := |x|^(beta-1) x, with 0^beta := 0 for every beta.
template <int Dim>
Point<Dim> power_map(const Point<Dim>& x, double beta) {
  const double r = x.norm();
  if (r == 0.0) return Point<Dim>::Zero();
  return x * std::pow(r, beta - 1.0);
}

template <int Dim>
struct PolarPoint {
  double r = 0.0;
  Point<Dim> phi = first_basis_vector<Dim>();
};

template <int Dim>
PolarPoint<Dim> to_polar(const Point<Dim>& x) {
  return {x.norm(), direction<Dim>(x)};
}

// Angle grid used to check angular profiles for positivity: the uniform
// circle in d = 2, {-1, +1} in d = 1, and a Fibonacci sphere otherwise.
template <int Dim>
std::vector<Point<Dim>> angle_grid(int count) {
  std::vector<Point<Dim>> out;
  if constexpr (Dim == 1) {
    out.push_back(Point<Dim>::Constant(1.0));
    out.push_back(Point<Dim>::Constant(-1.0));
  } else if constexpr (Dim == 2) {
    for (int i = 0; i < count; ++i) {
      const double t = 2.0 * std::numbers::pi * i / count;
      out.push_back(Point<Dim>(std::cos(t), std::sin(t)));
    }
  } else {
    // Points spread on S^2 lifted into the first three coordinates.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / count;
      const double rho = std::sqrt(1.0 - z * z);
      Point<Dim> p = Point<Dim>::Zero();
      p[0] = rho * std::cos(golden * i);
      p[1] = rho * std::sin(golden * i);
      p[2] = z;
      out.push_back(p);
    }
  }
  return out;
}

// A positive function on the unit sphere. In d = 2 non-constant profiles are
// served from a dense uniform table in the polar angle (linear interpolation),
// so the per-step cost does not depend on the callable.
template <int Dim>
class AngularProfile {
 public:
  using Fn = std::function<double(const Point<Dim>&)>;
  static constexpr int kTableSize = 8192;

  AngularProfile() : AngularProfile(1.0) {}

  explicit AngularProfile(double constant) : constant_(constant) {
    if (!(constant > 0.0)) throw std::domain_error("angular profile must be positive");
  }

  explicit AngularProfile(Fn fn) : fn_(std::move(fn)) {
    for (const auto& phi : angle_grid<Dim>(720))
      if (!((*fn_)(phi) > 0.0)) throw std::domain_error("angular profile is not positive on the angle grid");
    if constexpr (Dim == 2) {
      table_ = std::make_shared<std::vector<double>>(kTableSize + 1);
      for (int i = 0; i <= kTableSize; ++i) {
        const double t = 2.0 * std::numbers::pi * i / kTableSize;
        (*table_)[i] = (*fn_)(Point<Dim>(std::cos(t), std::sin(t)));
      }
    }
  }

  bool is_constant() const { return !fn_; }

  double operator()(const Point<Dim>& phi) const {
    if (!fn_) return constant_;
    if constexpr (Dim == 2) {
      double t = std::atan2(phi[1], phi[0]);
      if (t < 0.0) t += 2.0 * std::numbers::pi;
      const double pos = t * (kTableSize / (2.0 * std::numbers::pi));
      const int i = std::min(static_cast<int>(pos), kTableSize - 1);
      const double w = pos - i;
      const auto& tab = *table_;
      return (1.0 - w) * tab[i] + w * tab[i + 1];
    } else {
      return (*fn_)(phi);
    }
  }

  // Exact value of the underlying callable, bypassing the table.
  double exact(const Point<Dim>& phi) const { return fn_ ? (*fn_)(phi) : constant_; }

 private:
  double constant_ = 1.0;
  std::optional<Fn> fn_;
  std::shared_ptr<std::vector<double>> table_;
};

// Drift field together with its declared power asymptotics
//   A_rad(x) = a(x) r^beta phi,   a(x) -> a_bar(phi),
// at the origin and/or at infinity, and the tangential decay margin gamma.
template <int Dim>
struct FieldSpec {
  std::string name;
  std::function<Point<Dim>(const Point<Dim>&)> drift;
  double beta = 0.5;
  double gamma = 0.5;
  AngularProfile<Dim> a_bar;
  bool asymptotics_at_zero = true;
  bool asymptotics_at_infinity = false;
  // Constant C in the declared bound sup_{|y|=r} |A_tan(y)| <= C r^(beta +- gamma).
  double tangential_constant = 1.0;
  // Exactly a_bar(phi) r^beta phi everywhere (the model equation's drift).
  bool exact_power = false;

  Point<Dim> operator()(const Point<Dim>& x) const { return drift(x); }

  void validate() const {
    if (!drift) throw std::domain_error("field '" + name + "' has no drift");
    if (!(std::abs(beta) < 1.0)) throw std::domain_error("field power index must satisfy |beta| < 1");
    if (!(gamma > 0.0)) throw std::domain_error("tangential margin gamma must be positive");
    if (drift(Point<Dim>::Zero()).norm() != 0.0)
      throw std::domain_error("field '" + name + "' must vanish at the origin");
  }
};

template <int Dim>
struct Decomposition {
  Point<Dim> radial;
  Point<Dim> tangential;
};

template <int Dim>
Decomposition<Dim> decompose(const Point<Dim>& value, const Point<Dim>& x) {
  const double r = x.norm();
  if (r == 0.0) throw std::domain_error("radial/tangential split is undefined at the origin");
  const Point<Dim> phi = x / r;
  const Point<Dim> radial = value.dot(phi) * phi;
  return {radial, value - radial};
}

template <int Dim>
Decomposition<Dim> decompose(const FieldSpec<Dim>& field, const Point<Dim>& x) {
  return decompose<Dim>(field(x), x);
}

// Radius below which a negative power index is frozen, so that the drift
// stays finite near the origin.
inline constexpr double kMinDriftRadius = 1e-8;

inline double radial_power(double r, double beta) {
  if (r == 0.0) return 0.0;
  if (beta < 0.0 && r < kMinDriftRadius) return std::pow(kMinDriftRadius, beta);
  return std::pow(r, beta);
}

// Model drift a_bar(phi) r^beta phi: purely radial, with exact asymptotics at
// both ends.
template <int Dim>
FieldSpec<Dim> model_field(AngularProfile<Dim> a_bar, double beta) {
  if (!(std::abs(beta) < 1.0)) throw std::domain_error("model field requires |beta| < 1");
  FieldSpec<Dim> f;
  f.name = "model";
  f.exact_power = true;
  f.beta = beta;
  f.gamma = 1.0;
  f.a_bar = a_bar;
  f.asymptotics_at_zero = true;
  f.asymptotics_at_infinity = true;
  f.tangential_constant = 0.0;
  f.drift = [a_bar, beta](const Point<Dim>& x) -> Point<Dim> {
    const double r = x.norm();
    if (r == 0.0) return Point<Dim>::Zero();
    const Point<Dim> phi = x / r;
    return a_bar(phi) * radial_power(r, beta) * phi;
  };
  return f;
}

// a_bar(phi) r^beta phi for r <= 1, continued as a_bar(phi) (1 + beta (r-1)) phi
// outside the unit ball. The continuation matches value and slope at r = 1 and
// grows linearly, which keeps the field Lipschitz away from the origin.
template <int Dim>
FieldSpec<Dim> truncated_power_field(AngularProfile<Dim> a_bar, double beta) {
  if (!(std::abs(beta) < 1.0)) throw std::domain_error("truncated field requires |beta| < 1");
  FieldSpec<Dim> f;
  f.name = "truncated-power";
  f.beta = beta;
  f.gamma = 1.0;
  f.a_bar = a_bar;
  f.asymptotics_at_zero = true;
  f.asymptotics_at_infinity = false;
  f.tangential_constant = 0.0;
  f.drift = [a_bar, beta](const Point<Dim>& x) -> Point<Dim> {
    const double r = x.norm();
    if (r == 0.0) return Point<Dim>::Zero();
    const Point<Dim> phi = x / r;
    const double g = r <= 1.0 ? radial_power(r, beta) : 1.0 + beta * (r - 1.0);
    return a_bar(phi) * g * phi;
  };
  return f;
}

struct AsymptoticRow {
  double r = 0.0;
  double radial_ratio = 0.0;      // sup_phi |<A,phi> - a_bar r^beta| / (a_bar r^beta)
  double tangential_ratio = 0.0;  // sup_phi |A_tan| / r^(beta +- gamma)
};

struct AsymptoticRegimeReport {
  bool at_zero = true;
  std::vector<AsymptoticRow> rows;
  double worst_radial_ratio = 0.0;
  double limit_radial_ratio = 0.0;  // at the radius closest to the limit point
  double worst_tangential_ratio = 0.0;
  bool radial_ok = true;
  bool tangential_ok = true;
};

struct AsymptoticReport {
  std::vector<AsymptoticRegimeReport> regimes;
  bool passed = true;
};

// Checks the declared asymptotics on a finite grid of radii and angles.
// Radial: the relative deviation from a_bar(phi) r^beta at the radius nearest
// the limit point must not exceed radial_tolerance. Tangential: the ratio
// sup |A_tan| / r^(beta+gamma) (at 0) or / r^(beta-gamma) (at infinity) must
// stay below the declared constant on the whole grid.
template <int Dim>
AsymptoticReport asymptotic_validate(const FieldSpec<Dim>& field, std::vector<double> radii,
                                     const std::vector<Point<Dim>>& angles,
                                     double radial_tolerance = 1e-2) {
  for (double r : radii)
    if (!(r > 0.0)) throw std::domain_error("validation radii must be positive");
  std::sort(radii.begin(), radii.end());
  AsymptoticReport report;
  auto run = [&](bool at_zero) {
    AsymptoticRegimeReport reg;
    reg.at_zero = at_zero;
    const double tan_exp = at_zero ? field.beta + field.gamma : field.beta - field.gamma;
    for (double r : radii) {
      AsymptoticRow row{r, 0.0, 0.0};
      for (const auto& phi : angles) {
        const Point<Dim> x = r * phi;
        const auto parts = decompose(field, x);
        const double expected = field.a_bar(phi) * std::pow(r, field.beta);
        const double along = field(x).dot(phi);
        row.radial_ratio = std::max(row.radial_ratio, std::abs(along - expected) / expected);
        // Tangential parts at the rounding level of the decomposition count as zero.
        const double tan = parts.tangential.norm();
        const double floor = 64.0 * std::numeric_limits<double>::epsilon() * field(x).norm();
        row.tangential_ratio = std::max(row.tangential_ratio, tan <= floor ? 0.0 : tan / std::pow(r, tan_exp));
      }
      reg.worst_radial_ratio = std::max(reg.worst_radial_ratio, row.radial_ratio);
      reg.worst_tangential_ratio = std::max(reg.worst_tangential_ratio, row.tangential_ratio);
      reg.rows.push_back(row);
    }
    if (!reg.rows.empty())
      reg.limit_radial_ratio = at_zero ? reg.rows.front().radial_ratio : reg.rows.back().radial_ratio;
    reg.radial_ok = reg.limit_radial_ratio <= radial_tolerance;
    reg.tangential_ok = reg.worst_tangential_ratio <= field.tangential_constant * (1.0 + 1e-9) + 1e-12;
    report.passed = report.passed && reg.radial_ok && reg.tangential_ok;
    report.regimes.push_back(std::move(reg));
  };
  if (field.asymptotics_at_zero) run(true);
  if (field.asymptotics_at_infinity) run(false);
  return report;
}

}  // namespace zeronoise
