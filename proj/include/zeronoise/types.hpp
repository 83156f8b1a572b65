#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace zeronoise {

template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;

// Raised when the state of an integration stops being finite or leaves the
// region where the scheme is defined. Carries the model time of failure.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what + " at t=" + std::to_string(time)), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class SingularityError : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

template <int Dim>
Point<Dim> first_basis_vector() {
  Point<Dim> e = Point<Dim>::Zero();
  e[0] = 1.0;
  return e;
}

// Unit direction of x; the first basis vector at the origin.
template <int Dim>
Point<Dim> direction(const Point<Dim>& x) {
  const double r = x.norm();
  if (r == 0.0) return first_basis_vector<Dim>();
  return x / r;
}

// Great-circle distance between two unit vectors. The half-chord form keeps
// full precision for nearby points where acos would not.
template <int Dim>
double geodesic_distance(const Point<Dim>& u, const Point<Dim>& v) {
  const double half_chord = std::min(1.0, 0.5 * (u - v).norm());
  return 2.0 * std::asin(half_chord);
}

template <int Dim>
bool all_finite(const Point<Dim>& x) {
  return x.allFinite();
}

}  // namespace zeronoise
