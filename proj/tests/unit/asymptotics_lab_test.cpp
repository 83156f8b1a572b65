#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "zeronoise/asymptotics_lab.hpp"
#include "zeronoise/field_library.hpp"
#include "zeronoise/scaling_lab.hpp"
#include "zeronoise/statistics.hpp"

using namespace zeronoise;

TEST(ClosedForm, HandValues) {
  const Point<2> x = closed_form_solution<2>(1.0, 0.5, 0.0, first_basis_vector<2>(), 1.0);
  EXPECT_NEAR(x[0], 0.25, 1e-15);
  EXPECT_EQ(x[1], 0.0);
  EXPECT_EQ(closed_form_solution<3>(1.0, 0.5, 2.0, first_basis_vector<3>(), 1.5), Point<3>::Zero());
}

TEST(ClosedForm, SolvesTheLimitOde) {
  RandomStream rng(31, 0);
  for (int i = 0; i < 100; ++i) {
    const double t = 0.5 + 3.0 * rng.uniform();
    const double beta = -0.8 + 1.6 * rng.uniform();
    const double a = 0.5 + rng.uniform();
    const double th = 2.0 * std::numbers::pi * rng.uniform();
    const Point<2> phi(std::cos(th), std::sin(th));
    const double dt = 1e-5;
    const Point<2> fd = (closed_form_solution<2>(a, beta, 0.0, phi, t + dt) -
                         closed_form_solution<2>(a, beta, 0.0, phi, t - dt)) /
                        (2.0 * dt);
    const Point<2> x = closed_form_solution<2>(a, beta, 0.0, phi, t);
    const Point<2> rhs = a * std::pow(x.norm(), beta) * phi;
    EXPECT_LT((fd - rhs).norm(), 1e-6 * std::max(1.0, rhs.norm())) << "t=" << t << " beta=" << beta;
  }
}

TEST(ClosedForm, FiniteDifferenceAtTwo) {
  const Point<2> phi(0.6, 0.8);
  const double dt = 1e-5;
  const Point<2> fd =
      (closed_form_solution<2>(1.0, 0.5, 0.0, phi, 2.0 + dt) - closed_form_solution<2>(1.0, 0.5, 0.0, phi, 2.0 - dt)) /
      (2.0 * dt);
  const Point<2> x = closed_form_solution<2>(1.0, 0.5, 0.0, phi, 2.0);
  EXPECT_LT((fd - std::sqrt(x.norm()) * phi).norm(), 1e-6);
}

TEST(LimitAngle, ModelFieldOdeKeepsInitialAngle) {
  const auto f = model_field<2>(AngularProfile<2>([](const Point<2>& p) { return 1.0 + 0.3 * p[0]; }), 0.5);
  const Point<2> x0(0.3, -0.4);
  const auto traj = integrate_ode<2>(f, x0, UniformGrid::over(10.0, 1e-3));
  const auto res = limit_angle(traj, 0.5);
  EXPECT_LT(res.cauchy_diag, 1e-8);
  EXPECT_LT(geodesic_distance<2>(Point<2>(res.phi_hat), Point<2>(x0 / x0.norm())), 1e-10);
}

TEST(LimitAngle, Errors) {
  Trajectory<2> t;
  t.times = {0.0, 1.0, 2.0};
  t.states = {Point<2>(1.0, 0.0), Point<2>::Zero(), Point<2>(1.0, 0.0)};
  EXPECT_THROW(limit_angle(t, 0.9), std::domain_error);
  EXPECT_THROW(limit_angle(t, 1.0), std::domain_error);
  EXPECT_NO_THROW(limit_angle(t, 0.2));
}

TEST(LimitAngle, CounterexampleDoesNotSettle) {
  const auto grid = UniformGrid::over(100.0, 1e-3);
  const auto pair = counterexample_pair(2, 0.5, 1.0, grid);
  const auto traj = integrate_with_forcing<2>(pair.field, Forcing<2>(pair.forcing), pair.start, grid, {10, std::nullopt});
  EXPECT_GT(limit_angle(traj, 0.5).cauchy_diag, 1.0);
}

TEST(RadialFit, ClosedFormRecoversConstant) {
  Trajectory<1> t;
  for (int k = 0; k <= 1000; ++k) {
    const double s = 0.01 * k;
    t.times.push_back(s);
    t.states.push_back(closed_form_solution<1>(1.0, 0.5, 0.0, Point<1>(1.0), s));
  }
  const auto fit = radial_fit(t, 0.5, 1.0, 10.0);
  EXPECT_NEAR(fit.a_bar_hat, 1.0, 1e-6);
  EXPECT_LT(fit.residual, 1e-10);
  EXPECT_THROW(radial_fit(t, 0.5, 0.0, 1.0), std::domain_error);  // r(0) = 0
  EXPECT_THROW(radial_fit(t, 0.5, 2.0, 1.0), std::domain_error);
}

// Fitting a rescaled path over the rescaled window gives the same estimate.
TEST(RadialFit, ScaleConsistent) {
  const auto f = model_field<1>(AngularProfile<1>(1.0), 0.5);
  const auto traj = integrate_sde<1>(f, 1.0, {2.0, 1.0, 1}, Point<1>::Zero(), UniformGrid::over(200.0, 1e-3), 37, 0,
                                     {10, std::nullopt});
  const auto base = radial_fit(traj, 0.5, 100.0, 200.0);
  const double eps = 0.25;
  const auto e = exponents(2.0, 0.5);
  const auto scaled = rescale(traj, eps, e);
  const double tf = std::pow(eps, -e.time_exp);
  const auto fit = radial_fit(scaled, 0.5, 100.0 * tf * (1 - 1e-12), 200.0 * tf * (1 + 1e-12));
  EXPECT_NEAR(fit.a_bar_hat, base.a_bar_hat, 1e-6);
}

TEST(RadialFit, StochasticLongRun) {
  const auto f = model_field<1>(AngularProfile<1>(1.0), 0.5);
  const auto traj = integrate_sde<1>(f, 1.0, {2.0, 1.0, 1}, Point<1>::Zero(), UniformGrid::over(1e4, 1e-3), 41, 0,
                                     {1000, std::nullopt});
  const auto fit = radial_fit(traj, 0.5, 5e3, 1e4);
  EXPECT_GE(fit.a_bar_hat, 0.95);
  EXPECT_LE(fit.a_bar_hat, 1.05);
}

TEST(ScaleOracle, SymmetricIsOneHalf) {
  EXPECT_DOUBLE_EQ(scale_function_oracle_1d(1.0, 1.0, 0.5, 50.0), 0.5);
  EXPECT_DOUBLE_EQ(scale_function_oracle_1d(2.5, 2.5, 0.3, 10.0), 0.5);
}

// Frozen from the oracle's own quadrature.
TEST(ScaleOracle, FrozenAsymmetricValue) {
  EXPECT_NEAR(scale_function_oracle_1d(2.0, 1.0, 0.5, 50.0), 0.6135117904, 1e-9);
}

TEST(ScaleOracle, RadiusStability) {
  EXPECT_LT(std::abs(scale_function_oracle_1d(2.0, 1.0, 0.5, 50.0) - scale_function_oracle_1d(2.0, 1.0, 0.5, 100.0)),
            1e-3);
}

TEST(ScaleOracle, Errors) {
  EXPECT_THROW(scale_function_oracle_1d(0.0, 1.0, 0.5, 50.0), std::domain_error);
  EXPECT_THROW(scale_function_oracle_1d(1.0, 1.0, 1.0, 50.0), std::domain_error);
  EXPECT_THROW(scale_function_oracle_1d(1.0, 1.0, 0.5, -1.0), std::domain_error);
}

namespace {

ExitDistributionOptions exit_opts(std::uint64_t seed) {
  ExitDistributionOptions o;
  o.seed = seed;
  return o;
}

double uniform_circle_cdf(double th) { return (th + std::numbers::pi) / (2.0 * std::numbers::pi); }

}  // namespace

TEST(ExitAngles, OneDimSymmetricSplit) {
  const auto f = model_field<1>(AngularProfile<1>(1.0), 0.5);
  const auto s = exit_angle_distribution<1>(f, {2.0, 1.0, 1}, 50.0, 10000, exit_opts(43));
  EXPECT_EQ(s.meta.non_exits, 0u);
  for (const auto& phi : s.samples) EXPECT_NEAR(phi.norm(), 1.0, 1e-10);
  EXPECT_GE(s.fraction_positive(), 0.485);
  EXPECT_LE(s.fraction_positive(), 0.515);
}

TEST(ExitAngles, OneDimAsymmetricMatchesOracle) {
  FieldConfig cfg;
  cfg.a_plus = 2.0;
  cfg.a_minus = 1.0;
  const auto f = make_field<1>(cfg);
  const auto s = exit_angle_distribution<1>(f, {2.0, 1.0, 1}, 50.0, 10000, exit_opts(47));
  EXPECT_NEAR(s.fraction_positive(), scale_function_oracle_1d(2.0, 1.0, 0.5, 50.0), 0.03);
}

TEST(ExitAngles, TwoDimConstantIsUniform) {
  const auto f = model_field<2>(AngularProfile<2>(1.0), 0.5);
  const auto s = exit_angle_distribution<2>(f, {2.0, 1.0, 2}, 50.0, 10000, exit_opts(53));
  for (const auto& phi : s.samples) EXPECT_NEAR(phi.norm(), 1.0, 1e-10);
  EXPECT_LT(stats::ks_one_sample(s.polar_angles(), uniform_circle_cdf), 0.03);
}

namespace {

AngularProfile<2> tilted() {
  return AngularProfile<2>([](const Point<2>& p) { return 1.0 + 0.5 * p[0]; });
}

}  // namespace

// Rotating the profile by Q rotates the exit law by Q.
TEST(ExitAngles, RotationEquivariance) {
  const double th = 1.1;
  Eigen::Matrix2d q;
  q << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const auto base = model_field<2>(tilted(), 0.5);
  const Eigen::Matrix2d qt = q.transpose();
  const auto rotated = model_field<2>(
      AngularProfile<2>([qt](const Point<2>& p) { return 1.0 + 0.5 * Point<2>(qt * p)[0]; }), 0.5);
  const auto a = exit_angle_distribution<2>(base, {2.0, 1.0, 2}, 50.0, 5000, exit_opts(59));
  const auto b = exit_angle_distribution<2>(rotated, {2.0, 1.0, 2}, 50.0, 5000, exit_opts(61));
  std::vector<double> ra, rb;
  for (const auto& p : a.samples) {
    const Point<2> v = q * p;
    ra.push_back(std::atan2(v[1], v[0]));
  }
  rb = b.polar_angles();
  EXPECT_LT(stats::ks_two_sample(ra, rb), 0.04);
}

TEST(ExitAngles, RadiusStability) {
  const auto f = model_field<2>(tilted(), 0.5);
  auto o = exit_opts(67);
  const auto a = exit_angle_distribution<2>(f, {2.0, 1.0, 2}, 50.0, 5000, o);
  o.first_stream = 5000;
  const auto b = exit_angle_distribution<2>(f, {2.0, 1.0, 2}, 100.0, 5000, o);
  EXPECT_LT(stats::ks_two_sample(a.polar_angles(), b.polar_angles()), 0.04);
}

TEST(ExitAngles, TooFewPathsAndHorizonMismatch) {
  const auto f = model_field<1>(AngularProfile<1>(1.0), 0.5);
  EXPECT_THROW(exit_angle_distribution<1>(f, {2.0, 1.0, 1}, 50.0, 99), std::domain_error);
  auto o = exit_opts(71);
  o.horizon_margin = 0.1;
  EXPECT_THROW(exit_angle_distribution<1>(f, {2.0, 1.0, 1}, 50.0, 200, o), std::runtime_error);
}

namespace {

PolarSystem<2> radial_system(double a, double beta) {
  PolarSystem<2> s;
  s.a = [a](double, const Point<2>&) { return a; };
  s.b = [](double, const Point<2>&) { return Point<2>::Zero(); };
  s.beta = beta;
  s.delta = 0.3;
  return s;
}

PolarSystem<2> twisted_system() {
  PolarSystem<2> s;
  s.a = [](double r, const Point<2>& p) { return 1.0 + 0.3 * p[0] + 0.2 * std::sin(r); };
  s.b = [](double, const Point<2>& p) { return Point<2>(-p[1], p[0]) * (0.5 + 0.3 * p[1]); };
  s.beta = 0.5;
  s.delta = 0.4;
  return s;
}

}  // namespace

TEST(PolarSolve, RadialClosedForm) {
  const Point<2> phi0(0.6, 0.8);
  const auto sol = polar_ode_solve<2>(radial_system(1.0, 0.5), 0.0, phi0, 4.0);
  for (double t : {0.01, 0.1, 0.5, 1.0, 2.0, 4.0}) {
    const auto s = sol.at(t);
    const double exact = std::pow(0.5 * t, 2.0);
    EXPECT_NEAR(s.r, exact, 1e-6 * std::max(1.0, exact)) << t;
    EXPECT_LT((s.phi - phi0).norm(), 1e-12);
  }
}

TEST(PolarSolve, ComparisonBounds) {
  const auto sys = twisted_system();
  const auto sol = polar_ode_solve<2>(sys, 0.0, Point<2>(1.0, 0.0), 5.0);
  EXPECT_GE(sol.a_lower, 0.5 - 1e-12);
  EXPECT_LE(sol.a_upper, 1.5 + 1e-12);
  for (int k = 1; k <= 100; ++k) {
    const double t = 0.05 * k;
    const double r = sol.at(t).r;
    EXPECT_GT(r, 0.0);
    EXPECT_GE(r, closed_form_radius(sol.a_lower, 0.5, 0.0, t) * (1 - 1e-9));
    EXPECT_LE(r, closed_form_radius(sol.a_upper, 0.5, 0.0, t) * (1 + 1e-9));
  }
}

TEST(PolarSolve, ContinuityInInitialAngle) {
  const auto sys = twisted_system();
  const auto ref = polar_ode_solve<2>(sys, 0.0, Point<2>(1.0, 0.0), 1.0).at(1.0).phi;
  double prev = std::numeric_limits<double>::infinity();
  for (double gap : {0.1, 0.01, 0.001, 0.0001}) {
    const Point<2> p(std::cos(gap), std::sin(gap));
    const double d = geodesic_distance<2>(Point<2>(polar_ode_solve<2>(sys, 0.0, p, 1.0).at(1.0).phi), Point<2>(ref));
    EXPECT_LT(d, prev);
    EXPECT_LT(d, 3.0 * gap);
    prev = d;
  }
}

// (R, Phi) reassembled as R Phi solves dX = A(X) dt for the induced field.
TEST(PolarSolve, ReassemblySolvesCartesianOde) {
  const auto sys = twisted_system();
  const auto sol = polar_ode_solve<2>(sys, 0.0, Point<2>(0.0, 1.0), 3.0, {20000, 360, 200});
  EXPECT_LT(sol.max_renormalization, 1e-6);
  const double dt = 1e-4;
  for (double t : {0.5, 1.0, 2.0, 2.9}) {
    auto x = [&](double s) {
      const auto st = sol.at(s);
      return Point<2>(st.r * st.phi);
    };
    const Point<2> fd = (x(t + dt) - x(t - dt)) / (2.0 * dt);
    const Point<2> a = sys.cartesian_field(x(t));
    EXPECT_LT((fd - a).norm(), 1e-4 * a.norm()) << t;
  }
}

TEST(PolarSolve, Errors) {
  auto sys = radial_system(1.0, 0.5);
  sys.a = [](double, const Point<2>& p) { return p[0]; };
  EXPECT_THROW(polar_ode_solve<2>(sys, 0.0, Point<2>(1.0, 0.0), 1.0), std::domain_error);
  EXPECT_THROW(polar_ode_solve<2>(radial_system(1.0, 0.5), 0.0, Point<2>(2.0, 0.0), 1.0), std::domain_error);
  EXPECT_THROW(polar_ode_solve<2>(radial_system(1.0, 1.0), 0.0, Point<2>(1.0, 0.0), 1.0), std::domain_error);
}
