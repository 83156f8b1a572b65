#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zeronoise/asymptotics_lab.hpp"
#include "zeronoise/config.hpp"
#include "zeronoise/ensemble.hpp"
#include "zeronoise/field_library.hpp"
#include "zeronoise/io.hpp"
#include "zeronoise/report.hpp"
#include "zeronoise/scaling_lab.hpp"
#include "zeronoise/sde_engine.hpp"
#include "zeronoise/stable_noise.hpp"
#include "zeronoise/statistics.hpp"

namespace zeronoise {

namespace experiment_detail {

inline std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

template <int Dim>
FieldSpec<Dim> field_from(const ExperimentConfig& cfg) {
  try {
    return make_field<Dim>(cfg.field);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("field construction failed: ") + e.what());
  }
}

inline StableParams noise_from(const ExperimentConfig& cfg) {
  return StableParams{cfg.alpha, cfg.c, cfg.d};
}

template <int Dim>
Point<Dim> start_point(const ExperimentConfig& cfg, const Point<Dim>& fallback) {
  if (cfg.x0.empty()) return fallback;
  Point<Dim> x;
  for (int c = 0; c < Dim; ++c) x[c] = cfg.x0[c];
  return x;
}

inline std::size_t auto_thinning(std::size_t steps, std::size_t requested, std::size_t keep = 20000) {
  return std::max<std::size_t>(requested, steps / keep);
}

// Radial rate and normalized tangential part of a field in the form the
// polar solver expects.
template <int Dim>
PolarSystem<Dim> polar_system_for(const FieldSpec<Dim>& f, double delta) {
  PolarSystem<Dim> sys;
  sys.beta = f.beta;
  sys.delta = delta;
  sys.a = [f](double r, const Point<Dim>& phi) {
    if (r == 0.0) return f.a_bar(phi);
    return f(Point<Dim>(r * phi)).dot(phi) / std::pow(r, f.beta);
  };
  sys.b = [f, delta](double r, const Point<Dim>& phi) -> Point<Dim> {
    if (r == 0.0) return Point<Dim>::Zero();
    const Point<Dim> v = f(Point<Dim>(r * phi));
    return (v - v.dot(phi) * phi) / std::pow(r, f.beta + delta);
  };
  return sys;
}

template <int Dim>
struct LawDistance {
  std::vector<double> ks_coordinates;
  std::vector<double> w1_coordinates;
  double ks_radius = 0.0;
  double w1_radius = 0.0;
  std::optional<double> circle_w1;

  double headline() const { return *std::max_element(w1_coordinates.begin(), w1_coordinates.end()); }
  double worst_ks() const {
    double w = ks_radius;
    for (double v : ks_coordinates) w = std::max(w, v);
    return w;
  }
};

template <int Dim>
LawDistance<Dim> compare_laws(const std::vector<Point<Dim>>& a, const std::vector<Point<Dim>>& b) {
  LawDistance<Dim> out;
  auto column = [](const std::vector<Point<Dim>>& xs, int c) {
    std::vector<double> v;
    v.reserve(xs.size());
    for (const auto& x : xs) v.push_back(c < 0 ? x.norm() : x[c]);
    return v;
  };
  for (int c = 0; c < Dim; ++c) {
    out.ks_coordinates.push_back(stats::ks_two_sample(column(a, c), column(b, c)));
    out.w1_coordinates.push_back(stats::wasserstein1(column(a, c), column(b, c)));
  }
  out.ks_radius = stats::ks_two_sample(column(a, -1), column(b, -1));
  out.w1_radius = stats::wasserstein1(column(a, -1), column(b, -1));
  if constexpr (Dim == 2) {
    auto angles = [](const std::vector<Point<2>>& xs) {
      std::vector<double> v;
      for (const auto& x : xs) {
        const Point<2> u = direction<2>(x);
        v.push_back(std::atan2(u[1], u[0]));
      }
      return v;
    };
    out.circle_w1 = stats::circular_wasserstein1(angles(a), angles(b));
  }
  return out;
}

template <int Dim>
nlohmann::ordered_json to_json(const LawDistance<Dim>& d) {
  nlohmann::ordered_json j;
  j["headline_w1"] = d.headline();
  j["ks_coordinates"] = d.ks_coordinates;
  j["w1_coordinates"] = d.w1_coordinates;
  j["ks_radius"] = d.ks_radius;
  j["w1_radius"] = d.w1_radius;
  j["circle_w1"] = d.circle_w1 ? nlohmann::ordered_json(*d.circle_w1) : nlohmann::ordered_json(nullptr);
  return j;
}

inline nlohmann::ordered_json quantiles(const std::vector<double>& xs) {
  nlohmann::ordered_json j;
  if (xs.empty()) return j;
  for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) j["q" + tag(q)] = stats::quantile(xs, q);
  return j;
}

}  // namespace experiment_detail

// Zero-noise convergence: exit-angle law of the model equation, reference
// ensemble of noiseless solutions leaving the origin along those angles, and
// the distance of the eps-perturbed terminal law to it for each eps.
template <int Dim>
ExperimentReport run_zero_noise_convergence(const ExperimentConfig& cfg) {
  using namespace experiment_detail;
  ExperimentReport report(cfg);
  const FieldSpec<Dim> field = field_from<Dim>(cfg);
  const StableParams noise = noise_from(cfg);
  if (!(field.beta > 0.0 && field.beta < 1.0)) throw ConfigError("convergence experiment requires beta in (0, 1)");
  if (!field.asymptotics_at_zero) throw ConfigError("field '" + field.name + "' declares no asymptotics at the origin");
  for (double x : cfg.x0)
    if (x != 0.0) throw ConfigError("convergence experiment starts at the origin; x0 must be zero");
  if (!(cfg.mu <= cfg.T)) throw ConfigError("mu must not exceed T");

  const auto validation = asymptotic_validate<Dim>(field, {1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2}, angle_grid<Dim>(64));
  if (!validation.passed) {
    std::ostringstream msg;
    msg << "field '" << field.name << "' fails its declared asymptotics at the origin:";
    for (const auto& reg : validation.regimes)
      msg << " radial deviation " << reg.limit_radial_ratio << ", tangential ratio " << reg.worst_tangential_ratio
          << " (declared " << field.tangential_constant << ")";
    throw ConfigError(msg.str());
  }

  const std::size_t n = cfg.N;
  // (i) exit-angle law of the model equation with the same a_bar.
  const FieldSpec<Dim> model = model_field<Dim>(field.a_bar, field.beta);
  ExitDistributionOptions eopt;
  eopt.seed = cfg.seed;
  eopt.first_stream = 0;
  eopt.h = cfg.h;
  eopt.threads = cfg.threads;
  const AngleSample<Dim> angles = exit_angle_distribution<Dim>(model, noise, cfg.R, n, eopt);
  const auto angle_prov = Provenance::streams(n, cfg.seed, 0);
  report.metric("angle_sample", io::angle_sample_meta(angles), angle_prov);
  report.artifact("angle_sample.csv", io::angle_sample_csv(angles));

  // (ii) reference ensemble X_0(T, Phi).
  const double polar_delta = std::min(0.5, std::min(field.gamma, 1.0 - field.beta));
  const PolarSystem<Dim> sys = polar_system_for<Dim>(field, polar_delta);
  PolarSolveOptions popt;
  popt.steps = 1000;
  popt.check_angles = 72;
  popt.check_radii = 20;
  std::map<std::vector<double>, Point<Dim>> cache;
  std::vector<Point<Dim>> reference;
  reference.reserve(angles.samples.size());
  for (const auto& phi : angles.samples) {
    const std::vector<double> key(phi.data(), phi.data() + Dim);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const auto sol = polar_ode_solve<Dim>(sys, 0.0, phi, cfg.T, popt);
      const auto st = sol.at(cfg.T);
      it = cache.emplace(key, Point<Dim>(st.r * st.phi)).first;
    }
    reference.push_back(it->second);
  }
  std::vector<Point<Dim>> support;
  for (const auto& [_, x] : cache) support.push_back(x);
  double ref_positive = 0.0;
  for (const auto& x : reference) ref_positive += x[0] > 0.0;
  ref_positive /= static_cast<double>(reference.size());
  {
    nlohmann::ordered_json r;
    r["distinct_points"] = support.size();
    r["fraction_positive"] = ref_positive;
    std::vector<double> radii;
    for (const auto& x : reference) radii.push_back(x.norm());
    r["radius_quantiles"] = quantiles(radii);
    report.metric("reference", r, angle_prov);
    std::ostringstream csv;
    for (int c = 1; c <= Dim; ++c) csv << (c > 1 ? "," : "") << 'x' << c;
    csv << '\n';
    for (const auto& x : reference) {
      for (int c = 0; c < Dim; ++c) csv << (c > 0 ? "," : "") << io::format_double(x[c]);
      csv << '\n';
    }
    report.artifact("reference.csv", csv.str());
  }
  // Time for the noiseless solution to reach delta, over the angle grid.
  double a_lo = std::numeric_limits<double>::infinity(), a_hi = 0.0;
  for (const auto& phi : angle_grid<Dim>(720)) {
    a_lo = std::min(a_lo, field.a_bar(phi));
    a_hi = std::max(a_hi, field.a_bar(phi));
  }
  const double reach = std::pow(cfg.delta, 1.0 - field.beta) / (1.0 - field.beta);
  report.metric("noiseless_exit_time_range", {reach / a_hi, reach / a_lo}, Provenance::none());

  // (iii) perturbed ensembles.
  struct Outcome {
    Point<Dim> terminal;
    double tau = std::numeric_limits<double>::infinity();
  };
  const UniformGrid grid = UniformGrid::over(cfg.T, cfg.h);
  std::ostringstream table;
  table << "eps,headline_w1,worst_ks,ks_radius,w1_radius,circle_w1,fraction_positive,p_tau_gt_mu,concentration\n";
  auto& rows = report.metric_array("eps_sweep");
  double first_distance = 0.0, last_distance = 0.0, last_split = 0.0, last_tau = 0.0;
  double first_conc = 0.0, last_conc = 0.0;
  for (std::size_t j = 0; j < cfg.eps_list.size(); ++j) {
    const double eps = cfg.eps_list[j];
    const std::uint64_t first = (j + 1) * n;
    const auto outcomes = parallel_map<Outcome>(n, cfg.threads, [&](std::size_t i) {
      Outcome o;
      RandomStream rng(cfg.seed, first + i);
      euler_maruyama<Dim>(field, eps, noise, Point<Dim>::Zero(), grid, rng,
                          [&](std::size_t, double t, const Point<Dim>& x, bool last) {
                            if (!std::isfinite(o.tau) && x.norm() >= cfg.delta) o.tau = t;
                            if (last) o.terminal = x;
                            return true;
                          });
      return o;
    });
    std::vector<Point<Dim>> terminal;
    std::vector<double> taus_finite;
    std::size_t late = 0, positive = 0;
    std::vector<double> nearest;
    for (const auto& o : outcomes) {
      terminal.push_back(o.terminal);
      if (std::isfinite(o.tau)) taus_finite.push_back(o.tau);
      late += !(o.tau <= cfg.mu);
      positive += o.terminal[0] > 0.0;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& s : support) best = std::min(best, (o.terminal - s).norm());
      nearest.push_back(best);
    }
    const auto dist = compare_laws<Dim>(terminal, reference);
    const double split = static_cast<double>(positive) / static_cast<double>(n);
    const double p_tau = static_cast<double>(late) / static_cast<double>(n);
    const double conc = stats::quantile(nearest, 0.5);
    nlohmann::ordered_json row;
    row["eps"] = eps;
    row["distance"] = to_json(dist);
    row["fraction_positive"] = split;
    row["fraction_positive_se"] = stats::proportion_se(split, n);
    row["p_tau_delta_gt_mu"] = p_tau;
    row["exit_time_quantiles"] = quantiles(taus_finite);
    row["no_exit_by_T"] = n - taus_finite.size();
    row["median_distance_to_support"] = conc;
    row["provenance"] = to_json(Provenance::streams(n, cfg.seed, first));
    rows.push_back(row);
    table << io::format_double(eps) << ',' << io::format_double(dist.headline()) << ','
          << io::format_double(dist.worst_ks()) << ',' << io::format_double(dist.ks_radius) << ','
          << io::format_double(dist.w1_radius) << ','
          << (dist.circle_w1 ? io::format_double(*dist.circle_w1) : std::string("")) << ','
          << io::format_double(split) << ',' << io::format_double(p_tau) << ',' << io::format_double(conc) << '\n';
    if (j == 0) {
      first_distance = dist.headline();
      first_conc = conc;
    }
    last_distance = dist.headline();
    last_split = split;
    last_tau = p_tau;
    last_conc = conc;
  }
  report.artifact("distances.csv", table.str());

  const std::size_t last_j = cfg.eps_list.size() - 1;
  const auto last_prov = Provenance::streams(n, cfg.seed, (last_j + 1) * n);
  report.check_below("distance_ratio_last_over_first", last_distance / first_distance, 0.5,
                     Provenance::streams((last_j + 2) * n, cfg.seed, 0), false,
                     "headline distance is the largest per-coordinate 1-Wasserstein distance to the reference");
  report.check_below("mass_split_error", std::abs(last_split - ref_positive), 0.03, last_prov, false,
                     "fraction of terminal states with positive first coordinate vs the reference ensemble");
  report.check_below("support_distance_ratio_last_over_first", last_conc / first_conc, 0.5,
                     Provenance::streams((last_j + 2) * n, cfg.seed, 0), false,
                     "median distance of terminal states to the nearest reference support point");
  report.check_below("p_tau_delta_gt_mu", last_tau, cfg.mu, last_prov, true,
                     "exit from the delta-ball within time mu at the smallest eps");
  return report;
}

template <int Dim>
ExperimentReport run_scaling_check(const ExperimentConfig& cfg) {
  using namespace experiment_detail;
  ExperimentReport report(cfg);
  const FieldSpec<Dim> field = field_from<Dim>(cfg);
  const StableParams noise = noise_from(cfg);
  ScalingTestOptions opt;
  opt.seed = cfg.seed;
  opt.h = cfg.h;
  opt.threads = cfg.threads;
  opt.threshold = cfg.ks_threshold;
  const auto exps = exponents(cfg.alpha, field.beta);
  report.metric("exponents", {{"space", exps.space_exp}, {"time", exps.time_exp}}, Provenance::none());
  std::ostringstream csv;
  csv << "eps,t,component,ks\n";
  for (double eps : cfg.eps_list) {
    const ScalingReport r = scaling_identity_test<Dim>(field, eps, cfg.t_points, cfg.N, noise, opt);
    const auto prov = Provenance::streams(2 * cfg.N, cfg.seed, 0);
    nlohmann::ordered_json rj = zeronoise::to_json(r);
    report.metric("scaling_eps_" + tag(eps), nlohmann::ordered_json::parse(rj.dump()), prov);
    for (const auto& w : r.warnings) report.warn(w);
    for (const auto& row : r.rows) {
      for (int c = 0; c < Dim; ++c)
        csv << io::format_double(eps) << ',' << io::format_double(row.t) << ",x" << c + 1 << ','
            << io::format_double(row.ks_coordinates[c]) << '\n';
      csv << io::format_double(eps) << ',' << io::format_double(row.t) << ",radius,"
          << io::format_double(row.ks_radius) << '\n';
    }
    if (r.exact_identity) report.check_below("worst_ks_eps_" + tag(eps), r.worst(), cfg.ks_threshold, prov);
  }
  report.artifact("scaling_ks.csv", csv.str());
  return report;
}

// Long-time behavior in d = 2: a forced noiseless run, seeded stochastic runs,
// and the bounded counterexample orbit.
template <int Dim>
ExperimentReport run_large_time(const ExperimentConfig& cfg) {
  using namespace experiment_detail;
  if constexpr (Dim != 2) {
    throw ConfigError("large-time experiment is defined for d = 2");
  } else {
    ExperimentReport report(cfg);
    const FieldSpec<2> field = field_from<2>(cfg);
    const StableParams noise = noise_from(cfg);
    const double T = cfg.large_time_T;
    if (!(T > 0.0)) throw ConfigError("large_time_T must be positive");
    if (!(field.beta < 1.0 && field.beta > -1.0)) throw ConfigError("beta out of range");
    const UniformGrid grid = UniformGrid::over(T, cfg.h);
    const std::size_t thin = auto_thinning(grid.steps, cfg.thinning);

    // Forced run with xi(t) = (sin t, cos t - 1).
    {
      const Forcing<2> xi = [](double t) { return Point<2>(std::sin(t), std::cos(t) - 1.0); };
      const Point<2> x0 = start_point<2>(cfg, Point<2>(10.0, 0.0));
      const auto traj = integrate_with_forcing<2>(field, xi, x0, grid, {thin, std::nullopt});
      const auto la = limit_angle<2>(traj, cfg.tail_fraction);
      const auto fit = radial_fit<2>(traj, field.beta, T * (1.0 - cfg.tail_fraction), T);
      const double a_ref = field.a_bar(Point<2>(la.phi_hat));
      report.metric("forced",
                    {{"phi_hat", {la.phi_hat[0], la.phi_hat[1]}},
                     {"cauchy_diag", la.cauchy_diag},
                     {"a_bar_hat", fit.a_bar_hat},
                     {"a_bar_at_phi_hat", a_ref},
                     {"fit_window", {fit.t_lo, fit.t_hi}},
                     {"fit_residual", fit.residual}},
                    Provenance::none());
      report.check_within("forced_a_bar_ratio", fit.a_bar_hat / a_ref, 0.98, 1.02, Provenance::none());
      report.check_below("forced_cauchy_diag", la.cauchy_diag, 0.05, Provenance::none());
      Trajectory<2> light = traj;
      const std::size_t stride = std::max<std::size_t>(1, traj.size() / 5000);
      light.times.clear();
      light.states.clear();
      for (std::size_t k = 0; k < traj.size(); k += stride) {
        light.times.push_back(traj.times[k]);
        light.states.push_back(traj.states[k]);
      }
      report.artifact("forced_trajectory.csv", io::trajectory_csv(light));
    }

    // Stochastic runs at eps = 1 from the origin, one stream each.
    {
      struct RunResult {
        double ratio;
        double cauchy;
        Point<2> phi;
      };
      const FieldSpec<2> model = model_field<2>(field.a_bar, field.beta);
      const auto results = parallel_map<RunResult>(cfg.runs, cfg.threads, [&](std::size_t i) {
        const auto traj = integrate_sde<2>(model, 1.0, noise, Point<2>::Zero(), grid, cfg.seed, i,
                                           {thin, std::nullopt});
        const auto la = limit_angle<2>(traj, cfg.tail_fraction);
        const Point<2> phi(la.phi_hat[0], la.phi_hat[1]);
        const double r = traj.states.back().norm();
        const double ratio = std::pow(r, 1.0 - model.beta) / ((1.0 - model.beta) * T * model.a_bar(phi));
        return RunResult{ratio, la.cauchy_diag, phi};
      });
      std::size_t settled = 0;
      auto& runs = report.metric_array("stochastic_runs");
      std::ostringstream csv;
      csv << "run,stream,ratio,cauchy_diag,phi1,phi2\n";
      for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        const bool ok = r.ratio >= 0.9 && r.ratio <= 1.1 && r.cauchy < 0.1;
        settled += ok;
        runs.push_back({{"ratio", r.ratio},
                        {"cauchy_diag", r.cauchy},
                        {"settled", ok},
                        {"provenance", zeronoise::to_json(Provenance::streams(1, cfg.seed, i))}});
        csv << i << ',' << i << ',' << io::format_double(r.ratio) << ',' << io::format_double(r.cauchy) << ','
            << io::format_double(r.phi[0]) << ',' << io::format_double(r.phi[1]) << '\n';
      }
      report.artifact("stochastic_runs.csv", csv.str());
      const double needed = std::ceil(0.8 * static_cast<double>(cfg.runs));
      report.check_at_least("stochastic_settled_runs", static_cast<double>(settled), needed,
                            Provenance::streams(cfg.runs, cfg.seed, 0),
                            "a run settles when r(T)^(1-beta)/((1-beta) T a_bar) is in [0.9, 1.1] and the tail "
                            "angular diameter is below 0.1");
    }

    // Counterexample orbit.
    {
      const int nn = cfg.field.n;
      const UniformGrid cgrid = UniformGrid::over(cfg.counterexample_T, cfg.h);
      Counterexample ce;
      try {
        ce = counterexample_pair(nn, field.beta, cfg.field.r_rad, cgrid);
      } catch (const std::domain_error& e) {
        throw ConfigError(std::string("counterexample: ") + e.what());
      }
      const auto traj = integrate_with_forcing<2>(ce.field, Forcing<2>(ce.forcing), ce.start, cgrid);
      double sup = 0.0;
      for (const auto& x : traj.states) sup = std::max(sup, x.norm());
      const auto la = limit_angle<2>(traj, cfg.tail_fraction);
      const bool non_convergent = la.cauchy_diag > 0.5;
      report.metric("counterexample",
                    {{"n", nn},
                     {"sigma", ce.sigma},
                     {"switches", ce.forcing.switch_times.size()},
                     {"forcing_sup_norm", ce.forcing.sup_norm()},
                     {"sup_radius", sup},
                     {"tail_cauchy_diag", la.cauchy_diag},
                     {"non_convergent_angle", non_convergent}},
                    Provenance::none());
      report.check_below("counterexample_sup_radius", sup, nn + 2.0, Provenance::none(), false);
      report.check_at_least("counterexample_tail_angle_spread", la.cauchy_diag, 0.5, Provenance::none(),
                            "the angle keeps turning, so no limit direction exists");
      Trajectory<2> light;
      light.field_name = traj.field_name;
      light.h = traj.h;
      const std::size_t stride = std::max<std::size_t>(1, traj.size() / 20000);
      for (std::size_t k = 0; k < traj.size(); k += stride) {
        light.times.push_back(traj.times[k]);
        light.states.push_back(traj.states[k]);
      }
      report.artifact("counterexample_trajectory.csv", io::trajectory_csv(light));
    }
    return report;
  }
}

template <int Dim>
ExperimentReport run_exit_distribution(const ExperimentConfig& cfg) {
  using namespace experiment_detail;
  ExperimentReport report(cfg);
  const FieldSpec<Dim> field = field_from<Dim>(cfg);
  const StableParams noise = noise_from(cfg);
  const std::size_t n = cfg.N;
  if (n < 100) throw ConfigError("exit-dist needs N >= 100");
  ExitDistributionOptions opt;
  opt.seed = cfg.seed;
  opt.h = cfg.h;
  opt.threads = cfg.threads;
  opt.first_stream = 0;
  const auto at_r = exit_angle_distribution<Dim>(field, noise, cfg.R, n, opt);
  opt.first_stream = n;
  const auto at_2r = exit_angle_distribution<Dim>(field, noise, 2.0 * cfg.R, n, opt);
  const auto prov_r = Provenance::streams(n, cfg.seed, 0);
  const auto prov_2r = Provenance::streams(n, cfg.seed, n);
  const auto prov_both = Provenance::streams(2 * n, cfg.seed, 0);
  report.artifact("angles_R.csv", io::angle_sample_csv(at_r));
  report.artifact("angles_2R.csv", io::angle_sample_csv(at_2r));
  for (const auto* s : {&at_r, &at_2r}) {
    nlohmann::ordered_json j;
    j["meta"] = io::angle_sample_meta(*s);
    const double p = s->fraction_positive();
    j["fraction_positive"] = p;
    j["fraction_positive_se"] = stats::proportion_se(p, s->samples.size());
    j["exit_time_quantiles"] = quantiles(s->exit_times);
    if constexpr (Dim == 2) {
      const double ks_uniform = stats::ks_one_sample(s->polar_angles(), [](double t) {
        return (t + std::numbers::pi) / (2.0 * std::numbers::pi);
      });
      j["ks_uniform"] = ks_uniform;
    }
    report.metric(s == &at_r ? "law_R" : "law_2R", j, s == &at_r ? prov_r : prov_2r);
  }

  // R-stability.
  double stability = 0.0;
  if constexpr (Dim == 2) {
    stability = stats::ks_two_sample(at_r.polar_angles(), at_2r.polar_angles());
    report.metric("circle_w1_R_vs_2R", stats::circular_wasserstein1(at_r.polar_angles(), at_2r.polar_angles()),
                  prov_both);
  } else {
    for (int c = 0; c < Dim; ++c)
      stability = std::max(stability, stats::ks_two_sample(at_r.coordinate(c), at_2r.coordinate(c)));
  }
  report.check_below("ks_R_vs_2R", stability, 0.04, prov_both, true,
                     Dim == 2 ? "polar angles" : "largest per-coordinate KS of the unit vectors");

  const double p = at_r.fraction_positive();
  if constexpr (Dim == 1) {
    const double ap = field.a_bar(Point<1>(1.0));
    const double am = field.a_bar(Point<1>(-1.0));
    if (ap == am && field.exact_power) {
      const double tol = 3.0 * stats::proportion_se(0.5, at_r.samples.size());
      report.check_below("symmetric_split_error", std::abs(p - 0.5), tol, prov_r, false,
                         "three standard errors of a fair split");
    }
    if (cfg.alpha == 2.0 && field.exact_power && field.beta > 0.0) {
      const double oracle = scale_function_oracle_1d(ap, am, field.beta, cfg.R, cfg.c);
      report.metric("scale_function_oracle", oracle, Provenance::none());
      report.check_below("oracle_error", std::abs(p - oracle), 0.03, prov_r, false);
    }
  }
  if constexpr (Dim == 2) {
    if (field.a_bar.is_constant() && field.tangential_constant == 0.0) {
      const double ks_uniform = report.metrics()["law_R"]["value"]["ks_uniform"].template get<double>();
      report.check_below("ks_uniform_R", ks_uniform, 0.03, prov_r);
    }
  }
  return report;
}

// Probability that some pair of grid times at most modulus_delta apart sees a
// displacement of at least modulus_mu, per eps.
template <int Dim>
ExperimentReport run_modulus_diagnostic(const ExperimentConfig& cfg) {
  using namespace experiment_detail;
  ExperimentReport report(cfg);
  const FieldSpec<Dim> field = field_from<Dim>(cfg);
  const StableParams noise = noise_from(cfg);
  if (!(cfg.modulus_delta > 0.0 && cfg.modulus_mu > 0.0)) throw ConfigError("modulus_delta and modulus_mu must be positive");
  const std::size_t window = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.modulus_delta / cfg.h)));
  const Point<Dim> x0 = start_point<Dim>(cfg, Point<Dim>::Zero());
  const UniformGrid grid = UniformGrid::over(cfg.T, cfg.h);
  const std::size_t n = cfg.N;
  std::ostringstream csv;
  csv << "eps,probability,se\n";
  auto& rows = report.metric_array("eps_sweep");
  std::vector<double> probs;
  for (std::size_t j = 0; j < cfg.eps_list.size(); ++j) {
    const double eps = cfg.eps_list[j];
    const std::uint64_t first = j * n;
    const auto events = parallel_map<char>(n, cfg.threads, [&](std::size_t i) -> char {
      RandomStream rng(cfg.seed, first + i);
      std::vector<Point<Dim>> ring(window + 1);
      std::size_t count = 0;
      bool hit = false;
      euler_maruyama<Dim>(field, eps, noise, x0, grid, rng, [&](std::size_t, double, const Point<Dim>& x, bool) {
        const std::size_t filled = std::min(count, window);
        for (std::size_t back = 1; back <= filled && !hit; ++back)
          hit = (x - ring[(count - back) % (window + 1)]).norm() >= cfg.modulus_mu;
        ring[count % (window + 1)] = x;
        ++count;
        return !hit;
      });
      return hit ? 1 : 0;
    });
    std::size_t hits = 0;
    for (char e : events) hits += e;
    const double prob = static_cast<double>(hits) / static_cast<double>(n);
    probs.push_back(prob);
    rows.push_back({{"eps", eps},
                    {"probability", prob},
                    {"se", stats::proportion_se(prob, n)},
                    {"provenance", to_json(Provenance::streams(n, cfg.seed, first))}});
    csv << io::format_double(eps) << ',' << io::format_double(prob) << ','
        << io::format_double(stats::proportion_se(prob, n)) << '\n';
  }
  report.artifact("modulus.csv", csv.str());
  report.metric("window_steps", window, Provenance::none());
  report.check_below("probability_smallest_minus_largest_eps", probs.back() - probs.front(), 0.0,
                     Provenance::streams(n * cfg.eps_list.size(), cfg.seed, 0), false,
                     "the oscillation probability must not grow as eps decreases");
  return report;
}

// Empirical characteristic function of the stable increments against
// exp(-c |z|^alpha dt) for a fixed grid of (alpha, c), plus isotropy in d >= 2.
template <int Dim>
ExperimentReport run_noise_selftest(const ExperimentConfig& cfg) {
  using namespace experiment_detail;
  ExperimentReport report(cfg);
  const std::size_t n = cfg.selftest_samples;
  if (n < 1000) throw ConfigError("selftest_samples must be at least 1000");
  const std::vector<std::pair<double, double>> cases{{2.0, 1.0}, {1.5, 1.0}, {1.8, 0.5}};
  const std::vector<double> freqs{0.2, 0.5, 1.0, 1.5, 2.5};
  const std::vector<double> dts{0.5, 2.0};
  const double tol = 4.0 / std::sqrt(static_cast<double>(n));
  constexpr std::size_t chunks = 100;
  Point<Dim> dir = Point<Dim>::Ones();
  dir /= dir.norm();
  std::ostringstream csv;
  csv << "alpha,c,dt,z,re,im,target,error,tolerance\n";
  std::uint64_t case_index = 0;
  double worst_ratio = 0.0;
  for (const auto& [alpha, c] : cases) {
    for (double dt : dts) {
      const StableParams params{alpha, c, Dim};
      const std::uint64_t base = case_index++ << 32;
      struct Partial {
        std::vector<double> re, im;
        std::vector<double> iso;
      };
      const auto partials = parallel_map<Partial>(chunks, cfg.threads, [&](std::size_t k) {
        Partial p{std::vector<double>(freqs.size(), 0.0), std::vector<double>(freqs.size(), 0.0), {}};
        RandomStream rng(cfg.seed, base + k);
        const std::size_t count = n / chunks + (k < n % chunks ? 1 : 0);
        for (std::size_t s = 0; s < count; ++s) {
          const Point<Dim> x = sample_increment<Dim>(params, dt, rng);
          const double proj = x.dot(dir);
          for (std::size_t f = 0; f < freqs.size(); ++f) {
            p.re[f] += std::cos(freqs[f] * proj);
            p.im[f] += std::sin(freqs[f] * proj);
          }
          if constexpr (Dim == 2) p.iso.push_back(std::atan2(x[1], x[0]));
          if constexpr (Dim == 3) p.iso.push_back(x[2] / x.norm());
        }
        return p;
      });
      std::vector<double> re(freqs.size(), 0.0), im(freqs.size(), 0.0), iso;
      for (const auto& p : partials) {
        for (std::size_t f = 0; f < freqs.size(); ++f) {
          re[f] += p.re[f];
          im[f] += p.im[f];
        }
        iso.insert(iso.end(), p.iso.begin(), p.iso.end());
      }
      const std::string label = "alpha_" + tag(alpha) + "_c_" + tag(c) + "_dt_" + tag(dt);
      const auto prov = Provenance::streams(n, cfg.seed, base);
      double worst = 0.0;
      for (std::size_t f = 0; f < freqs.size(); ++f) {
        const double mr = re[f] / static_cast<double>(n), mi = im[f] / static_cast<double>(n);
        const double target = std::exp(-c * std::pow(freqs[f], alpha) * dt);
        const double err = std::max(std::abs(mr - target), std::abs(mi));
        worst = std::max(worst, err);
        csv << io::format_double(alpha) << ',' << io::format_double(c) << ',' << io::format_double(dt) << ','
            << io::format_double(freqs[f]) << ',' << io::format_double(mr) << ',' << io::format_double(mi) << ','
            << io::format_double(target) << ',' << io::format_double(err) << ',' << io::format_double(tol) << '\n';
      }
      worst_ratio = std::max(worst_ratio, worst / tol);
      report.check_below("charfn_error_" + label, worst, tol, prov, true, "tolerance 4/sqrt(N)");
      if constexpr (Dim >= 2) {
        // Polar angle uniform on the circle (d = 2); x3/|x| uniform on [-1, 1] (d = 3).
        const double ks = Dim == 2 ? stats::ks_one_sample(iso, [](double t) {
          return (t + std::numbers::pi) / (2.0 * std::numbers::pi);
        })
                                   : stats::ks_one_sample(iso, [](double z) { return 0.5 * (z + 1.0); });
        report.check_below("isotropy_ks_" + label, ks, 1.95 / std::sqrt(static_cast<double>(n)), prov, true,
                           "KS critical value at level 0.001");
      }
    }
  }
  report.metric("worst_error_over_tolerance", worst_ratio, Provenance::streams(n * cases.size() * dts.size(), cfg.seed, 0));
  report.artifact("charfn.csv", csv.str());
  return report;
}

template <int Dim>
ExperimentReport run_experiment_in(const ExperimentConfig& cfg) {
  if (cfg.experiment == "convergence") return run_zero_noise_convergence<Dim>(cfg);
  if (cfg.experiment == "scaling") return run_scaling_check<Dim>(cfg);
  if (cfg.experiment == "large-time") return run_large_time<Dim>(cfg);
  if (cfg.experiment == "exit-dist") return run_exit_distribution<Dim>(cfg);
  if (cfg.experiment == "modulus") return run_modulus_diagnostic<Dim>(cfg);
  if (cfg.experiment == "noise-selftest") return run_noise_selftest<Dim>(cfg);
  throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

// Validates the config and runs the named experiment in dimension cfg.d.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  switch (cfg.d) {
    case 1: return run_experiment_in<1>(cfg);
    case 2: return run_experiment_in<2>(cfg);
    case 3: return run_experiment_in<3>(cfg);
    default: throw ConfigError("d must be 1, 2 or 3");
  }
}

// Writes report.json and the CSV artifacts into dir.
inline void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_text(dir / "report.json", report.dump());
  for (const auto& [name, content] : report.artifacts()) io::write_text(dir / name, content);
}

}  // namespace zeronoise
