#pragma once

// Experiments on the long-time behaviour: decay towards P1 x under vanishing
// coefficients, existence of limits through the shifted-noise coupling,
// uniqueness on affine subspaces, and the divergence counterexamples.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "gdc_cert.hpp"
#include "hilbert.hpp"
#include "sde_engine.hpp"
#include "statistics.hpp"
#include "wasserstein.hpp"

namespace spdelab {

struct Verdict {
  std::string invariant;
  std::string outcome;  // pass, fail, diverges
  std::string detail;
};

struct RateRow {
  std::string name;
  double fitted = 0.0;
  double residual = 0.0;
  double std_err = 0.0;
  double theoretical = 0.0;
};

struct Series {
  std::string name;
  std::vector<double> times;
  std::vector<double> value;
  std::vector<double> std_err;
};

struct ConvergenceReport {
  std::string experiment;
  std::string scenario;
  std::vector<Series> series;
  std::vector<RateRow> rates;
  std::vector<Verdict> verdicts;

  bool passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.outcome == "pass"; });
  }
  bool diverges() const {
    return std::any_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.outcome == "diverges"; });
  }
  /// pass, diverges or fail.
  std::string overall() const { return diverges() ? "diverges" : passed() ? "pass" : "fail"; }

  const Series& find_series(const std::string& name) const {
    for (const Series& s : series)
      if (s.name == name) return s;
    throw ContractViolation("ConvergenceReport: no series " + name);
  }
};

struct LabConfig {
  double dt = 1e-3;
  double horizon = 10.0;
  std::size_t n_traj = 1000;
  std::size_t n_snapshots = 50;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

namespace detail {

inline std::vector<std::size_t> even_snapshots(std::size_t n_steps, std::size_t count) {
  std::vector<std::size_t> s;
  for (std::size_t k = 0; k <= count; ++k)
    s.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(k * n_steps) / static_cast<double>(count))));
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline std::size_t steps_for(double t, double dt, const char* what) {
  const double k = std::round(t / dt);
  require(t >= 0.0 && std::abs(k * dt - t) <= 1e-9 * std::max(1.0, t), std::string(what) + " must be a multiple of dt");
  return static_cast<std::size_t>(k);
}

inline const GdcCertificate& require_contraction(const Scenario& sc) {
  if (!sc.certificate) throw HypothesisViolated("scenario has no dissipativity certificate");
  if (!sc.certificate->contraction())
    throw HypothesisViolated("contraction margin epsilon = " + std::to_string(sc.certificate->epsilon) + " is not positive");
  return *sc.certificate;
}

inline Verdict verdict(std::string invariant, bool ok, std::string detail) {
  return {std::move(invariant), ok ? "pass" : "fail", std::move(detail)};
}

}  // namespace detail

/// Audits the vanishing-coefficient hypotheses on probes: ran(P1) in ker(A),
/// A leaves ker(P1) invariant up to P1 A P0 = 0, and F, sigma, gamma vanish on ran(P1).
inline void audit_vanishing_hypotheses(const Scenario& sc, std::size_t probes = 32, std::uint64_t seed = 0x56414eULL) {
  if (!sc.flags.vanishing_on_H1) throw HypothesisViolated("scenario does not declare vanishing coefficients on H1");
  const HilbertSpace& space = sc.space();
  const Projection& p1 = sc.p1();
  for (const Vector& v : probe_vectors(sc.dim(), probes, seed)) {
    const double scale = std::max(1.0, space.norm(v));
    const Vector pv = p1.apply(v);
    if (space.norm(sc.op().apply_generator(pv)) > 1e-10 * scale)
      throw HypothesisViolated("vanishing coefficients: ran(P1) is not contained in ker(A)");
    if (space.norm(p1.apply(sc.op().apply_generator(p1.complement(v)))) > 1e-8 * scale)
      throw HypothesisViolated("vanishing coefficients: the semigroup does not leave ker(P1) invariant");
    if (space.norm(sc.drift(pv)) > 1e-10 * scale)
      throw HypothesisViolated("vanishing coefficients: F does not vanish on ran(P1)");
    const Matrix s = sc.diffusion(pv);
    if (s.size() && s.cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw HypothesisViolated("vanishing coefficients: sigma does not vanish on ran(P1)");
    if (sc.jumps().active()) {
      Engine engine = make_engine(seed, StreamTag::probe);
      for (int k = 0; k < 16; ++k)
        if (space.norm(sc.jumps().gamma(pv, sc.jumps().marks.sample(engine))) > 1e-10 * scale)
          throw HypothesisViolated("vanishing coefficients: gamma does not vanish on ran(P1)");
    }
    if (space.norm(p1.apply(sc.drift(v))) > 1e-8 * scale)
      throw HypothesisViolated("vanishing coefficients: P1 F does not vanish");
    const Matrix sv = sc.diffusion(v);
    for (Eigen::Index j = 0; j < sv.cols(); ++j)
      if (space.norm(p1.apply(sv.col(j))) > 1e-8 * scale)
        throw HypothesisViolated("vanishing coefficients: P1 sigma does not vanish");
  }
}

/// E||X_t - P1 x||^2 against e^{-eps t} ||P0 x||^2 and its fitted decay rate.
inline ConvergenceReport vanishing_coeff_experiment(const Scenario& sc, const Vector& x, const LabConfig& cfg) {
  audit_vanishing_hypotheses(sc);
  const GdcCertificate& cert = detail::require_contraction(sc);
  const HilbertSpace& space = sc.space();
  const std::size_t n_steps = detail::steps_for(cfg.horizon, cfg.dt, "horizon");
  const Vector target = sc.p1().apply(x);
  EnsembleSpec spec;
  spec.replicas = {{x, 0}};
  spec.dt = cfg.dt;
  spec.n_steps = n_steps;
  spec.n_traj = cfg.n_traj;
  spec.master_seed = cfg.seed;
  spec.threads = cfg.threads;
  spec.snapshot_steps = detail::even_snapshots(n_steps, cfg.n_snapshots);
  spec.observables = {obs::deviation_squared(space, 0, target, "dev_sq")};
  const Ensemble ens = simulate_ensemble(sc, spec);

  ConvergenceReport rep;
  rep.experiment = "vanishing_coeff";
  rep.scenario = sc.name;
  Series dev{"dev_sq", ens.times, {}, {}}, bound{"bound", ens.times, {}, {}};
  const double p0 = space.norm_squared(x - target);
  std::size_t violations = 0;
  for (std::size_t s = 0; s < ens.n_snapshots(); ++s) {
    const stats::Moments m = ens.summary(s, 0);
    const double b = std::exp(-cert.epsilon * ens.times[s]) * p0;
    dev.value.push_back(m.mean);
    dev.std_err.push_back(m.std_err);
    bound.value.push_back(b);
    bound.std_err.push_back(0.0);
    if (m.mean > b + 3.0 * m.std_err + 1e-12 * (1.0 + p0)) ++violations;
  }
  const stats::RateFit fit = stats::exponential_rate_fit(dev.times, dev.value);
  rep.rates.push_back({"decay", fit.rate, fit.residual, fit.rate_std_err, cert.epsilon});
  rep.verdicts.push_back(detail::verdict("decay-bound", violations == 0,
                                         std::to_string(violations) + " snapshots above e^{-eps t}||P0 x||^2"));
  rep.verdicts.push_back(detail::verdict("decay-rate", fit.rate >= 0.85 * cert.epsilon,
                                         "fitted " + std::to_string(fit.rate) + " vs 0.85 eps = " +
                                             std::to_string(0.85 * cert.epsilon)));
  rep.series = {std::move(dev), std::move(bound)};
  return rep;
}

/// The Cauchy diagnostic sqrt(E||Y_t^{x,tau} - X_{t+tau}^x||^2) for each tau, with
/// Deterministic P1 component audited on the same ensemble and delta fitted from the deterministic P1 path.
inline ConvergenceReport limit_existence_experiment(const Scenario& sc, const Vector& x, const std::vector<double>& taus,
                                                    const LabConfig& cfg) {
  const GdcCertificate& cert = detail::require_contraction(sc);
  const HilbertSpace& space = sc.space();
  require(!taus.empty(), "limit_existence: empty tau list");
  const std::size_t n_steps = detail::steps_for(cfg.horizon, cfg.dt, "horizon");
  std::vector<std::size_t> tau_steps;
  for (double tau : taus) tau_steps.push_back(detail::steps_for(tau, cfg.dt, "tau"));
  const std::size_t max_tau = *std::max_element(tau_steps.begin(), tau_steps.end());
  const std::size_t total = n_steps + max_tau;

  EnsembleSpec spec;
  spec.replicas.push_back({x, 0});
  for (std::size_t ts : tau_steps) spec.replicas.push_back({x, ts});
  spec.dt = cfg.dt;
  spec.n_steps = total;
  spec.n_traj = cfg.n_traj;
  spec.master_seed = cfg.seed;
  spec.threads = cfg.threads;
  // local grid t_q = q * n_steps / n_snapshots requested for every tau
  std::vector<std::size_t> local = detail::even_snapshots(n_steps, cfg.n_snapshots);
  for (std::size_t q : local) {
    spec.snapshot_steps.push_back(q);
    for (std::size_t ts : tau_steps) spec.snapshot_steps.push_back(q + ts);
  }
  for (std::size_t r = 0; r < tau_steps.size(); ++r)
    spec.observables.push_back(obs::distance_squared(space, r + 1, 0, "cauchy_" + std::to_string(r)));
  // deterministic P1: P1 X_t paired against a fixed generic direction, and the P1 coordinates themselves
  Vector dir = probe_vectors(sc.dim(), 1, 0x41324155ULL).front();
  spec.observables.push_back(obs::pairing(space, 0, sc.p1().apply(dir), "p1_pairing"));
  spec.observables.push_back(
      {"p1_norm", [p = sc.p1(), space](std::span<const Vector> s) { return space.norm(p.apply(s[0])); }});
  const Ensemble ens = simulate_ensemble(sc, spec);
  const std::size_t o_pair = tau_steps.size(), o_norm = tau_steps.size() + 1;

  ConvergenceReport rep;
  rep.experiment = "limit_existence";
  rep.scenario = sc.name;

  // deterministic-P1 audit: zero sample variance of the P1 component at every snapshot
  double worst_var = 0.0;
  Series p1_path{"p1_norm", {}, {}, {}};
  for (std::size_t s = 0; s < ens.n_snapshots(); ++s) {
    const stats::Moments m = ens.summary(s, o_pair);
    worst_var = std::max(worst_var, m.variance / (1.0 + m.mean * m.mean));
    if (ens.snapshot_steps[s] <= n_steps) {
      p1_path.times.push_back(ens.times[s]);
      p1_path.value.push_back(ens.summary(s, o_norm).mean);
      p1_path.std_err.push_back(0.0);
    }
  }
  if (worst_var > 1e-20)
    throw HypothesisViolated("deterministic P1 violated: P1 X_t has sample variance " + std::to_string(worst_var));

  // delta from the deterministic P1 path: infinity if P1 X is constant, negative if it grows
  double delta = std::numeric_limits<double>::infinity();
  {
    const auto& v = p1_path.value;
    const double last = v.back();
    double spread = 0.0;
    for (double a : v) spread = std::max(spread, std::abs(a - v.front()));
    if (spread > 1e-12 * (1.0 + std::abs(v.front()))) {
      std::vector<double> t, dist;
      for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        t.push_back(p1_path.times[i]);
        dist.push_back(std::abs(v[i] - last));
      }
      const stats::RateFit growth = stats::exponential_rate_fit(p1_path.times, v);
      delta = growth.rate < -1e-3 ? growth.rate : stats::exponential_rate_fit(t, dist).rate;
    }
  }
  const double theory = std::min(cert.epsilon, delta) / 2.0;
  rep.rates.push_back({"delta", delta, 0.0, 0.0, std::numeric_limits<double>::quiet_NaN()});
  rep.series.push_back(p1_path);
  rep.verdicts.push_back(detail::verdict("deterministic-P1", true, "max normalized variance " + std::to_string(worst_var)));

  for (std::size_t r = 0; r < tau_steps.size(); ++r) {
    Series diag{"cauchy_tau_" + std::to_string(taus[r]), {}, {}, {}};
    for (std::size_t q : local) {
      const auto it = std::find(ens.snapshot_steps.begin(), ens.snapshot_steps.end(), q + tau_steps[r]);
      const auto s = static_cast<std::size_t>(it - ens.snapshot_steps.begin());
      const stats::Moments m = ens.summary(s, r);
      const double root = std::sqrt(std::max(0.0, m.mean));
      diag.times.push_back(static_cast<double>(q) * cfg.dt);
      diag.value.push_back(root);
      diag.std_err.push_back(root > 0.0 ? m.std_err / (2.0 * root) : 0.0);
    }
    const stats::RateFit fit = stats::exponential_rate_fit(diag.times, diag.value);
    rep.rates.push_back({diag.name, fit.rate, fit.residual, fit.rate_std_err, theory});
    const bool grows = !fit.degenerate && (fit.rate < -1e-2 || delta < 0.0);
    Verdict v;
    v.invariant = "cauchy-rate tau=" + std::to_string(taus[r]);
    v.detail = "fitted " + std::to_string(fit.rate) + " vs 0.85 min(eps, delta)/2 = " + std::to_string(0.85 * theory);
    if (grows)
      v.outcome = "diverges";
    else
      v.outcome = fit.rate >= 0.85 * theory ? "pass" : "fail";
    rep.verdicts.push_back(v);
    rep.series.push_back(std::move(diag));
  }
  return rep;
}

struct UniquenessConfig {
  LabConfig lab;
  std::size_t assignment_n = 512;
  double same_limit_tolerance = 0.05;
  double shift_tolerance = 0.02;
};

/// Common-noise comparison of X^x and X^y: contraction towards each other when
/// P1 x = P1 y, a limit shift of ||P1 x - P1 y|| otherwise.
inline ConvergenceReport affine_uniqueness_experiment(const Scenario& sc, const Vector& x, const Vector& y,
                                                      const UniquenessConfig& ucfg) {
  const LabConfig& cfg = ucfg.lab;
  const GdcCertificate& cert = detail::require_contraction(sc);
  const HilbertSpace& space = sc.space();
  const std::size_t n_steps = detail::steps_for(cfg.horizon, cfg.dt, "horizon");
  const Vector dp = sc.p1().apply(x - y);
  const double shift = space.norm(dp);
  const bool same = shift <= 1e-12;

  EnsembleSpec spec;
  spec.replicas = {{x, 0}, {y, 0}};
  spec.dt = cfg.dt;
  spec.n_steps = n_steps;
  spec.n_traj = cfg.n_traj;
  spec.master_seed = cfg.seed;
  spec.threads = cfg.threads;
  spec.snapshot_steps = detail::even_snapshots(n_steps, cfg.n_snapshots);
  spec.observables = {obs::distance_squared(space, 0, 1, "dist_sq")};
  if (!same) {
    const Vector e = dp / shift;
    spec.observables.push_back(obs::pairing(space, 0, e, "p1_coord_x"));
    spec.observables.push_back(obs::pairing(space, 1, e, "p1_coord_y"));
  }
  spec.record_states = same;
  const Ensemble ens = simulate_ensemble(sc, spec);

  ConvergenceReport rep;
  rep.experiment = "affine_uniqueness";
  rep.scenario = sc.name;
  Series dist{"dist_sq", ens.times, {}, {}};
  for (std::size_t s = 0; s < ens.n_snapshots(); ++s) {
    const stats::Moments m = ens.summary(s, 0);
    dist.value.push_back(m.mean);
    dist.std_err.push_back(m.std_err);
  }
  const std::size_t last = ens.n_snapshots() - 1;
  if (same) {
    const double d0 = space.norm_squared(x - y);
    std::size_t violations = 0;
    for (std::size_t s = 0; s < ens.n_snapshots(); ++s)
      if (dist.value[s] > std::exp(-cert.epsilon * ens.times[s]) * d0 + 3.0 * dist.std_err[s] + 1e-12 * (1.0 + d0))
        ++violations;
    const stats::RateFit fit = stats::exponential_rate_fit(dist.times, dist.value);
    rep.rates.push_back({"contraction", fit.rate, fit.residual, fit.rate_std_err, cert.epsilon});
    rep.verdicts.push_back(detail::verdict("contraction-bound", violations == 0,
                                           std::to_string(violations) + " snapshots above e^{-eps t}||x-y||^2"));
    const std::size_t n = std::min(ucfg.assignment_n, cfg.n_traj);
    const auto xs = ens.states_at(last, 0), ys = ens.states_at(last, 1);
    const EmpiricalLaw lx(std::vector<Vector>(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(n)));
    const EmpiricalLaw ly(std::vector<Vector>(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(n)));
    const double w2 = w2_assignment(lx, ly, space);
    rep.series.push_back({"terminal_w2_assignment", {ens.times[last]}, {w2}, {0.0}});
    rep.verdicts.push_back(detail::verdict("same-limit-w2", w2 < ucfg.same_limit_tolerance,
                                           "terminal W2 " + std::to_string(w2) + " (N = " + std::to_string(n) + ")"));
  } else {
    Series w2s{"p1_w2", {}, {}, {}};
    for (std::size_t s = ens.n_snapshots() / 2; s < ens.n_snapshots(); ++s) {
      const auto a = ens.samples(s, 1), b = ens.samples(s, 2);
      w2s.times.push_back(ens.times[s]);
      w2s.value.push_back(w2_1d(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end())));
      w2s.std_err.push_back(0.0);
    }
    bool stable = true;
    for (double v : w2s.value) stable = stable && std::abs(v - shift) <= ucfg.shift_tolerance;
    rep.verdicts.push_back(detail::verdict("distinct-limit-shift", stable,
                                           "terminal P1-coordinate W2 " + std::to_string(w2s.value.back()) +
                                               " vs ||P1 x - P1 y|| = " + std::to_string(shift)));
    rep.series.push_back(std::move(w2s));
  }
  rep.series.insert(rep.series.begin(), std::move(dist));
  return rep;
}

/// Counterexample probe: per-coordinate variance slopes and growth of E||X_t||^2.
/// A NumericalBlowup is reported as divergence.
inline ConvergenceReport divergence_experiment(const Scenario& sc, const Vector& x, const LabConfig& cfg) {
  const HilbertSpace& space = sc.space();
  const std::size_t n_steps = detail::steps_for(cfg.horizon, cfg.dt, "horizon");
  EnsembleSpec spec;
  spec.replicas = {{x, 0}};
  spec.dt = cfg.dt;
  spec.n_steps = n_steps;
  spec.n_traj = cfg.n_traj;
  spec.master_seed = cfg.seed;
  spec.threads = cfg.threads;
  spec.snapshot_steps = detail::even_snapshots(n_steps, cfg.n_snapshots);
  spec.observables = {obs::norm_squared(space, 0, "second_moment")};
  for (std::size_t i = 0; i < sc.dim(); ++i) spec.observables.push_back(obs::coordinate(0, i));

  ConvergenceReport rep;
  rep.experiment = "divergence";
  rep.scenario = sc.name;
  Ensemble ens;
  try {
    ens = simulate_ensemble(sc, spec);
  } catch (const NumericalBlowup& e) {
    rep.verdicts.push_back({"second-moment-growth", "diverges", e.what()});
    return rep;
  }
  const std::size_t ns = ens.n_snapshots();
  Series second{"second_moment", ens.times, {}, {}};
  for (std::size_t s = 0; s < ns; ++s) {
    const stats::Moments m = ens.summary(s, 0);
    second.value.push_back(m.mean);
    second.std_err.push_back(m.std_err);
  }
  const std::size_t half = ns / 2;
  const std::span<const double> t_late(ens.times.data() + half, ns - half);
  for (std::size_t i = 0; i < sc.dim(); ++i) {
    Series var{"var_x" + std::to_string(i), ens.times, {}, {}};
    for (std::size_t s = 0; s < ns; ++s) {
      const auto xs = ens.samples(s, i + 1);
      var.value.push_back(stats::moments(xs).variance);
      var.std_err.push_back(stats::variance_std_err(xs));
    }
    const stats::LinearFit lf = stats::linear_fit(t_late, std::span<const double>(var.value.data() + half, ns - half));
    rep.rates.push_back({"var_slope_x" + std::to_string(i), lf.slope, lf.rms_residual, lf.slope_std_err,
                         std::numeric_limits<double>::quiet_NaN()});
    rep.series.push_back(std::move(var));
  }
  const stats::RateFit growth =
      stats::exponential_rate_fit(t_late, std::span<const double>(second.value.data() + half, ns - half));
  rep.rates.push_back({"second_moment_log_growth", -growth.rate, growth.residual, growth.rate_std_err,
                       std::numeric_limits<double>::quiet_NaN()});
  const double mid = second.value[half], end = second.value.back();
  const double ratio = mid > 0.0 ? end / mid : 0.0;
  // growth by a quarter between T/2 and T, with the per-trajectory increment 5 std-err above zero
  std::vector<double> increment(ens.n_traj);
  const auto at_mid = ens.samples(half, 0), at_end = ens.samples(ns - 1, 0);
  for (std::size_t i = 0; i < ens.n_traj; ++i) increment[i] = at_end[i] - at_mid[i];
  const stats::Moments inc = stats::moments(increment);
  const bool diverging = ratio >= 1.25 && inc.mean > 5.0 * inc.std_err;
  rep.verdicts.push_back({"second-moment-growth", diverging ? "diverges" : "pass",
                          "E||X||^2 ratio T/(T/2) = " + std::to_string(ratio) + ", log-growth " +
                              std::to_string(-growth.rate)});
  rep.series.insert(rep.series.begin(), std::move(second));
  return rep;
}

}  // namespace spdelab
