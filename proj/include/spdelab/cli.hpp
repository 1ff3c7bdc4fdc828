#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage or schema error,
// 2 hypothesis violated, 3 verdict fail or divergence.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "convergence_lab.hpp"
#include "gdc_cert.hpp"
#include "hjmm.hpp"
#include "ou_levy.hpp"
#include "output.hpp"
#include "scenario_file.hpp"
#include "sde_engine.hpp"
#include "wasserstein.hpp"

namespace spdelab::cli {

enum ExitCode : int { ok = 0, usage = 1, hypothesis = 2, verdict_failed = 3 };

inline std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct Common {
  unsigned threads = 1;
  std::string out_dir;
};

namespace detail {

inline Scenario engine_scenario(const ScenarioDocument& doc) {
  if (doc.scenario) return *doc.scenario;
  Scenario sc = doc.ou->to_scenario();
  sc.name = doc.name;
  return sc;
}

inline int certify(const std::string& path, std::optional<double> lambda1, const Common& c, std::ostream& out) {
  const Json raw = load_document(path);
  ScenarioDocument doc = parse_scenario(raw);
  if (!doc.scenario) throw SchemaError("certify: needs an sde scenario with a matrix operator");
  Scenario& sc = *doc.scenario;
  if (lambda1)
    sc.certify(*lambda1);
  else if (!sc.certificate)
    throw SchemaError("certify: give --lambda1 or a 'certificate' section");
  const GdcCertificate& cert = *sc.certificate;
  const double audit = audit_quadratic_form(sc.space(), sc.op().generator(), sc.p1(), cert);
  out << "lambda0 = " << fmt9(cert.lambda0) << '\n'
      << "lambda1 = " << fmt9(cert.lambda1) << '\n'
      << "alpha = " << fmt9(cert.alpha) << '\n'
      << "beta = " << fmt9(cert.beta_const) << '\n'
      << "epsilon = " << fmt9(cert.epsilon) << '\n'
      << "contraction = " << (cert.contraction() ? "true" : "false") << '\n'
      << "audit_max = " << fmt9(audit) << '\n';

  RunDirectory run(resolve_out_dir(c.out_dir), "certify");
  run.manifest()["scenario"] = raw;
  Json rec = {{"lambda0", cert.lambda0},
              {"lambda1", cert.lambda1},
              {"alpha", cert.alpha},
              {"beta", cert.beta_const},
              {"epsilon", cert.epsilon},
              {"L_F", cert.lipschitz.L_F},
              {"L_sigma", cert.lipschitz.L_sigma},
              {"L_gamma", cert.lipschitz.L_gamma},
              {"contraction", cert.contraction()},
              {"audit_max", audit}};
  run.write_text("certificate.json", rec.dump(2) + "\n");
  run.record_verdict("certify", "quadratic-form-audit", audit <= 1e-8, "max excess " + fmt9(audit));
  run.finish();
  return audit <= 1e-8 ? ok : verdict_failed;
}

struct SimulateFlags {
  std::optional<double> dt;
  std::optional<std::size_t> steps, traj, snapshots;
  std::optional<std::uint64_t> seed;
  bool samples = false;
};

inline int simulate(const std::string& path, const SimulateFlags& f, const Common& c, std::ostream& out) {
  const Json raw = load_document(path);
  const ScenarioDocument doc = parse_scenario(raw);
  const Scenario sc = engine_scenario(doc);
  SimulateSpec s = doc.simulate;
  if (f.dt) s.dt = *f.dt;
  if (f.steps) s.steps = *f.steps;
  if (f.traj) s.traj = *f.traj;
  if (f.seed) s.seed = *f.seed;
  if (f.snapshots) s.snapshots = *f.snapshots;
  if (!(s.dt > 0.0) || s.steps == 0 || s.traj == 0 || s.snapshots == 0)
    throw SchemaError("simulate: dt, steps, traj and snapshots must be positive");

  EnsembleSpec spec;
  spec.replicas = {{doc.initial, 0}};
  spec.dt = s.dt;
  spec.n_steps = s.steps;
  spec.n_traj = s.traj;
  spec.master_seed = s.seed;
  spec.threads = c.threads;
  spec.record_states = f.samples;
  for (std::size_t k = 0; k <= s.snapshots; ++k)
    spec.snapshot_steps.push_back(static_cast<std::size_t>(
        std::llround(static_cast<double>(k * s.steps) / static_cast<double>(s.snapshots))));
  spec.observables = {obs::norm_squared(sc.space(), 0, "second_moment")};
  const std::size_t shown = std::min<std::size_t>(sc.dim(), 16);
  for (std::size_t i = 0; i < shown; ++i) spec.observables.push_back(obs::coordinate(0, i));
  const Ensemble ens = simulate_ensemble(sc, spec);

  CsvTable t = series_table();
  for (std::size_t k = 0; k < ens.n_snapshots(); ++k) {
    const std::string time = format_number(ens.times[k]);
    const stats::Moments m2 = ens.summary(k, 0);
    t.add({time, "second_moment", format_number(m2.mean), format_number(m2.std_err)});
    for (std::size_t i = 0; i < shown; ++i) {
      const auto xs = ens.samples(k, i + 1);
      const stats::Moments m = stats::moments(xs);
      t.add({time, "mean_x" + std::to_string(i), format_number(m.mean), format_number(m.std_err)});
      t.add({time, "var_x" + std::to_string(i), format_number(m.variance), format_number(stats::variance_std_err(xs))});
    }
  }
  RunDirectory run(resolve_out_dir(c.out_dir), "simulate");
  run.manifest()["scenario"] = raw;
  run.manifest()["master_seed"] = s.seed;
  run.manifest()["parameters"] = {{"dt", s.dt}, {"steps", s.steps}, {"traj", s.traj}, {"snapshots", s.snapshots}};
  run.write_csv("simulate.csv", t);
  if (f.samples) run.write_csv("terminal_samples.csv", sample_table(ens.states_at(ens.n_snapshots() - 1)));
  run.finish();
  out << "wrote " << t.size() << " rows to " << (run.path() / "simulate.csv").string() << '\n';
  return ok;
}

inline int w2(const std::string& a, const std::string& b, const std::string& estimator, std::ostream& out) {
  const auto xs = read_sample_csv(a), ys = read_sample_csv(b);
  if (xs.size() != ys.size()) throw SchemaError("w2: sample files have different row counts");
  if (xs.front().size() != ys.front().size()) throw SchemaError("w2: sample files have different column counts");
  const bool one_d = xs.front().size() == 1;
  std::string used = estimator == "auto" ? (one_d ? "sort-1d" : "assignment") : estimator;
  if (used == "1d") used = "sort-1d";
  double d = 0.0;
  if (used == "sort-1d") {
    if (!one_d) throw SchemaError("w2: the sort estimator needs one-column files");
    d = w2_1d(EmpiricalLaw(xs), EmpiricalLaw(ys));
  } else if (used == "assignment") {
    d = w2_assignment(EmpiricalLaw(xs), EmpiricalLaw(ys));
  } else {
    throw SchemaError("w2: unknown estimator '" + estimator + "'");
  }
  out << "W2 = " << fmt9(d) << '\n' << "estimator = " << used << '\n' << "samples = " << xs.size() << '\n';
  return ok;
}

struct OuFlags {
  std::optional<double> horizon, dt;
  std::optional<std::size_t> traj;
  std::optional<std::uint64_t> seed;
};

inline int ou_limit(const std::string& path, const OuFlags& f, const Common& c, std::ostream& out) {
  const Json raw = load_document(path);
  const ScenarioDocument doc = parse_scenario(raw);
  if (!doc.ou) throw SchemaError("ou-limit: needs an ou or kolmogorov scenario");
  const OuScenario& ou = *doc.ou;
  ou.require_hypotheses();
  OuSpec s = doc.ou_run;
  if (f.horizon) s.horizon = *f.horizon;
  if (f.dt) s.dt = *f.dt;
  if (f.traj) s.traj = *f.traj;
  if (f.seed) s.seed = *f.seed;
  if (s.probes.empty()) throw SchemaError("ou-limit: 'ou_run.probes' lists no probe vectors");
  const auto n_steps = static_cast<std::size_t>(std::llround(s.horizon / s.dt));
  if (n_steps == 0 || s.traj == 0) throw SchemaError("ou-limit: horizon, dt and traj must be positive");
  const Scenario sc = engine_scenario(doc);
  const double horizon = static_cast<double>(n_steps) * s.dt;
  const std::vector<double> at = {horizon};
  const Ensemble ens = simulate_ensemble(sc, doc.initial, s.dt, n_steps, s.traj, s.seed, at, c.threads);
  const auto states = ens.states_at(ens.n_snapshots() - 1);

  CsvTable t({"u", "re_quad", "im_quad", "re_emp", "im_emp", "tail_bound", "std_err"});
  RunDirectory run(resolve_out_dir(c.out_dir), "ou-limit");
  bool all = true;
  const HilbertSpace& sp = ou.space();
  const Vector transient = ou.op().semigroup_matrix(horizon) * doc.initial - ou.projection().apply(doc.initial);
  for (std::size_t k = 0; k < s.probes.size(); ++k) {
    const Vector& u = s.probes[k];
    const LimitCf q = limiting_cf(ou, doc.initial, u);
    const EmpiricalCf e = empirical_cf(sp, states, u);
    const double tail = ou_tail_bound(ou, u, horizon) + std::abs(sp.inner(transient, u));
    const double tol = 3.0 / std::sqrt(static_cast<double>(s.traj)) + tail + q.cf_error_bound;
    const double gap = std::abs(e.value - q.value);
    std::ostringstream label;
    for (Eigen::Index i = 0; i < u.size(); ++i) label << (i ? " " : "") << format_number(u[i]);
    t.add({label.str(), format_number(q.value.real()), format_number(q.value.imag()), format_number(e.value.real()),
           format_number(e.value.imag()), format_number(tail), format_number(e.std_err)});
    run.record_verdict("ou-limit", "empirical-cf u=" + label.str(), gap <= tol,
                       "|emp - quad| = " + fmt9(gap) + " vs " + fmt9(tol));
    all = all && gap <= tol;
  }
  run.manifest()["scenario"] = raw;
  run.manifest()["master_seed"] = s.seed;
  run.manifest()["parameters"] = {{"horizon", horizon}, {"dt", s.dt}, {"traj", s.traj}};
  run.write_csv("ou_limit.csv", t);
  run.finish();
  out << "M = " << fmt9(ou.M()) << ", alpha = " << fmt9(ou.alpha()) << ", verdict " << (all ? "pass" : "fail") << '\n';
  return all ? ok : verdict_failed;
}

struct HjmmFlags {
  double beta = 3.0;
  double beta_prime = 1e3;
  std::string volatility = "example";
  std::string factors;
  double horizon = 3.0;
  double dt = 0.0;
  std::size_t traj = 2000;
  std::uint64_t seed = 0;
  std::size_t grid_n = 2048;
  double x_max = 0.0;
  std::size_t snapshots = 30;
  std::vector<double> h0 = {0.04, 0.5, 2.0};
};

inline int hjmm(const HjmmFlags& f, const Common& c, std::ostream& out) {
  if (f.h0.size() != 3) throw SchemaError("hjmm: --h0 takes three numbers c a r for h0(x) = c + a e^{-r x}");
  GridSpec g = default_hjmm_grid(f.beta);
  g.n = f.grid_n;
  if (f.x_max > 0.0) g.x_max = f.x_max;
  const HilbertSpace space = HilbertSpace::hbeta_grid(g);
  HjmmVolatility vol;
  if (f.volatility == "example")
    vol = HjmmVolatility::example(f.beta, f.beta_prime);
  else if (f.volatility == "zero")
    vol = HjmmVolatility::zero(f.beta);
  else if (f.volatility == "file") {
    if (f.factors.empty()) throw SchemaError("hjmm: --volatility file needs --factors <csv>");
    const auto rows = read_sample_csv(f.factors);
    if (rows.size() != space.dim())
      throw SchemaError("hjmm: factor file has " + std::to_string(rows.size()) + " rows, grid has " +
                        std::to_string(space.dim()));
    std::vector<Vector> factors(static_cast<std::size_t>(rows.front().size()), Vector(space.dim()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < factors.size(); ++j)
        factors[j][static_cast<Eigen::Index>(r)] = rows[r][static_cast<Eigen::Index>(j)];
    vol = HjmmVolatility::tabulated(space, std::move(factors), f.beta_prime);
  } else {
    throw SchemaError("hjmm: unknown volatility '" + f.volatility + "'");
  }
  const HjmmModel model = make_hjmm_model(space, vol);
  const Vector h0 = (f.h0[0] + f.h0[1] * (-f.h0[2] * space.grid().array()).exp()).matrix();
  HjmmRunConfig cfg;
  cfg.horizon = f.horizon;
  cfg.dt = f.dt;
  cfg.n_traj = f.traj;
  cfg.seed = f.seed;
  cfg.threads = c.threads;
  cfg.n_snapshots = f.snapshots;
  const HjmmReport rep = hjmm_ergodicity_experiment(model, h0, cfg);

  CsvTable t = series_table();
  if (rep.vanishing) {
    for (std::size_t s = 0; s < rep.times.size(); ++s)
      t.add({format_number(rep.times[s]), "decay", format_number(rep.decay_mean[s]), format_number(rep.decay_std_err[s])});
  } else {
    for (std::size_t s = 0; s < rep.w2_adjacent.size(); ++s)
      t.add({format_number(rep.times[s + 1]), "w2_adjacent", format_number(rep.w2_adjacent[s]), "0"});
  }
  const std::string end = format_number(rep.times.back());
  t.add({end, "L_F", format_number(rep.L_F), "0"});
  t.add({end, "contraction_margin", format_number(rep.margin), "0"});
  t.add({end, "fitted_rate", format_number(rep.fit.rate), format_number(rep.fit.rate_std_err)});
  t.add({end, "theoretical_rate", format_number(rep.theoretical_rate), "0"});
  t.add({end, "long_rate_max_deviation", format_number(rep.long_rate_max_deviation), "0"});

  RunDirectory run(resolve_out_dir(c.out_dir), "hjmm");
  run.manifest()["master_seed"] = f.seed;
  run.manifest()["parameters"] = {{"beta", f.beta},     {"beta_prime", f.beta_prime}, {"volatility", f.volatility},
                                  {"horizon", f.horizon}, {"dt", f.dt},             {"traj", f.traj},
                                  {"grid_n", g.n},       {"x_max", g.x_max},        {"h0", f.h0}};
  run.write_csv("hjmm.csv", t);
  run.record_rate("hjmm", rep.vanishing ? "decay" : "w2_adjacent", rep.fit.rate, rep.theoretical_rate, rep.fit.residual);
  run.record_verdict("hjmm", "hjmm-decay-rate", rep.fit.rate >= 0.85 * rep.theoretical_rate,
                     "fitted " + fmt9(rep.fit.rate) + " vs 0.85 x " + fmt9(rep.theoretical_rate));
  run.record_verdict("hjmm", "long-rate-conserved", rep.long_rate_max_deviation == 0.0,
                     "max deviation " + fmt9(rep.long_rate_max_deviation));
  run.finish();
  out << "L_F = " << fmt9(rep.L_F) << ", margin = " << fmt9(rep.margin) << ", fitted rate = " << fmt9(rep.fit.rate)
      << ", theoretical = " << fmt9(rep.theoretical_rate) << ", verdict " << (rep.passed ? "pass" : "fail") << '\n';
  return rep.passed ? ok : verdict_failed;
}

inline ConvergenceReport stability_report(const Scenario& sc, const ExperimentSpec& e) {
  const auto n_steps = static_cast<std::size_t>(std::llround(e.lab.horizon / e.lab.dt));
  const std::size_t stride = std::max<std::size_t>(1, n_steps / e.lab.n_snapshots);
  const StabilityReport s = stability_check(sc, e.x, e.y, e.lab.dt, n_steps, e.lab.n_traj, e.lab.seed, stride, e.lab.threads);
  ConvergenceReport r;
  r.experiment = "stability";
  r.scenario = sc.name;
  r.series.push_back({"lhs", s.times, s.lhs_mean, s.lhs_std_err});
  r.series.push_back({"rhs", s.times, s.rhs_mean, std::vector<double>(s.times.size(), 0.0)});
  r.series.push_back({"excess", s.times, s.excess_mean, s.excess_std_err});
  r.verdicts.push_back({"stability-bound", s.holds() ? "pass" : "fail",
                        std::to_string(s.violations) + " snapshots with excess above 3 std-err"});
  return r;
}

inline ConvergenceReport run_experiment(const Scenario& sc, const ExperimentSpec& e, unsigned threads) {
  ExperimentSpec local = e;
  local.lab.threads = threads;
  if (e.kind == "vanishing_coeff") return vanishing_coeff_experiment(sc, local.x, local.lab);
  if (e.kind == "limit_existence") return limit_existence_experiment(sc, local.x, local.taus, local.lab);
  if (e.kind == "affine_uniqueness") {
    UniquenessConfig u;
    u.lab = local.lab;
    u.assignment_n = e.assignment_n;
    u.same_limit_tolerance = e.same_limit_tolerance;
    u.shift_tolerance = e.shift_tolerance;
    return affine_uniqueness_experiment(sc, local.x, local.y, u);
  }
  if (e.kind == "divergence") return divergence_experiment(sc, local.x, local.lab);
  return stability_report(sc, local);
}

inline int lab(const std::string& path, const std::string& only, const Common& c, std::ostream& out) {
  const Json raw = load_document(path);
  const ScenarioDocument doc = parse_scenario(raw);
  if (doc.experiments.empty()) throw SchemaError("lab: the scenario lists no experiments");
  const Scenario& sc = *doc.scenario;
  RunDirectory run(resolve_out_dir(c.out_dir), "lab");
  run.manifest()["scenario"] = raw;
  CsvTable summary({"experiment", "invariant", "outcome", "detail"});
  bool any = false, all_pass = true;
  for (const ExperimentSpec& e : doc.experiments) {
    if (!only.empty() && e.label != only) continue;
    any = true;
    const ConvergenceReport r = run_experiment(sc, e, c.threads);
    run.write_csv("lab_" + e.label + ".csv", report_table(r));
    run.record(e.label, r);
    for (const Verdict& v : r.verdicts) summary.add({e.label, v.invariant, v.outcome, v.detail});
    out << e.label << ": " << r.overall() << '\n';
    all_pass = all_pass && r.passed();
  }
  if (!any) throw SchemaError("lab: no experiment labelled '" + only + "'");
  run.write_csv("verdicts.csv", summary);
  run.finish();
  return all_pass ? ok : verdict_failed;
}

inline int report(const std::string& dir, std::ostream& out) {
  const std::filesystem::path p = std::filesystem::path(dir) / "manifest.json";
  std::ifstream in(p);
  if (!in) throw SchemaError("report: no manifest in " + dir);
  Json m;
  try {
    m = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError("report: unreadable manifest: " + std::string(e.what()));
  }
  if (!m.contains("format_version") || m.at("format_version") != kManifestVersion)
    throw SchemaError("report: unsupported manifest version");
  // one row per experiment: diverges beats fail beats pass
  std::vector<std::pair<std::string, std::string>> overall;
  CsvTable verdicts({"experiment", "invariant", "outcome"});
  for (const Json& v : m.value("verdicts", Json::array())) {
    const std::string name = v.at("experiment").get<std::string>(), outcome = v.at("outcome").get<std::string>();
    verdicts.add({name, v.at("invariant").get<std::string>(), outcome});
    auto it = std::find_if(overall.begin(), overall.end(), [&](const auto& e) { return e.first == name; });
    if (it == overall.end()) {
      overall.emplace_back(name, outcome);
      continue;
    }
    if (outcome == "diverges" || (outcome == "fail" && it->second == "pass")) it->second = outcome;
  }
  CsvTable summary({"experiment", "outcome"});
  for (const auto& [name, outcome] : overall) summary.add({name, outcome});
  out << summary.str() << '\n';
  CsvTable rates({"experiment", "rate", "fitted", "theoretical", "residual"});
  for (const Json& r : m.value("rates", Json::array()))
    rates.add({r.at("experiment").get<std::string>(), r.at("name").get<std::string>(), r.at("fitted").get<std::string>(),
               r.at("theoretical").get<std::string>(), r.at("residual").get<std::string>()});
  out << verdicts.str();
  if (rates.size()) out << '\n' << rates.str();
  return ok;
}

}  // namespace detail

/// Parses argv and dispatches; never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"spdelab: long-time behaviour of SPDEs with jumps"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--threads", common.threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  app.add_option("--out", common.out_dir, "output directory (default $SPDELAB_OUT_DIR or ./spdelab-out)");

  std::string scenario;
  auto* certify = app.add_subcommand("certify", "dissipativity certificate for a matrix operator");
  std::optional<double> lambda1;
  certify->add_option("--scenario", scenario, "scenario file")->required();
  certify->add_option("--lambda1", lambda1, "lambda1 of the certificate");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo ensemble statistics");
  detail::SimulateFlags sf;
  simulate->add_option("--scenario", scenario, "scenario file")->required();
  simulate->add_option("--dt", sf.dt);
  simulate->add_option("--steps", sf.steps);
  simulate->add_option("--traj", sf.traj);
  simulate->add_option("--seed", sf.seed);
  simulate->add_option("--snapshots", sf.snapshots);
  simulate->add_flag("--samples", sf.samples, "also write the terminal states");

  auto* w2cmd = app.add_subcommand("w2", "Wasserstein-2 distance between two sample files");
  std::string file_a, file_b, estimator = "auto";
  w2cmd->add_option("a", file_a)->required();
  w2cmd->add_option("b", file_b)->required();
  w2cmd->add_option("--estimator", estimator, "auto, 1d or assignment");

  auto* oucmd = app.add_subcommand("ou-limit", "limiting characteristic function of an OU process");
  detail::OuFlags of;
  oucmd->add_option("--scenario", scenario, "scenario file")->required();
  oucmd->add_option("--horizon", of.horizon);
  oucmd->add_option("--dt", of.dt);
  oucmd->add_option("--traj", of.traj);
  oucmd->add_option("--seed", of.seed);

  auto* hjcmd = app.add_subcommand("hjmm", "HJMM forward-curve ergodicity run");
  detail::HjmmFlags hf;
  hjcmd->add_option("--beta", hf.beta);
  hjcmd->add_option("--beta-prime", hf.beta_prime);
  hjcmd->add_option("--volatility", hf.volatility)->check(CLI::IsMember({"example", "zero", "file"}));
  hjcmd->add_option("--factors", hf.factors, "CSV of tabulated factors (one column per factor)");
  hjcmd->add_option("--horizon", hf.horizon);
  hjcmd->add_option("--dt", hf.dt, "time step (0: one grid cell)");
  hjcmd->add_option("--traj", hf.traj);
  hjcmd->add_option("--seed", hf.seed);
  hjcmd->add_option("--grid-n", hf.grid_n);
  hjcmd->add_option("--x-max", hf.x_max);
  hjcmd->add_option("--snapshots", hf.snapshots);
  hjcmd->add_option("--h0", hf.h0, "c a r for h0(x) = c + a exp(-r x)")->expected(3);

  auto* labcmd = app.add_subcommand("lab", "run the experiments listed in a scenario file");
  std::string only;
  labcmd->add_option("--scenario", scenario, "scenario file")->required();
  labcmd->add_option("--only", only, "run only the experiment with this label");

  auto* repcmd = app.add_subcommand("report", "summarize a run directory");
  std::string run_dir;
  repcmd->add_option("run_dir", run_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (app.exit(e, out, err) == 0) return ok;
    err << app.help();
    return usage;
  }

  try {
    if (*certify) return detail::certify(scenario, lambda1, common, out);
    if (*simulate) return detail::simulate(scenario, sf, common, out);
    if (*w2cmd) return detail::w2(file_a, file_b, estimator, out);
    if (*oucmd) return detail::ou_limit(scenario, of, common, out);
    if (*hjcmd) return detail::hjmm(hf, common, out);
    if (*labcmd) return detail::lab(scenario, only, common, out);
    if (*repcmd) return detail::report(run_dir, out);
  } catch (const HypothesisViolated& e) {
    err << "hypothesis violated: " << e.what() << '\n';
    return hypothesis;
  } catch (const NumericalBlowup& e) {
    err << "diverged: " << e.what() << '\n';
    return verdict_failed;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  }
  return usage;
}

}  // namespace spdelab::cli
