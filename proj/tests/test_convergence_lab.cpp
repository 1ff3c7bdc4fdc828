#include <gtest/gtest.h>

#include <cmath>

#include <spdelab/convergence_lab.hpp>
#include <spdelab/hjmm.hpp>

using namespace spdelab;

namespace {

const Verdict& find_verdict(const ConvergenceReport& r, const std::string& prefix) {
  for (const Verdict& v : r.verdicts)
    if (v.invariant.rfind(prefix, 0) == 0) return v;
  throw std::runtime_error("no verdict " + prefix);
}

const RateRow& find_rate(const ConvergenceReport& r, const std::string& name) {
  for (const RateRow& row : r.rates)
    if (row.name == name) return row;
  throw std::runtime_error("no rate " + name);
}

// A = diag(-1, 0), P1 = span(e2), optional additive noise on the first coordinate.
Scenario decoupled(bool noise) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  Scenario sc(OperatorModel::matrix(e, (Vector(2) << -1.0, 0.0).finished().asDiagonal()),
              Projection::coordinate(e, {false, true}));
  sc.name = noise ? "decoupled_ou" : "decoupled_flow";
  if (noise) {
    sc.set_noise(QWienerSpec::diagonal(Vector::Ones(1)));
    sc.set_constant_diffusion((Matrix(2, 1) << 1.0, 0.0).finished());
  }
  sc.flags.vanishing_on_H1 = !noise;
  sc.flags.deterministic_P1 = true;
  sc.certify(0.0);
  return sc;
}

LabConfig lab(double dt, double horizon, std::size_t traj, std::uint64_t seed) {
  LabConfig c;
  c.dt = dt;
  c.horizon = horizon;
  c.n_traj = traj;
  c.n_snapshots = 40;
  c.seed = seed;
  return c;
}

// Counterexample (b): A = [[-1,1],[0,1]], noise in the first coordinate only.
Scenario counterexample_b() {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  Scenario sc(OperatorModel::matrix(e, (Matrix(2, 2) << -1, 1, 0, 1).finished()),
              Projection::coordinate(e, {false, true}));
  sc.set_noise(QWienerSpec::diagonal(Vector::Ones(1)));
  sc.set_constant_diffusion((Matrix(2, 1) << 1.0, 0.0).finished());
  sc.flags.deterministic_P1 = true;
  sc.certify(1.5);
  return sc;
}

// Counterexample (a): A = diag(-1, 0), identity noise, so the second coordinate is a Brownian motion.
Scenario counterexample_a() {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  Scenario sc(OperatorModel::matrix(e, (Vector(2) << -1.0, 0.0).finished().asDiagonal()),
              Projection::coordinate(e, {false, true}));
  sc.set_noise(QWienerSpec::diagonal(Vector::Ones(2)));
  sc.set_constant_diffusion(Matrix::Identity(2, 2));
  sc.certify(0.0);
  return sc;
}

}  // namespace

TEST(VanishingCoeff, StartOnInvariantPoint) {
  const Scenario sc = decoupled(false);
  const ConvergenceReport r = vanishing_coeff_experiment(sc, (Vector(2) << 0.0, 4.0).finished(), lab(1e-2, 2.0, 5, 1));
  for (double v : r.find_series("dev_sq").value) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(std::isinf(find_rate(r, "decay").fitted));
}

TEST(VanishingCoeff, LinearDemoRate) {
  const Scenario sc = decoupled(false);
  EXPECT_NEAR(sc.certificate->epsilon, 2.0, 1e-8);
  const ConvergenceReport r = vanishing_coeff_experiment(sc, (Vector(2) << 3.0, -1.0).finished(), lab(1e-3, 3.0, 2, 1));
  EXPECT_NEAR(find_rate(r, "decay").fitted, 2.0, 1e-9);
  EXPECT_TRUE(r.passed());
}

TEST(VanishingCoeff, MissingFlagNamesHypothesis) {
  Scenario sc = decoupled(false);
  sc.flags.vanishing_on_H1 = false;
  EXPECT_THROW(vanishing_coeff_experiment(sc, Vector::Ones(2), lab(1e-2, 1.0, 2, 1)), HypothesisViolated);
  const Scenario noisy = decoupled(true);
  Scenario flagged = noisy;
  flagged.flags.vanishing_on_H1 = true;
  // additive noise does not vanish on ran(P1)
  try {
    vanishing_coeff_experiment(flagged, Vector::Ones(2), lab(1e-2, 1.0, 2, 1));
    FAIL();
  } catch (const HypothesisViolated& e) {
    EXPECT_NE(std::string(e.what()).find("sigma"), std::string::npos);
  }
}

TEST(VanishingCoeff, AgreesWithHjmmExperiment) {
  const double beta = 3.0;
  const HilbertSpace h = HilbertSpace::hbeta_grid(default_hjmm_grid(beta));
  const HjmmModel model = make_hjmm_model(h, HjmmVolatility::example(beta, 1e3));
  Engine rng = make_engine(5, StreamTag::probe);
  const Vector h0 = random_curve(h, rng);
  const double dx = h.grid()[1] - h.grid()[0];
  HjmmRunConfig hcfg;
  hcfg.dt = dx;
  hcfg.horizon = 300 * dx;
  hcfg.n_traj = 200;
  hcfg.n_snapshots = 30;
  hcfg.seed = 6;
  const HjmmReport hr = hjmm_ergodicity_experiment(model, h0, hcfg);
  LabConfig cfg;
  cfg.dt = dx;
  cfg.horizon = 300 * dx;
  cfg.n_traj = 200;
  cfg.n_snapshots = 30;
  cfg.seed = 6;
  const ConvergenceReport lr = vanishing_coeff_experiment(hjmm_scenario(model), h0, cfg);
  EXPECT_NEAR(find_rate(lr, "decay").fitted, hr.fit.rate, 1e-9 * std::abs(hr.fit.rate));
  EXPECT_NEAR(find_rate(lr, "decay").theoretical, hr.theoretical_rate, 1e-12);
}

TEST(LimitExistence, OuRateIsHalfEpsilon) {
  const Scenario sc = decoupled(true);
  const double eps = sc.certificate->epsilon;
  const ConvergenceReport r =
      limit_existence_experiment(sc, (Vector(2) << 5.0, 7.0).finished(), {0.5, 1.0}, lab(5e-3, 5.0, 2000, 7));
  EXPECT_TRUE(std::isinf(find_rate(r, "delta").fitted));
  for (const std::string name : {"cauchy_tau_0.500000", "cauchy_tau_1.000000"}) {
    const RateRow& row = find_rate(r, name);
    EXPECT_NEAR(row.theoretical, eps / 2.0, 1e-12);
    EXPECT_NEAR(row.fitted / (eps / 2.0), 1.0, 0.15) << name;
  }
  EXPECT_TRUE(r.passed());
}

TEST(LimitExistence, ZeroShiftIsZero) {
  const Scenario sc = decoupled(true);
  const ConvergenceReport r =
      limit_existence_experiment(sc, (Vector(2) << 5.0, 7.0).finished(), {0.0, 0.5}, lab(5e-3, 2.0, 100, 8));
  for (double v : r.find_series("cauchy_tau_0.000000").value) EXPECT_EQ(v, 0.0);
}

TEST(LimitExistence, CounterexampleDiverges) {
  const Scenario sc = counterexample_b();
  const ConvergenceReport r =
      limit_existence_experiment(sc, (Vector(2) << 0.0, 1.0).finished(), {0.5, 1.0}, lab(1e-2, 5.0, 500, 9));
  EXPECT_LT(find_rate(r, "delta").fitted, 0.0);
  EXPECT_TRUE(r.diverges());
  EXPECT_EQ(r.overall(), "diverges");
}

TEST(LimitExistence, RandomP1IsHypothesisViolation) {
  const Scenario sc = counterexample_a();
  EXPECT_THROW(limit_existence_experiment(sc, (Vector(2) << 1.0, 0.0).finished(), {0.5}, lab(1e-2, 1.0, 50, 10)),
               HypothesisViolated);
}

TEST(LimitExistence, TriangleConsistency) {
  // E||Y^{a+b} - X_{t+a+b}||^2 is within (d_a + d_b) of the adjacent diagnostics via the coupling
  const Scenario sc = decoupled(true);
  const ConvergenceReport r =
      limit_existence_experiment(sc, (Vector(2) << 5.0, 7.0).finished(), {0.5, 1.0, 1.5}, lab(5e-3, 3.0, 2000, 11));
  const Series& d05 = r.find_series("cauchy_tau_0.500000");
  const Series& d10 = r.find_series("cauchy_tau_1.000000");
  const Series& d15 = r.find_series("cauchy_tau_1.500000");
  for (std::size_t q = 0; q < d15.value.size(); ++q) {
    EXPECT_GE(d05.value[q], 0.0);
    const double slack = 3.0 * (d05.std_err[q] + d10.std_err[q] + d15.std_err[q]);
    // same-law increments: d(1.5) <= d(0.5) + d(1.0) after transport of the first leg
    EXPECT_LE(d15.value[q], d05.value[q] + d10.value[q] + slack);
  }
}

TEST(AffineUniqueness, EqualStartsGiveZero) {
  const Scenario sc = decoupled(true);
  UniquenessConfig u;
  u.lab = lab(1e-2, 1.0, 100, 12);
  const Vector x = (Vector(2) << 1.0, 2.0).finished();
  const ConvergenceReport r = affine_uniqueness_experiment(sc, x, x, u);
  for (double v : r.find_series("dist_sq").value) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(r.passed());
}

TEST(AffineUniqueness, ContractionAtEpsilon) {
  const Scenario sc = decoupled(true);
  UniquenessConfig u;
  u.lab = lab(1e-3, 8.0, 200, 13);
  u.assignment_n = 200;
  const ConvergenceReport r = affine_uniqueness_experiment(sc, (Vector(2) << 5.0, 7.0).finished(),
                                                           (Vector(2) << -2.0, 7.0).finished(), u);
  // the pathwise identity makes the distance deterministic, e^{-2t} * 49
  EXPECT_NEAR(find_rate(r, "contraction").fitted, 2.0, 1e-6);
  EXPECT_TRUE(r.passed());
}

TEST(AffineUniqueness, DistinctLimitsAreShifted) {
  const Scenario sc = decoupled(true);
  UniquenessConfig u;
  u.lab = lab(5e-3, 5.0, 2000, 14);
  const ConvergenceReport r = affine_uniqueness_experiment(sc, (Vector(2) << 5.0, 7.0).finished(),
                                                           (Vector(2) << -2.0, 3.0).finished(), u);
  for (double v : r.find_series("p1_w2").value) EXPECT_NEAR(v, 4.0, 0.02);
  EXPECT_TRUE(find_verdict(r, "distinct-limit-shift").outcome == "pass");
}

TEST(Divergence, CounterexampleASlopeOne) {
  const Scenario sc = counterexample_a();
  const ConvergenceReport r = divergence_experiment(sc, (Vector(2) << 1.0, 0.0).finished(), lab(1e-2, 20.0, 10000, 21));
  EXPECT_NEAR(find_rate(r, "var_slope_x1").fitted, 1.0, 0.1);
  EXPECT_NEAR(find_rate(r, "var_slope_x0").fitted, 0.0, 0.05);
  EXPECT_EQ(r.overall(), "diverges");
}

TEST(Divergence, CounterexampleBExponential) {
  const Scenario sc = counterexample_b();
  const ConvergenceReport r = divergence_experiment(sc, (Vector(2) << 0.0, 1.0).finished(), lab(1e-2, 10.0, 2000, 31));
  EXPECT_NEAR(find_rate(r, "second_moment_log_growth").fitted, 2.0, 0.1);
  EXPECT_EQ(r.overall(), "diverges");
}

TEST(Divergence, StableScenarioPasses) {
  const Scenario sc = decoupled(true);
  const ConvergenceReport r = divergence_experiment(sc, (Vector(2) << 1.0, 2.0).finished(), lab(1e-2, 10.0, 2000, 22));
  EXPECT_EQ(r.overall(), "pass");
}

TEST(Divergence, BlowupReportedAsDivergence) {
  const HilbertSpace e = HilbertSpace::euclidean(1);
  Scenario sc(OperatorModel::matrix(e, Matrix::Constant(1, 1, 4.0)), Projection::identity(e));
  const ConvergenceReport r = divergence_experiment(sc, Vector::Ones(1), lab(1e-2, 10.0, 3, 1));
  EXPECT_EQ(r.overall(), "diverges");
}

TEST(Reproducibility, VerdictsStableAcrossSeeds) {
  const Scenario sc = decoupled(true);
  const Scenario bad = counterexample_a();
  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    EXPECT_EQ(limit_existence_experiment(sc, (Vector(2) << 5.0, 7.0).finished(), {0.5}, lab(1e-2, 5.0, 1000, seed))
                  .overall(),
              "pass")
        << seed;
    EXPECT_EQ(divergence_experiment(bad, (Vector(2) << 1.0, 0.0).finished(), lab(1e-2, 10.0, 1000, seed)).overall(),
              "diverges")
        << seed;
  }
}
