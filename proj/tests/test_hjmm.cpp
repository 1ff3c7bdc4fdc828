#include <gtest/gtest.h>

#include <cmath>

#include <spdelab/hjmm.hpp>

using namespace spdelab;

namespace {

// The printed formula evaluated in 30-digit arithmetic for L_sigma = 1, L_gamma = 0, M = 1/3, beta = 3.
constexpr double kLfInfinity = 0.780284440617399054;
constexpr double kLfThousand = 0.837397959879669081;

HilbertSpace grid(double beta) { return HilbertSpace::hbeta_grid(default_hjmm_grid(beta)); }

}  // namespace

TEST(HjmmDrift, ZeroVolatilityGivesZero) {
  const HilbertSpace h = grid(3.0);
  Engine rng = make_engine(1, StreamTag::probe);
  const HjmmDrift d = hjmm_drift(h, HjmmVolatility::zero(3.0), random_curve(h, rng));
  EXPECT_TRUE(d.curve.isZero(0.0));
}

TEST(HjmmDrift, SingleExponentialFactor) {
  const double beta = 3.0;
  const HilbertSpace h = grid(beta);
  const Vector f = (-beta * h.grid().array()).exp().matrix();
  const HjmmVolatility vol = HjmmVolatility::tabulated(h, {f}, std::numeric_limits<double>::infinity());
  const HjmmDrift d = hjmm_drift(h, vol, h.constant(0.0));
  for (Eigen::Index i = 0; i < h.grid().size(); ++i) {
    const double t = h.grid()[i];
    EXPECT_NEAR(d.curve[i], std::exp(-beta * t) * (1.0 - std::exp(-beta * t)) / beta, 1e-4) << "x=" << t;
  }
}

TEST(HjmmDrift, ConstantCurveIsStationary) {
  const HilbertSpace h = grid(3.0);
  const HjmmVolatility vol = HjmmVolatility::example(3.0, 1e3);
  for (double c : {-0.5, 0.0, 0.04, 2.0}) {
    EXPECT_TRUE(hjmm_drift(h, vol, h.constant(c)).curve.isZero(0.0));
    EXPECT_TRUE(vol.sigma(h, h.constant(c)).isZero(0.0));
  }
}

TEST(LfBound, PrintedExampleValues) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(lf_bound(1.0, 0.0, 1.0 / 3.0, 3.0, inf), kLfInfinity, 1e-12);
  const double v = lf_bound(1.0, 0.0, 1.0 / 3.0, 3.0, 1e3);
  EXPECT_NEAR(v, kLfThousand, 1e-12);
  EXPECT_LT(v, 1.0);
  EXPECT_EQ(v, lf_bound(1.0, 0.0, 1.0 / 3.0, 3.0, 1e3));
}

TEST(LfBound, VanishesWithoutNoise) {
  EXPECT_EQ(lf_bound(0.0, 0.0, 0.5, 3.0, 10.0), 0.0);
}

TEST(LfBound, DecreasingInBetaPrime) {
  double prev = lf_bound(1.0, 0.0, 1.0 / 3.0, 3.0, 3.5);
  for (double bp : {4.0, 10.0, 100.0, 1e3, 1e6}) {
    const double v = lf_bound(1.0, 0.0, 1.0 / 3.0, 3.0, bp);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_GT(prev, kLfInfinity);
  EXPECT_THROW(lf_bound(1.0, 0.0, 1.0, 3.0, 2.0), ContractViolation);
}

TEST(ExampleVolatility, ConstantCurveGivesZero) {
  const HilbertSpace h = grid(3.0);
  EXPECT_TRUE(example_volatility(h, h.constant(1.3), 3.0).isZero(0.0));
}

TEST(ExampleVolatility, SaturatedBranch) {
  const double beta = 2.0;
  const HilbertSpace h = grid(beta);
  // |h'| = 5 >= e^{-beta y} everywhere
  const Vector steep = (5.0 * h.grid().array()).matrix();
  const Vector s = example_volatility(h, steep, beta);
  for (Eigen::Index i = 0; i < s.size(); i += 37) EXPECT_NEAR(s[i], std::exp(-beta * h.grid()[i]) / beta, 1e-12);
}

TEST(ExampleVolatility, NormBoundOnRandomCurves) {
  const double beta = 3.0;
  const HilbertSpace h = grid(beta);
  Engine rng = make_engine(2, StreamTag::probe);
  for (int k = 0; k < 100; ++k) {
    const Vector c = random_curve(h, rng, 3.0);
    const Vector s = example_volatility(h, c, beta, false);
    // cell averaging of the e^{-beta x} branch overshoots by O((beta dx)^2)
    EXPECT_LE(h.norm_squared(s), (1.0 / beta) * (1.0 + 1e-3));
  }
}

TEST(HjmmModel, ExampleMarginAndAudit) {
  const HilbertSpace h = grid(3.0);
  const HjmmModel inf_model = make_hjmm_model(h, HjmmVolatility::example(3.0, std::numeric_limits<double>::infinity()));
  EXPECT_NEAR(inf_model.L_F, kLfInfinity, 1e-12);
  EXPECT_NEAR(inf_model.margin(), 3.0 - 2.0 * std::sqrt(kLfInfinity) - 1.0, 1e-12);
  EXPECT_NEAR(inf_model.margin(), 0.2333, 1e-4);
  const HjmmModel model = make_hjmm_model(h, HjmmVolatility::example(3.0, 1e3));
  EXPECT_GT(model.margin(), 0.0);
  const HjmmAudit a = audit_hjmm(model);
  EXPECT_LE(a.max_drift_long_rate, 1e-12);
  EXPECT_EQ(a.max_sigma_at_xmax, 0.0);
  EXPECT_LE(a.max_drift_lipschitz_ratio, std::sqrt(model.L_F) * 1.05);
  EXPECT_LE(a.max_sigma_norm_sq, model.vol.M * (1.0 + 1e-3));
}

TEST(HjmmModel, FailingMarginIsHypothesisViolation) {
  const HilbertSpace h = grid(1.0);
  EXPECT_THROW(make_hjmm_model(h, HjmmVolatility::example(1.0, 1e3)), HypothesisViolated);
}

TEST(HjmmExperiment, PureTransportRate) {
  const double beta = 3.0;
  const HilbertSpace h = grid(beta);
  const HjmmModel model = make_hjmm_model(h, HjmmVolatility::zero(beta));
  const Vector h0 = (1.0 + (-2.0 * h.grid().array()).exp()).matrix();
  HjmmRunConfig cfg;
  cfg.horizon = 2.0;
  cfg.n_traj = 2;
  const HjmmReport r = hjmm_ergodicity_experiment(model, h0, cfg);
  EXPECT_GE(r.fit.rate, beta);
  EXPECT_NEAR(r.fit.rate, 4.0, 0.05);
  EXPECT_TRUE(r.passed);
  // deterministic: both trajectories agree on ||S(t) P0 h0||^2
  for (double se : r.decay_std_err) EXPECT_EQ(se, 0.0);
}

TEST(HjmmExperiment, ConstantCurveStaysPut) {
  const HilbertSpace h = grid(3.0);
  const HjmmModel model = make_hjmm_model(h, HjmmVolatility::example(3.0, 1e3));
  HjmmRunConfig cfg;
  cfg.horizon = 0.5;
  cfg.n_traj = 20;
  const HjmmReport r = hjmm_ergodicity_experiment(model, h.constant(0.03), cfg);
  for (double m : r.decay_mean) EXPECT_EQ(m, 0.0);
  EXPECT_EQ(r.long_rate_max_deviation, 0.0);
}

TEST(HjmmExperiment, LongRateConservedUnderNoise) {
  const HilbertSpace h = grid(3.0);
  const HjmmModel model = make_hjmm_model(h, HjmmVolatility::example(3.0, 1e3));
  Engine rng = make_engine(3, StreamTag::probe);
  HjmmRunConfig cfg;
  cfg.horizon = 0.5;
  cfg.n_traj = 50;
  cfg.seed = 4;
  const HjmmReport r = hjmm_ergodicity_experiment(model, random_curve(h, rng), cfg);
  EXPECT_EQ(r.long_rate_max_deviation, 0.0);
  EXPECT_GT(r.decay_mean.front(), r.decay_mean.back());
}
