#include <gtest/gtest.h>

#include <cmath>

#include <spdelab/gdc_cert.hpp>
#include <spdelab/random.hpp>

using namespace spdelab;

namespace {

Matrix shear_generator() { return (Matrix(2, 2) << -1, 1, 0, 1).finished(); }

// Largest lambda0 on a grid with direct eigenvalue evaluation of the symmetric form.
double grid_search_lambda0(const Matrix& a, const Matrix& p1, double lambda1, double lo, double hi, double step) {
  const Matrix sym = 0.5 * (a + a.transpose());
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  double best = -1.0;
  for (double l = lo; l <= hi; l += step) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(sym + l * (id - p1) - lambda1 * p1, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().maxCoeff() <= 0.0) best = l;
  }
  return best;
}

}  // namespace

TEST(Certify, ShearTwoByTwoExample) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  const auto l0 = certify_lambda0(e, shear_generator(), Projection::coordinate(e, {false, true}), 1.5);
  ASSERT_TRUE(l0.has_value());
  EXPECT_NEAR(*l0, 0.5, 1e-9);
}

TEST(Certify, ScalarMultipleOfIdentity) {
  const HilbertSpace e = HilbertSpace::euclidean(3);
  const auto l0 = certify_lambda0(e, -2.0 * Matrix::Identity(3, 3), Projection::zero(e), 0.0);
  ASSERT_TRUE(l0.has_value());
  EXPECT_NEAR(*l0, 2.0, 1e-9);
}

TEST(Certify, SymmetricWithEigenvectorProjection) {
  // A = V diag(a) V^T, P1 = v1 v1^T: feasible iff a1 <= lambda1 and lambda0 <= -max_{i>1} a_i
  Engine rng = make_engine(3, StreamTag::probe);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    Matrix g(4, 4);
    for (Eigen::Index i = 0; i < 16; ++i) g.data()[i] = n01(rng);
    const Matrix v = Eigen::HouseholderQR<Matrix>(g).householderQ();
    const Vector a = (Vector(4) << 0.7, -0.4 - 0.1 * trial, -1.3, -2.0).finished();
    const Matrix A = v * a.asDiagonal() * v.transpose();
    const HilbertSpace e = HilbertSpace::euclidean(4);
    const Projection p1(v.col(0) * v.col(0).transpose(), e);
    const auto l0 = certify_lambda0(e, A, p1, 1.0);
    ASSERT_TRUE(l0.has_value());
    EXPECT_NEAR(*l0, 0.4 + 0.1 * trial, 2e-9);
  }
}

TEST(Certify, NonNormalMatchesGridSearch) {
  const Matrix a = (Matrix(3, 3) << -1.2, 0.8, 0.1, -0.3, -0.9, 0.6, 0.0, 0.4, 0.5).finished();
  const HilbertSpace e = HilbertSpace::euclidean(3);
  const Projection p1 = Projection::coordinate(e, {false, false, true});
  for (double lambda1 : {1.0, 2.0, 4.0}) {
    const auto l0 = certify_lambda0(e, a, p1, lambda1);
    ASSERT_TRUE(l0.has_value());
    const double coarse = grid_search_lambda0(a, p1.matrix(), lambda1, 1e-4, 3.0, 1e-3);
    const double fine = grid_search_lambda0(a, p1.matrix(), lambda1, coarse, coarse + 1e-3, 1e-6);
    EXPECT_NEAR(*l0, fine, 1e-6 + 2e-9);
  }
}

TEST(Certify, InfeasibleReturnsNothing) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  // positive definite symmetric part outside ran(P1)
  EXPECT_FALSE(certify_lambda0(e, Matrix::Identity(2, 2), Projection::coordinate(e, {false, true}), 5.0).has_value());
}

TEST(Certify, MonotoneInLambda1) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  const Projection p1 = Projection::coordinate(e, {false, true});
  double prev = 0.0;
  // closed form: lambda0 = 1 - 1 / (4 (lambda1 - 1)), infeasible for lambda1 <= 5/4
  EXPECT_FALSE(certify_lambda0(e, shear_generator(), p1, 1.0).has_value());
  for (double lambda1 = 1.5; lambda1 <= 6.0; lambda1 += 0.25) {
    const auto l0 = certify_lambda0(e, shear_generator(), p1, lambda1);
    ASSERT_TRUE(l0.has_value());
    EXPECT_NEAR(*l0, 1.0 - 1.0 / (4.0 * (lambda1 - 1.0)), 1e-8);
    EXPECT_GE(*l0, prev - 1e-12);
    prev = *l0;
  }
}

TEST(Certify, WeightedGeometry) {
  // on L^2(eta) the averaging projection and a symmetric chain generator: lambda0 is the spectral gap
  const Vector eta = (Vector(2) << 0.5, 0.5).finished();
  const HilbertSpace w = HilbertSpace::weighted(eta);
  const Matrix q = (Matrix(2, 2) << -1, 1, 1, -1).finished();
  const auto l0 = certify_lambda0(w, q, Projection::averaging(w), 0.0);
  ASSERT_TRUE(l0.has_value());
  EXPECT_NEAR(*l0, 2.0, 1e-9);
}

TEST(Certificate, DirectFormulas) {
  const GdcCertificate c1 = make_certificate(0.5, 1.5, {});
  EXPECT_DOUBLE_EQ(c1.alpha, 0.5);
  EXPECT_DOUBLE_EQ(c1.beta_const, 1.5);
  EXPECT_DOUBLE_EQ(c1.epsilon, 1.0);
  const GdcCertificate c2 = make_certificate(2.0, 0.0, {1.0, 1.0, 0.5});
  EXPECT_DOUBLE_EQ(c2.alpha, 1.0);
  EXPECT_DOUBLE_EQ(c2.beta_const, 1.0);
  EXPECT_DOUBLE_EQ(c2.epsilon, 0.5);
  EXPECT_TRUE(c2.contraction());
  EXPECT_THROW(make_certificate(0.5, 0.0, {1.0, 0.0, 0.0}), CertificationFailed);
  EXPECT_FALSE(make_certificate(1.0, 0.0, {0.0, 2.0, 0.0}).contraction());
}

TEST(Certificate, QuadraticFormAuditPasses) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  const Projection p1 = Projection::coordinate(e, {false, true});
  for (double lambda1 : {1.5, 2.0, 3.0}) {
    const GdcCertificate c = make_certificate(e, shear_generator(), p1, lambda1, {0.01, 0.04, 0.0});
    EXPECT_LE(audit_quadratic_form(e, shear_generator(), p1, c, 1000), 1e-8);
  }
  const HilbertSpace w = HilbertSpace::weighted((Vector(3) << 0.25, 0.5, 0.25).finished());
  const Matrix q = (Matrix(3, 3) << -1, 1, 0, 0.5, -1, 0.5, 0, 1, -1).finished();
  const GdcCertificate c = make_certificate(w, q, Projection::averaging(w), 0.0, {});
  EXPECT_NEAR(c.lambda0, 1.0, 1e-9);
  EXPECT_LE(audit_quadratic_form(w, q, Projection::averaging(w), c, 1000), 1e-8);
}

TEST(Certificate, OverstatedLambda0FailsAudit) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  const Projection p1 = Projection::coordinate(e, {false, true});
  const GdcCertificate bad = make_certificate(0.6, 1.5, {});
  EXPECT_GT(audit_quadratic_form(e, shear_generator(), p1, bad, 1000), 1e-4);
}

TEST(FitConvergence, DiagonalRate) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  const OperatorModel op = OperatorModel::matrix(e, (Matrix(2, 2) << -1, 0, 0, 0).finished());
  std::vector<double> t;
  for (int k = 1; k <= 10; ++k) t.push_back(0.5 * k);
  const auto probes = probe_vectors(2, 16, 2);
  const ConvergenceFit f = fit_convergence(op, Projection::coordinate(e, {false, true}), t, probes);
  EXPECT_NEAR(f.rate, 1.0, 1e-6);
  EXPECT_LE(f.prefactor, 1.0 + 1e-6);
}

TEST(FitConvergence, TrivialSemigroupGivesSentinel) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  const OperatorModel op = OperatorModel::matrix(e, Matrix::Zero(2, 2));
  const std::vector<double> t = {0.5, 1.0, 1.5, 2.0};
  const ConvergenceFit f = fit_convergence(op, Projection::identity(e), t, probe_vectors(2, 4, 1));
  EXPECT_TRUE(f.degenerate);
  EXPECT_TRUE(std::isinf(f.rate));
}

TEST(FitConvergence, GridShiftConvergesToLongRate) {
  const double beta = 2.0;
  const HilbertSpace h = HilbertSpace::hbeta_grid({10.0, 1001, beta});
  const OperatorModel op = OperatorModel::grid_shift(h);
  std::vector<double> t;
  for (int k = 1; k <= 8; ++k) t.push_back(0.25 * k);
  const ConvergenceFit f = fit_convergence(op, Projection::long_rate(h), t, probe_vectors(h.dim(), 16, 7));
  EXPECT_GE(f.rate, beta / 2.0 - 0.05);
}

TEST(FitConvergence, ExactExponentialFamily) {
  const std::vector<double> t = {0.1, 0.4, 0.9, 1.6, 2.5};
  std::vector<double> y;
  for (double s : t) y.push_back(3.0 * std::exp(-0.7 * s));
  const stats::RateFit f = stats::exponential_rate_fit(t, y);
  EXPECT_NEAR(f.rate, 0.7, 1e-9);
  EXPECT_NEAR(f.prefactor, 3.0, 1e-9);
}
