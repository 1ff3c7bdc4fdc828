#include <gtest/gtest.h>

#include <cmath>

#include <spdelab/hilbert.hpp>
#include <spdelab/random.hpp>

using namespace spdelab;

TEST(Hilbert, EuclideanInnerOfBasisVector) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  const Vector x = (Vector(2) << 1, 0).finished();
  EXPECT_DOUBLE_EQ(inner(e, x, x), 1.0);
}

TEST(Hilbert, ConstantCurveNormIsItsValue) {
  const HilbertSpace h = HilbertSpace::hbeta_grid({20.0, 2001, 1.0});
  EXPECT_NEAR(h.inner(h.constant(3.0), h.constant(3.0)), 9.0, 1e-12);
  EXPECT_NEAR(h.norm(h.constant(-3.0)), 3.0, 1e-12);
}

TEST(Hilbert, ExponentialCurveNormMatchesClosedForm) {
  // |2|^2 + int_0^inf e^{-2x} e^{x} dx = 5
  const HilbertSpace h = HilbertSpace::hbeta_grid({20.0, 2001, 1.0});
  const Vector c = (2.0 + (-h.grid().array()).exp()).matrix();
  EXPECT_NEAR(h.norm_squared(c), 5.0, 1e-3);
}

TEST(Hilbert, WeightedInner) {
  const HilbertSpace w = HilbertSpace::weighted((Vector(3) << 0.25, 0.5, 0.25).finished());
  const Vector x = (Vector(3) << 1, 2, 3).finished();
  EXPECT_NEAR(w.norm_squared(x), 0.25 + 2.0 + 2.25, 1e-14);
  EXPECT_TRUE((w.gram() - Matrix(w.weights().asDiagonal())).isZero(0.0));
}

TEST(Hilbert, GramReproducesInner) {
  const HilbertSpace h = HilbertSpace::hbeta_grid({5.0, 64, 2.0});
  const auto v = probe_vectors(64, 2, 3);
  EXPECT_NEAR(v[0].dot(h.gram() * v[1]), h.inner(v[0], v[1]), 1e-9 * (1.0 + std::abs(h.inner(v[0], v[1]))));
}

TEST(Semigroup, ZeroTimeIsIdentity) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  const OperatorModel op = OperatorModel::matrix(e, (Matrix(2, 2) << -1, 1, 0, 1).finished());
  const Vector x = (Vector(2) << 0.3, -1.7).finished();
  EXPECT_TRUE(apply_semigroup(op, 0.0, x).isApprox(x));
  const HilbertSpace h = HilbertSpace::hbeta_grid({10.0, 101, 1.0});
  const OperatorModel shift = OperatorModel::grid_shift(h);
  const Vector c = (-h.grid().array()).exp().matrix();
  EXPECT_TRUE(shift.apply_semigroup(0.0, c) == c);
}

TEST(Semigroup, ShearMatrixExponential) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  const OperatorModel op = OperatorModel::matrix(e, (Matrix(2, 2) << -1, 1, 0, 1).finished());
  const Vector x = (Vector(2) << 1, 0).finished();
  const Vector s = apply_semigroup(op, 1.0, x);
  EXPECT_NEAR(s[0], std::exp(-1.0), 1e-12);
  EXPECT_NEAR(s[1], 0.0, 1e-12);
  for (double t : {0.3, 1.0, 2.5}) {
    const Matrix m = op.semigroup_matrix(t);
    EXPECT_NEAR(m(0, 0), std::exp(-t), 1e-12 * std::exp(t));
    EXPECT_NEAR(m(0, 1), std::sinh(t), 1e-12 * std::exp(t));
    EXPECT_NEAR(m(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(m(1, 1), std::exp(t), 1e-12 * std::exp(t));
  }
}

TEST(Semigroup, GridShiftOfExponential) {
  for (std::size_t n : {2001u, 2048u}) {  // aligned and interpolated shifts
    const HilbertSpace h = HilbertSpace::hbeta_grid({20.0, n, 1.0});
    const OperatorModel op = OperatorModel::grid_shift(h);
    const Vector c = (-h.grid().array()).exp().matrix();
    const Vector s = op.apply_semigroup(0.5, c);
    const Vector expect = std::exp(-0.5) * c;
    // beyond x_max the curve is extended by its long rate
    for (Eigen::Index i = 0; i + 60 < s.size(); ++i) EXPECT_NEAR(s[i], expect[i], 1e-4) << "n=" << n << " i=" << i;
  }
}

TEST(Projection, BasicKinds) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  const Vector x = (Vector(2) << 3, 4).finished();
  EXPECT_TRUE(project(Projection::identity(e), x) == x);
  EXPECT_TRUE(project(Projection::zero(e), x).isZero(0.0));
  const Vector p = project(Projection::coordinate(e, {false, true}), x);
  EXPECT_EQ(p[0], 0.0);
  EXPECT_EQ(p[1], 4.0);
}

TEST(Projection, IdempotentForEveryKind) {
  const HilbertSpace e = HilbertSpace::euclidean(4);
  const HilbertSpace w = HilbertSpace::weighted((Vector(4) << 0.1, 0.2, 0.3, 0.4).finished());
  const HilbertSpace h = HilbertSpace::hbeta_grid({6.0, 200, 2.0});
  struct Case {
    HilbertSpace space;
    Projection p;
  };
  std::vector<Case> cases = {{e, Projection::identity(e)},
                             {e, Projection::zero(e)},
                             {e, Projection::coordinate(e, {true, false, true, false})},
                             {w, Projection::averaging(w)},
                             {w, Projection::coordinate(w, {false, true, true, false})},
                             {h, Projection::long_rate(h)}};
  for (const Case& c : cases)
    for (const Vector& x : probe_vectors(c.space.dim(), 100, 17)) {
      const Vector px = c.p.apply(x);
      EXPECT_LE(c.space.norm(c.p.apply(px) - px), 1e-10 * c.space.norm(x));
    }
}

TEST(Projection, LongRateAndAveragingOrthogonality) {
  const HilbertSpace h = HilbertSpace::hbeta_grid({6.0, 200, 2.0});
  const Projection p = Projection::long_rate(h);
  for (const Vector& x : probe_vectors(h.dim(), 10, 5)) {
    const Vector px = p.apply(x);
    EXPECT_NEAR(px.maxCoeff(), x[x.size() - 1], 1e-14);
    EXPECT_NEAR(px.minCoeff(), x[x.size() - 1], 1e-14);
    EXPECT_NEAR(h.inner(px, p.complement(x)), 0.0, 1e-9 * h.norm_squared(x));
  }
  const HilbertSpace w = HilbertSpace::weighted((Vector(3) << 0.25, 0.5, 0.25).finished());
  const Vector x = (Vector(3) << 1, 2, 5).finished();
  EXPECT_NEAR(Projection::averaging(w).apply(x)[0], 0.25 + 1.0 + 1.25, 1e-14);
}

TEST(Projection, RejectsNonProjection) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  EXPECT_THROW(Projection((Matrix(2, 2) << 2, 0, 0, 0).finished(), e), ContractViolation);
  // idempotent but not self-adjoint
  EXPECT_THROW(Projection((Matrix(2, 2) << 1, 1, 0, 0).finished(), e), ContractViolation);
}

TEST(Semigroup, SemigroupLawMatrixMode) {
  Engine rng = make_engine(9, StreamTag::probe);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const HilbertSpace e = HilbertSpace::euclidean(3);
  const Matrix a = (Matrix(3, 3) << -1, 0.5, 0, 0.2, -0.3, 1, 0, -1, -0.5).finished();
  const OperatorModel op = OperatorModel::matrix(e, a);
  for (const Vector& x : probe_vectors(3, 50, 4)) {
    const double t = u(rng), s = u(rng);
    const Vector lhs = apply_semigroup(op, t + s, x);
    const Vector rhs = apply_semigroup(op, t, apply_semigroup(op, s, x));
    EXPECT_LE((lhs - rhs).norm(), 1e-8 * x.norm());
  }
}

TEST(Semigroup, SemigroupLawGridShiftOnGridTimes) {
  const HilbertSpace h = HilbertSpace::hbeta_grid({10.0, 1001, 1.0});
  const OperatorModel op = OperatorModel::grid_shift(h);
  Engine rng = make_engine(10, StreamTag::probe);
  std::uniform_int_distribution<int> k(0, 200);
  for (const Vector& x : probe_vectors(h.dim(), 20, 6)) {
    const double t = 0.01 * k(rng), s = 0.01 * k(rng);
    const Vector lhs = op.apply_semigroup(t + s, x);
    const Vector rhs = op.apply_semigroup(t, op.apply_semigroup(s, x));
    EXPECT_LE((lhs - rhs).norm(), 1e-8 * x.norm());
  }
}

TEST(Hilbert, NormMonotoneInBeta) {
  const HilbertSpace h1 = HilbertSpace::hbeta_grid({8.0, 400, 1.0});
  const HilbertSpace h2 = h1.with_beta(2.5);
  for (Vector x : probe_vectors(h1.dim(), 50, 8)) {
    x.array() -= x[x.size() - 1];
    EXPECT_LE(h1.norm(x), h2.norm(x));
  }
}

TEST(Semigroup, GridShiftFixesConstants) {
  const HilbertSpace h = HilbertSpace::hbeta_grid({10.0, 257, 1.5});
  const OperatorModel op = OperatorModel::grid_shift(h);
  for (double t : {0.013, 0.5, 3.7, 50.0}) EXPECT_TRUE(op.apply_semigroup(t, h.constant(1.25)) == h.constant(1.25));
  EXPECT_TRUE(op.apply_generator(h.constant(4.0)).isZero(0.0));
}

TEST(Semigroup, GridShiftContractsZeroLongRateCurves) {
  const double beta = 2.0;
  const HilbertSpace h = HilbertSpace::hbeta_grid({12.0, 1201, beta});
  const OperatorModel op = OperatorModel::grid_shift(h);
  for (Vector x : probe_vectors(h.dim(), 20, 11)) {
    x.array() -= x[x.size() - 1];
    for (double t : {0.1, 0.5, 1.0})
      EXPECT_LE(h.norm(op.apply_semigroup(t, x)),
                std::sqrt(1.0 + 1.0 / beta) * std::exp(-beta * t / 2.0) * h.norm(x) * (1.0 + 1e-9));
  }
}

TEST(Hilbert, DimensionMismatchIsContractViolation) {
  const HilbertSpace e = HilbertSpace::euclidean(2);
  EXPECT_THROW(e.norm(Vector::Ones(3)), ContractViolation);
  EXPECT_THROW(HilbertSpace::euclidean(0), ContractViolation);
  EXPECT_THROW(HilbertSpace::weighted((Vector(2) << 1, -1).finished()), ContractViolation);
}
