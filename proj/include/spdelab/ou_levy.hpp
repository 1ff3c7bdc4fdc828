#pragma once

// Ornstein-Uhlenbeck processes dX = AX dt + dZ driven by a Levy process with
// finite jump activity, and the characteristic function of their limits
//
//   E exp(i<u, X_inf>) = exp(i<Px, u> + int_0^inf Psi(S(r)* u) dr)
//
// when S(t) converges uniformly exponentially to a projection P.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "gdc_cert.hpp"
#include "hilbert.hpp"
#include "noise.hpp"
#include "random.hpp"
#include "sde_engine.hpp"

namespace spdelab {

using Complex = std::complex<double>;

/// Moments of the jump measure mu = rate * law(marks) needed by the exponent
/// and by the tail certificate. Norms are taken in the space geometry.
struct LevyMeasureStats {
  Vector small_mean;            // int_{||z||<=1} z mu(dz)
  Vector small_mean_std_err;    // zero when exact
  double small_second = 0.0;    // int_{||z||<=1} ||z||^2 mu(dz)
  double big_first = 0.0;       // int_{||z||>1} ||z|| mu(dz)
  double big_mass = 0.0;        // mu(||z|| > 1)
  double big_log = 0.0;         // int_{||z||>1} log(1 + ||z||) mu(dz)
  bool exact = true;
};

inline LevyMeasureStats levy_measure_stats(const HilbertSpace& space, double rate, const MarkDistribution& marks,
                                           std::size_t mc_samples = 1u << 18, std::uint64_t seed = 0x4c455659ULL) {
  LevyMeasureStats st;
  const auto d = static_cast<Eigen::Index>(marks.dim());
  st.small_mean = Vector::Zero(d);
  st.small_mean_std_err = Vector::Zero(d);
  if (rate == 0.0) return st;
  const auto accumulate_atom = [&](const Vector& z, double w) {
    const double nz = space.norm(z);
    if (nz <= 1.0) {
      st.small_mean += w * z;
      st.small_second += w * nz * nz;
    } else {
      st.big_first += w * nz;
      st.big_mass += w;
      st.big_log += w * std::log1p(nz);
    }
  };
  if (marks.kind == MarkDistribution::Kind::point_mass) {
    accumulate_atom(marks.a, rate);
    return st;
  }
  if (marks.kind == MarkDistribution::Kind::discrete) {
    for (std::size_t i = 0; i < marks.atoms.size(); ++i) accumulate_atom(marks.atoms[i], rate * marks.probs[i]);
    return st;
  }
  st.exact = false;
  Engine engine = make_engine(seed, StreamTag::quadrature);
  Vector s1 = Vector::Zero(d), s2 = Vector::Zero(d);
  const double n = static_cast<double>(mc_samples);
  for (std::size_t k = 0; k < mc_samples; ++k) {
    const Vector z = marks.sample(engine);
    const double nz = space.norm(z);
    if (nz <= 1.0) {
      s1 += z;
      s2 += z.cwiseProduct(z);
      st.small_second += nz * nz;
    } else {
      st.big_first += nz;
      st.big_mass += 1.0;
      st.big_log += std::log1p(nz);
    }
  }
  const Vector mean = s1 / n;
  st.small_mean = rate * mean;
  st.small_mean_std_err = rate * ((s2 / n - mean.cwiseProduct(mean)).cwiseMax(0.0) / n).cwiseSqrt();
  st.small_second *= rate / n;
  st.big_first *= rate / n;
  st.big_mass *= rate / n;
  st.big_log *= rate / n;
  if (d == 1 && marks.kind != MarkDistribution::Kind::discrete) {
    // closed-form truncated mean in one dimension: ||z|| = sqrt(G_00) |z|
    const double radius = 1.0 / std::sqrt(space.gram()(0, 0));
    st.small_mean = rate * marks.truncated_mean(radius);
    st.small_mean_std_err.setZero();
  }
  return st;
}

/// Characteristic triplet (b, Q, mu) with mu = jump_rate * law(marks).
/// Q acts on coordinate vectors and must be self-adjoint and PSD in the space geometry.
struct LevyTriplet {
  Vector drift_b;
  Matrix cov_Q;
  double jump_rate = 0.0;
  MarkDistribution marks = MarkDistribution::point_mass(Vector());

  static LevyTriplet gaussian(Vector b, Matrix q) {
    LevyTriplet t;
    t.drift_b = std::move(b);
    t.cov_Q = std::move(q);
    t.marks = MarkDistribution::point_mass(Vector::Zero(t.drift_b.size()));
    return t;
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(drift_b.size()); }
};

inline void validate_triplet(const HilbertSpace& space, const LevyTriplet& t) {
  const auto n = static_cast<Eigen::Index>(space.dim());
  require(t.drift_b.size() == n, "LevyTriplet: drift dimension mismatch");
  require(t.cov_Q.rows() == n && t.cov_Q.cols() == n, "LevyTriplet: covariance dimension mismatch");
  require(t.jump_rate >= 0.0, "LevyTriplet: negative jump rate");
  if (t.jump_rate > 0.0) require(t.marks.dim() == space.dim(), "LevyTriplet: mark dimension mismatch");
  const Matrix gq = space.gram() * t.cov_Q;
  const double scale = std::max(1.0, gq.cwiseAbs().maxCoeff());
  require((gq - gq.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, "LevyTriplet: Q is not self-adjoint");
  const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gq + gq.transpose()), Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-10 * scale, "LevyTriplet: Q is not positive semidefinite");
}

/// Eigenpairs Q e_j = lambda_j e_j with H-orthonormal e_j (columns), lambda_j > 0 only.
inline std::pair<Vector, Matrix> covariance_modes(const HilbertSpace& space, const Matrix& q) {
  const Matrix g = space.gram();
  const Eigen::LLT<Matrix> llt(g);
  const Matrix l = llt.matrixL();
  // Qt = L^T Q L^{-T} is symmetric when GQ is
  const Matrix lt_q = l.transpose() * q;
  Matrix qt = l.triangularView<Eigen::Lower>().solve(lt_q.transpose()).transpose();
  qt = 0.5 * (qt + qt.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(qt);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
    if (es.eigenvalues()[j] > 1e-14 * scale) keep.push_back(j);
  Vector lambda(static_cast<Eigen::Index>(keep.size()));
  Matrix vecs(g.rows(), static_cast<Eigen::Index>(keep.size()));
  const auto lt = l.transpose().triangularView<Eigen::Upper>();
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    lambda[kk] = es.eigenvalues()[keep[k]];
    vecs.col(kk) = lt.solve(Vector(es.eigenvectors().col(keep[k])));
  }
  return {lambda, vecs};
}

struct LevyValue {
  Complex value;
  double std_err = 0.0;
};

namespace detail {

/// E exp(i c.z) for the mark law, with c the euclidean coefficient vector.
inline Complex mark_cf(const MarkDistribution& m, const Vector& c) {
  const Complex I(0.0, 1.0);
  switch (m.kind) {
    case MarkDistribution::Kind::point_mass:
      return std::exp(I * c.dot(m.a));
    case MarkDistribution::Kind::discrete: {
      Complex acc = 0.0;
      for (std::size_t i = 0; i < m.atoms.size(); ++i) acc += m.probs[i] * std::exp(I * c.dot(m.atoms[i]));
      return acc;
    }
    case MarkDistribution::Kind::gaussian:
      return std::exp(I * c.dot(m.a) - 0.5 * c.cwiseProduct(m.b).squaredNorm());
    case MarkDistribution::Kind::uniform: {
      Complex acc = 1.0;
      for (Eigen::Index k = 0; k < c.size(); ++k) {
        const double w = m.b[k] - m.a[k];
        const double th = c[k] * w;
        if (std::abs(th) < 1e-8)
          acc *= std::exp(I * c[k] * 0.5 * (m.a[k] + m.b[k]));
        else
          acc *= (std::exp(I * c[k] * m.b[k]) - std::exp(I * c[k] * m.a[k])) / (I * th);
      }
      return acc;
    }
  }
  return 1.0;
}

}  // namespace detail

/// Psi(u) = i<b,u> - <Qu,u>/2 + int (e^{i<u,z>} - 1 - i<u,z> 1{||z||<=1}) mu(dz).
inline LevyValue levy_exponent(const HilbertSpace& space, const LevyTriplet& t, const LevyMeasureStats& st,
                               const Vector& u) {
  const Complex I(0.0, 1.0);
  LevyValue out;
  out.value = I * space.inner(t.drift_b, u) - 0.5 * space.inner(t.cov_Q * u, u);
  if (t.jump_rate > 0.0) {
    const Vector c = space.gram() * u;  // <u, z>_H = c.z
    out.value += t.jump_rate * (detail::mark_cf(t.marks, c) - 1.0) - I * c.dot(st.small_mean);
    out.std_err = std::sqrt(c.cwiseProduct(st.small_mean_std_err).squaredNorm());
  }
  return out;
}

inline LevyValue levy_exponent(const HilbertSpace& space, const LevyTriplet& t, const Vector& u) {
  return levy_exponent(space, t, levy_measure_stats(space, t.jump_rate, t.marks), u);
}

struct OuHypotheses {
  bool drift_in_kernel = false;       // Pb = 0
  bool covariance_in_kernel = false;  // PQ = 0
  bool jumps_in_kernel = false;       // mu supported on ker P
  bool log_moment_finite = false;
  bool all() const noexcept { return drift_in_kernel && covariance_in_kernel && jumps_in_kernel && log_moment_finite; }
};

class OuScenario {
 public:
  OuScenario(OperatorModel op, Projection p, LevyTriplet triplet, double m, double alpha)
      : op_(std::move(op)), p_(std::move(p)), triplet_(std::move(triplet)), m_(m), alpha_(alpha) {
    validate_triplet(op_.space(), triplet_);
    stats_ = levy_measure_stats(op_.space(), triplet_.jump_rate, triplet_.marks);
    check_hypotheses();
  }

  const OperatorModel& op() const noexcept { return op_; }
  const HilbertSpace& space() const noexcept { return op_.space(); }
  const Projection& projection() const noexcept { return p_; }
  const LevyTriplet& triplet() const noexcept { return triplet_; }
  const LevyMeasureStats& measure_stats() const noexcept { return stats_; }
  const OuHypotheses& hypotheses() const noexcept { return hyp_; }
  double M() const noexcept { return m_; }
  double alpha() const noexcept { return alpha_; }

  void require_hypotheses() const {
    if (!hyp_.drift_in_kernel) throw HypothesisViolated("OU limit: drift b is not in ker P (||Pb|| > 1e-10)");
    if (!hyp_.covariance_in_kernel) throw HypothesisViolated("OU limit: PQ != 0 (||PQ|| > 1e-10)");
    if (!hyp_.jumps_in_kernel) throw HypothesisViolated("OU limit: Levy measure not supported on ker P");
    if (!hyp_.log_moment_finite) throw HypothesisViolated("OU limit: log-moment of big jumps is not finite");
  }

  /// The engine scenario: F = b, sigma = (sqrt-free) covariance modes, jumps
  /// compensated on the unit ball only.
  Scenario to_scenario() const {
    Scenario sc(op_, p_);
    const auto n = static_cast<Eigen::Index>(op_.dim());
    sc.set_linear_drift(Matrix::Zero(n, n), triplet_.drift_b);
    auto [lambda, vecs] = covariance_modes(space(), triplet_.cov_Q);
    sc.set_noise(QWienerSpec::diagonal(lambda));
    sc.set_constant_diffusion(vecs);
    if (triplet_.jump_rate > 0.0)
      sc.set_jumps(JumpSpec::additive(triplet_.jump_rate, triplet_.marks, stats_.small_mean));
    sc.flags.deterministic_P1 = hyp_.covariance_in_kernel && hyp_.jumps_in_kernel;
    return sc;
  }

 private:
  void check_hypotheses() {
    const HilbertSpace& sp = space();
    hyp_.drift_in_kernel = sp.norm(p_.apply(triplet_.drift_b)) <= 1e-10;
    const Matrix pq = p_.matrix() * triplet_.cov_Q;
    hyp_.covariance_in_kernel = pq.cwiseAbs().maxCoeff() <= 1e-10;
    bool support = true;
    if (triplet_.jump_rate > 0.0) {
      const auto check = [&](const Vector& z) { return sp.norm(p_.apply(z)) <= 1e-10; };
      if (triplet_.marks.kind == MarkDistribution::Kind::discrete) {
        for (std::size_t i = 0; i < triplet_.marks.atoms.size(); ++i)
          if (triplet_.marks.probs[i] > 0.0 && !check(triplet_.marks.atoms[i])) support = false;
      } else {
        Engine engine = make_engine(0x53555050ULL, StreamTag::probe);
        for (int k = 0; k < 1000 && support; ++k) support = check(triplet_.marks.sample(engine));
        support = support && check(triplet_.marks.mean());
      }
    }
    hyp_.jumps_in_kernel = support;
    hyp_.log_moment_finite = std::isfinite(stats_.big_log);
  }

  OperatorModel op_;
  Projection p_;
  LevyTriplet triplet_;
  double m_;
  double alpha_;
  LevyMeasureStats stats_;
  OuHypotheses hyp_;
};

/// Default time grid for the convergence-rate fit.
inline std::vector<double> default_rate_grid() {
  std::vector<double> t;
  for (int k = 1; k <= 20; ++k) t.push_back(0.25 * k);
  return t;
}

/// Builds the OU scenario with (M, alpha) fitted from ||S(t)x - Px|| on probe vectors.
inline OuScenario make_ou_scenario(OperatorModel op, Projection p, LevyTriplet triplet,
                                   std::span<const double> t_grid = {}, std::size_t n_probes = 64,
                                   std::uint64_t seed = 0x4f55ULL) {
  std::vector<double> grid(t_grid.begin(), t_grid.end());
  if (grid.empty()) grid = default_rate_grid();
  auto probes = probe_vectors(op.dim(), n_probes, seed);
  // the coordinate directions catch the slowest mode of small systems exactly
  for (std::size_t i = 0; i < op.dim() && i < 64; ++i) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(op.dim()));
    e[static_cast<Eigen::Index>(i)] = 1.0;
    probes.push_back(e);
  }
  const ConvergenceFit fit = fit_convergence(op, p, grid, probes);
  if (fit.degenerate) throw HypothesisViolated("OU scenario: S(t) - P vanishes on the fit grid (rate is infinite)");
  if (!(fit.rate > 0.0)) throw HypothesisViolated("OU scenario: semigroup does not converge to P");
  return OuScenario(std::move(op), std::move(p), std::move(triplet), std::max(1.0, fit.prefactor), fit.rate);
}

struct LimitCf {
  Complex value;
  Complex log_integral;    // int_0^{T_cut} Psi(S(r)* u) dr
  double tail_bound = 0.0;  // bound on |int_{T_cut}^inf Psi(S(r)* u) dr|
  double cf_error_bound = 0.0;  // induced bound on |value - exact limit CF|
  double std_err = 0.0;         // Monte-Carlo part of the exponent, if any
};

/// Tail certificate for int_T^inf |Psi(S(r)* u)| dr.
inline double ou_tail_bound(const OuScenario& sc, const Vector& u, double t_cut) {
  const HilbertSpace& sp = sc.space();
  const double nu = sp.norm(u);
  const double m = sc.M(), a = sc.alpha();
  // operator norm of Q in the space geometry
  const Matrix g = sp.gram();
  const Eigen::LLT<Matrix> llt(g);
  const Matrix l = llt.matrixL();
  Matrix qt = l.triangularView<Eigen::Lower>().solve((l.transpose() * sc.triplet().cov_Q).transpose()).transpose();
  qt = 0.5 * (qt + qt.transpose());
  const double qnorm =
      qt.size() ? Eigen::SelfAdjointEigenSolver<Matrix>(qt, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff()
                : 0.0;
  const LevyMeasureStats& st = sc.measure_stats();
  const double first = std::exp(-a * t_cut) / a * m * nu * (sp.norm(sc.triplet().drift_b) + st.big_first);
  const double second = std::exp(-2.0 * a * t_cut) / (2.0 * a) * 0.5 * m * m * nu * nu * (qnorm + st.small_second);
  return first + second;
}

/// Limit CF exp(i<Px,u> + int_0^inf Psi(S(r)* u) dr), composite Simpson on [0, T_cut].
/// A non-positive t_cut selects the default 40 / alpha.
inline LimitCf limiting_cf(const OuScenario& sc, const Vector& x, const Vector& u, double t_cut = 0.0,
                           double quad_step = 0.01) {
  sc.require_hypotheses();
  const HilbertSpace& sp = sc.space();
  sp.check_dim(x);
  sp.check_dim(u);
  require(quad_step > 0.0, "limiting_cf: quadrature step must be positive");
  if (t_cut <= 0.0) t_cut = 40.0 / sc.alpha();
  const Complex I(0.0, 1.0);
  LimitCf out;
  if (u.isZero(0.0)) {
    out.value = 1.0;
    return out;
  }
  std::size_t n = static_cast<std::size_t>(std::ceil(t_cut / quad_step));
  if (n % 2) ++n;
  const double h = t_cut / static_cast<double>(n);
  const OperatorModel& op = sc.op();
  const bool matrix_mode = op.mode() == OperatorModel::SemigroupMode::matrix_exponential;
  require(matrix_mode, "limiting_cf: needs a matrix generator");
  Complex acc = 0.0;
  double err2 = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double r = h * static_cast<double>(k);
    const Vector v = op.adjoint_semigroup_matrix(r) * u;
    const LevyValue psi = levy_exponent(sp, sc.triplet(), sc.measure_stats(), v);
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * psi.value;
    err2 += w * psi.std_err;
  }
  out.log_integral = acc * (h / 3.0);
  out.std_err = err2 * (h / 3.0);
  out.tail_bound = ou_tail_bound(sc, u, t_cut);
  out.value = std::exp(I * sp.inner(sc.projection().apply(x), u) + out.log_integral);
  out.cf_error_bound = std::abs(out.value) * std::expm1(out.tail_bound + out.std_err);
  return out;
}

struct EmpiricalCf {
  Complex value;
  double std_err = 0.0;
};

inline EmpiricalCf empirical_cf(const HilbertSpace& space, std::span<const Vector> samples, const Vector& u) {
  require(!samples.empty(), "empirical_cf: no samples");
  double sc = 0.0, ss = 0.0, sc2 = 0.0, ss2 = 0.0;
  for (const Vector& s : samples) {
    const double th = space.inner(u, s);
    const double c = std::cos(th), si = std::sin(th);
    sc += c;
    ss += si;
    sc2 += c * c;
    ss2 += si * si;
  }
  const double n = static_cast<double>(samples.size());
  EmpiricalCf out;
  out.value = Complex(sc / n, ss / n);
  const double var = std::max(0.0, sc2 / n - (sc / n) * (sc / n)) + std::max(0.0, ss2 / n - (ss / n) * (ss / n));
  out.std_err = std::sqrt(var / n);
  return out;
}

inline EmpiricalCf empirical_cf(std::span<const double> samples, double u) {
  std::vector<Vector> v;
  v.reserve(samples.size());
  for (double s : samples) v.push_back(Vector::Constant(1, s));
  return empirical_cf(HilbertSpace::euclidean(1), v, Vector::Constant(1, u));
}

/// OU scenario on L^2(eta) for the generator of a finite symmetric Markov chain.
inline OuScenario kolmogorov_instance(const Matrix& q, const Vector& eta, LevyTriplet triplet) {
  const Eigen::Index n = q.rows();
  require(q.cols() == n && eta.size() == n, "kolmogorov_instance: dimension mismatch");
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    require(std::abs(q.row(i).sum()) <= 1e-12 * scale, "kolmogorov_instance: rows must sum to zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) require(q(i, j) >= 0.0, "kolmogorov_instance: negative off-diagonal rate");
      require(std::abs(eta[i] * q(i, j) - eta[j] * q(j, i)) <= 1e-12 * scale,
              "kolmogorov_instance: generator is not symmetric in L^2(eta)");
    }
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<Eigen::Index> frontier;
  frontier.push(0);
  seen[0] = 1;
  while (!frontier.empty()) {
    const Eigen::Index i = frontier.front();
    frontier.pop();
    for (Eigen::Index j = 0; j < n; ++j)
      if (q(i, j) > 0.0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        frontier.push(j);
      }
  }
  require(std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }),
          "kolmogorov_instance: chain is not irreducible");
  HilbertSpace space = HilbertSpace::weighted(eta);
  Projection p = Projection::averaging(space);
  return make_ou_scenario(OperatorModel::matrix(space, q), std::move(p), std::move(triplet));
}

}  // namespace spdelab
