#pragma once

// Certification of the generalized dissipativity condition
//
//   <Ax, x> <= -lambda0 ||x||^2 + (lambda0 + lambda1) ||P1 x||^2
//
// through the symmetric part of A in the space geometry, and the derived
// constants alpha = lambda0 - sqrt(L_F), beta = lambda1 + sqrt(L_F),
// epsilon = 2 alpha - L_sigma - L_gamma.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "hilbert.hpp"
#include "statistics.hpp"

namespace spdelab {

struct LipschitzConstants {
  double L_F = 0.0;
  double L_sigma = 0.0;
  double L_gamma = 0.0;
};

struct GdcCertificate {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double alpha = 0.0;
  double beta_const = 0.0;
  double epsilon = 0.0;
  LipschitzConstants lipschitz;

  /// The hypothesis epsilon > 0 of the stability estimate.
  bool contraction() const noexcept { return epsilon > 0.0; }
};

namespace detail {

/// Symmetric matrices Sym and Q in whitened coordinates y = L^T x (G = L L^T), so that
/// <Ax,x> = y^T Sym y, ||x||^2 = y^T y and ||P1 x||^2 = y^T Q y.
struct WhitenedForms {
  Matrix sym;
  Matrix proj;
};

inline WhitenedForms whiten(const HilbertSpace& space, const Matrix& a, const Matrix& p1) {
  const Matrix g = space.gram();
  Matrix sym_ga = 0.5 * (g * a + a.transpose() * g);
  Matrix q = p1.transpose() * g * p1;
  if (space.kind() == HilbertSpace::Kind::euclidean) return {std::move(sym_ga), 0.5 * (q + q.transpose())};
  const Eigen::LLT<Matrix> llt(g);
  const auto lower = llt.matrixL();
  // K M K^T with K = L^{-1}
  Matrix left = lower.solve(sym_ga);
  Matrix sym = lower.solve(left.transpose());
  Matrix qleft = lower.solve(q);
  Matrix proj = lower.solve(qleft.transpose());
  return {0.5 * (sym + sym.transpose()), 0.5 * (proj + proj.transpose())};
}

inline double max_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

}  // namespace detail

/// Largest lambda0 >= tol (to within tol) with
/// lambda_max(Sym(A) + lambda0 (I - P1) - lambda1 P1) <= 0, by monotone bisection.
inline std::optional<double> certify_lambda0(const HilbertSpace& space, const Matrix& a,
                                             const Projection& p1, double lambda1,
                                             double tol = 1e-9) {
  require(a.rows() == a.cols(), "certify_lambda0: generator must be square");
  require(static_cast<std::size_t>(a.rows()) == space.dim(), "certify_lambda0: dimension mismatch");
  require(lambda1 >= 0.0, "certify_lambda0: lambda1 must be nonnegative");
  require(tol > 0.0, "certify_lambda0: tolerance must be positive");
  const auto forms = detail::whiten(space, a, p1.matrix());
  const auto n = forms.sym.rows();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix complement = id - forms.proj;
  const Matrix base = forms.sym - lambda1 * forms.proj;
  const double sym_norm = Eigen::SelfAdjointEigenSolver<Matrix>(forms.sym, Eigen::EigenvaluesOnly)
                              .eigenvalues()
                              .cwiseAbs()
                              .maxCoeff();
  // null directions of the form (constants, kernels) sit at rounding level
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + sym_norm + lambda1);
  auto feasible = [&](double lambda0) {
    return detail::max_eigenvalue(base + lambda0 * complement) <= slack * (1.0 + lambda0);
  };
  double lo = tol;
  double hi = sym_norm + lambda1 + 1.0;
  if (!feasible(lo)) return std::nullopt;
  if (feasible(hi)) return hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

inline std::optional<double> certify_lambda0(const Matrix& a, const Projection& p1, double lambda1,
                                             double tol = 1e-9) {
  return certify_lambda0(HilbertSpace::euclidean(static_cast<std::size_t>(a.rows())), a, p1, lambda1, tol);
}

/// Effective constants from (lambda0, lambda1) and the Lipschitz constants.
inline GdcCertificate make_certificate(double lambda0, double lambda1, const LipschitzConstants& lips) {
  require(lips.L_F >= 0.0 && lips.L_sigma >= 0.0 && lips.L_gamma >= 0.0,
          "make_certificate: Lipschitz constants must be nonnegative");
  const double root = std::sqrt(lips.L_F);
  if (!(lambda0 > root))
    throw CertificationFailed("GDC constant not positive: lambda0 = " + std::to_string(lambda0) +
                              " <= sqrt(L_F) = " + std::to_string(root));
  GdcCertificate cert;
  cert.lambda0 = lambda0;
  cert.lambda1 = lambda1;
  cert.lipschitz = lips;
  cert.alpha = lambda0 - root;
  cert.beta_const = lambda1 + root;
  cert.epsilon = 2.0 * cert.alpha - lips.L_sigma - lips.L_gamma;
  return cert;
}

inline GdcCertificate make_certificate(const HilbertSpace& space, const Matrix& a, const Projection& p1,
                                       double lambda1, const LipschitzConstants& lips,
                                       double tol = 1e-9) {
  const auto lambda0 = certify_lambda0(space, a, p1, lambda1, tol);
  if (!lambda0) throw CertificationFailed("no lambda0 >= tol satisfies the dissipativity inequality");
  return make_certificate(*lambda0, lambda1, lips);
}

/// Largest value of <Ax,x> + lambda0 ||x||^2 - (lambda0+lambda1) ||P1 x||^2 over random unit vectors.
/// A valid certificate gives a value <= 0 up to rounding.
inline double audit_quadratic_form(const HilbertSpace& space, const Matrix& a, const Projection& p1,
                                   const GdcCertificate& cert, std::size_t samples = 1000,
                                   std::uint64_t seed = 0x41554449ULL) {
  double worst = -std::numeric_limits<double>::infinity();
  for (Vector x : probe_vectors(space.dim(), samples, seed)) {
    x /= space.norm(x);
    const Vector px = p1.apply(x);
    const double value = space.inner(a * x, x) + cert.lambda0 * space.norm_squared(x) -
                         (cert.lambda0 + cert.lambda1) * space.norm_squared(px);
    worst = std::max(worst, value);
  }
  return worst;
}

using ConvergenceFit = stats::RateFit;

/// Fits sup_probes ||S(t)x - Px|| / ||x|| ~ M e^{-rate t}. All residuals under 1e-14
/// report the +infinity rate sentinel.
inline ConvergenceFit fit_convergence(const OperatorModel& op, const Projection& p,
                                      std::span<const double> t_grid, std::span<const Vector> probes) {
  require(t_grid.size() >= 4, "fit_convergence: need at least 4 time points");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    require(t_grid[i] > t_grid[i - 1], "fit_convergence: time grid must be increasing");
  require(!probes.empty(), "fit_convergence: no probe vectors");
  const HilbertSpace& space = op.space();
  std::vector<Vector> limits;
  std::vector<double> norms;
  for (const Vector& x : probes) {
    const double nx = space.norm(x);
    require(nx > 0.0, "fit_convergence: probe vectors must be nonzero");
    limits.push_back(p.apply(x));
    norms.push_back(nx);
  }
  std::vector<double> sup(t_grid.size(), 0.0);
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const bool matrix_mode = op.mode() == OperatorModel::SemigroupMode::matrix_exponential;
    const Matrix s = matrix_mode ? op.semigroup_matrix(t_grid[k]) : Matrix();
    for (std::size_t j = 0; j < probes.size(); ++j) {
      const Vector sx = matrix_mode ? Vector(s * probes[j]) : op.apply_semigroup(t_grid[k], probes[j]);
      sup[k] = std::max(sup[k], space.norm(sx - limits[j]) / norms[j]);
    }
  }
  return stats::exponential_rate_fit(t_grid, sup, 1e-14);
}

}  // namespace spdelab
