#pragma once

// Wasserstein-2 distances between equal-weight empirical laws, plus the
// closed form between Gaussians.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "errors.hpp"
#include "hilbert.hpp"

namespace spdelab {

inline constexpr std::size_t kAssignmentBudget = 512;

class EmpiricalLaw {
 public:
  explicit EmpiricalLaw(std::vector<Vector> samples) : samples_(std::move(samples)) {
    require(!samples_.empty(), "EmpiricalLaw: no samples");
    const auto d = samples_.front().size();
    for (const Vector& s : samples_) require(s.size() == d, "EmpiricalLaw: samples differ in dimension");
  }

  static EmpiricalLaw scalar(std::span<const double> xs) {
    std::vector<Vector> v;
    v.reserve(xs.size());
    for (double x : xs) v.push_back(Vector::Constant(1, x));
    return EmpiricalLaw(std::move(v));
  }

  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(samples_.front().size()); }
  const std::vector<Vector>& samples() const noexcept { return samples_; }
  const Vector& operator[](std::size_t i) const { return samples_[i]; }

  Vector mean() const {
    Vector m = Vector::Zero(samples_.front().size());
    for (const Vector& s : samples_) m += s;
    return m / static_cast<double>(samples_.size());
  }

  std::vector<double> coordinate(std::size_t i) const {
    std::vector<double> out;
    out.reserve(samples_.size());
    for (const Vector& s : samples_) out.push_back(s[static_cast<Eigen::Index>(i)]);
    return out;
  }

 private:
  std::vector<Vector> samples_;
};

/// Exact W2 on the line: the monotone coupling of the order statistics.
inline double w2_1d(std::vector<double> a, std::vector<double> b) {
  require(a.size() == b.size(), "w2_1d: sample counts differ");
  require(!a.empty(), "w2_1d: empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

inline double w2_1d(const EmpiricalLaw& a, const EmpiricalLaw& b) {
  require(a.dim() == 1 && b.dim() == 1, "w2_1d: laws are not one-dimensional");
  return w2_1d(a.coordinate(0), b.coordinate(0));
}

/// Minimum-cost perfect matching (Hungarian method with potentials, O(n^3)).
/// Returns assignment[i] = column matched to row i.
inline std::vector<std::size_t> solve_assignment(const Matrix& cost) {
  require(cost.rows() == cost.cols(), "solve_assignment: cost matrix must be square");
  const std::size_t n = static_cast<std::size_t>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based rows/columns; column 0 is the virtual start
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

/// Exact W2 between equal-count empirical laws in any dimension, in the given geometry.
inline double w2_assignment(const EmpiricalLaw& a, const EmpiricalLaw& b, const HilbertSpace& space) {
  require(a.size() == b.size(), "w2_assignment: sample counts differ");
  require(a.dim() == b.dim(), "w2_assignment: dimensions differ");
  if (a.size() > kAssignmentBudget)
    throw BudgetExceeded("w2_assignment: N = " + std::to_string(a.size()) + " exceeds the exact-solver budget of " +
                         std::to_string(kAssignmentBudget) + "; use w2_1d on a one-dimensional observable instead");
  const auto n = static_cast<Eigen::Index>(a.size());
  Matrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      cost(i, j) = space.norm_squared(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)]);
  const auto match = solve_assignment(cost);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) acc += cost(i, static_cast<Eigen::Index>(match[static_cast<std::size_t>(i)]));
  return std::sqrt(std::max(0.0, acc / static_cast<double>(n)));
}

inline double w2_assignment(const EmpiricalLaw& a, const EmpiricalLaw& b) {
  return w2_assignment(a, b, HilbertSpace::euclidean(a.dim()));
}

namespace detail {

inline void require_psd(const Matrix& c, const char* what) {
  require(c.rows() == c.cols(), std::string(what) + " is not square");
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  require((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, std::string(what) + " is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-10 * scale, std::string(what) + " is not positive semidefinite");
}

/// Symmetric PSD square root with eigenvalues clamped at zero.
inline Matrix psd_sqrt(const Matrix& c) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.transpose()));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// W2(N(m1, C1), N(m2, C2)) = sqrt(||m1-m2||^2 + tr(C1 + C2 - 2 (C1^{1/2} C2 C1^{1/2})^{1/2})).
inline double w2_gaussian(const Vector& m1, const Matrix& c1, const Vector& m2, const Matrix& c2) {
  require(m1.size() == m2.size(), "w2_gaussian: mean dimensions differ");
  require(c1.rows() == m1.size() && c2.rows() == m2.size(), "w2_gaussian: covariance dimension mismatch");
  detail::require_psd(c1, "w2_gaussian: C1");
  detail::require_psd(c2, "w2_gaussian: C2");
  const Matrix r1 = detail::psd_sqrt(c1);
  const Matrix cross = detail::psd_sqrt(r1 * c2 * r1);
  const double tr = c1.trace() + c2.trace() - 2.0 * cross.trace();
  return std::sqrt((m1 - m2).squaredNorm() + std::max(0.0, tr));
}

}  // namespace spdelab
