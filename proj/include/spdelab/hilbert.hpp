#pragma once

// Finite-dimensional Hilbert spaces, projections and semigroups.
//
// Three geometries are supported:
//   * euclidean    -- R^n with the standard inner product;
//   * weighted     -- L^2(eta) on a finite state space, <x,y> = sum_i eta_i x_i y_i;
//   * hbeta-grid   -- forward curves sampled on an increasing grid 0 = x_0 < ... < x_{n-1},
//                     with ||h||^2 = h(x_max)^2 + int (h')^2 e^{beta x} dx.
//
// On the hbeta grid a vector is read as its piecewise-linear interpolant. The
// derivative on a cell is the forward difference and the weight e^{beta x} is
// integrated exactly over each cell, so the discrete norm is the exact H_beta norm
// of the interpolant (with the long rate h(infinity) replaced by h(x_max)).

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "errors.hpp"
#include "random.hpp"

namespace spdelab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct GridSpec {
  double x_max = 20.0;
  std::size_t n = 2048;
  double beta = 1.0;
};

class HilbertSpace {
 public:
  enum class Kind { euclidean, weighted, hbeta_grid };

  static HilbertSpace euclidean(std::size_t dim) {
    require(dim > 0, "HilbertSpace: dimension must be positive");
    HilbertSpace s;
    s.kind_ = Kind::euclidean;
    s.dim_ = dim;
    return s;
  }

  static HilbertSpace weighted(Vector weights) {
    require(weights.size() > 0, "HilbertSpace: empty weight vector");
    require((weights.array() > 0.0).all(), "HilbertSpace: weights must be positive");
    HilbertSpace s;
    s.kind_ = Kind::weighted;
    s.dim_ = static_cast<std::size_t>(weights.size());
    s.weights_ = std::move(weights);
    return s;
  }

  static HilbertSpace hbeta_grid(const GridSpec& spec) {
    require(spec.n >= 2, "HilbertSpace: hbeta grid needs at least two points");
    require(spec.x_max > 0.0, "HilbertSpace: x_max must be positive");
    Vector points = Vector::LinSpaced(static_cast<Eigen::Index>(spec.n), 0.0, spec.x_max);
    return hbeta_grid(std::move(points), spec.beta);
  }

  static HilbertSpace hbeta_grid(Vector points, double beta) {
    require(points.size() >= 2, "HilbertSpace: hbeta grid needs at least two points");
    require(beta > 0.0, "HilbertSpace: beta must be positive");
    require(points[0] == 0.0, "HilbertSpace: grid must start at 0");
    for (Eigen::Index i = 1; i < points.size(); ++i)
      require(points[i] > points[i - 1], "HilbertSpace: grid must be strictly increasing");
    HilbertSpace s;
    s.kind_ = Kind::hbeta_grid;
    s.dim_ = static_cast<std::size_t>(points.size());
    s.beta_ = beta;
    s.grid_ = std::move(points);
    const Eigen::Index cells = s.grid_.size() - 1;
    s.cell_coef_.resize(cells);
    for (Eigen::Index i = 0; i < cells; ++i) {
      const double dx = s.grid_[i + 1] - s.grid_[i];
      const double weight = std::exp(beta * s.grid_[i]) * std::expm1(beta * dx) / beta;
      s.cell_coef_[i] = weight / (dx * dx);
    }
    return s;
  }

  /// Same grid, different exponential weight (used for the beta' norms).
  HilbertSpace with_beta(double beta) const {
    require(kind_ == Kind::hbeta_grid, "with_beta: not an hbeta grid");
    return hbeta_grid(grid_, beta);
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  bool is_grid() const noexcept { return kind_ == Kind::hbeta_grid; }
  double beta() const noexcept { return beta_; }
  const Vector& grid() const noexcept { return grid_; }
  const Vector& weights() const noexcept { return weights_; }
  double x_max() const { return grid_[grid_.size() - 1]; }

  double inner(const Vector& x, const Vector& y) const {
    check_dim(x);
    check_dim(y);
    switch (kind_) {
      case Kind::euclidean:
        return x.dot(y);
      case Kind::weighted:
        return (weights_.array() * x.array() * y.array()).sum();
      case Kind::hbeta_grid: {
        const Eigen::Index n = x.size();
        double acc = 0.0;
        for (Eigen::Index i = 0; i + 1 < n; ++i)
          acc += cell_coef_[i] * (x[i + 1] - x[i]) * (y[i + 1] - y[i]);
        return x[n - 1] * y[n - 1] + acc;
      }
    }
    return 0.0;
  }

  double norm_squared(const Vector& x) const { return inner(x, x); }
  double norm(const Vector& x) const { return std::sqrt(norm_squared(x)); }

  /// Dense Gram matrix G with <x,y> = x^T G y.
  Matrix gram() const {
    const auto n = static_cast<Eigen::Index>(dim_);
    switch (kind_) {
      case Kind::euclidean:
        return Matrix::Identity(n, n);
      case Kind::weighted:
        return weights_.asDiagonal();
      case Kind::hbeta_grid: {
        Matrix g = Matrix::Zero(n, n);
        g(n - 1, n - 1) = 1.0;
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
          const double c = cell_coef_[i];
          g(i, i) += c;
          g(i + 1, i + 1) += c;
          g(i, i + 1) -= c;
          g(i + 1, i) -= c;
        }
        return g;
      }
    }
    return {};
  }

  /// Constant vector (for hbeta grids, the constant curve).
  Vector constant(double c) const { return Vector::Constant(static_cast<Eigen::Index>(dim_), c); }

  void check_dim(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != dim_)
      throw ContractViolation("dimension mismatch: expected " + std::to_string(dim_) + ", got " +
                              std::to_string(x.size()));
  }

 private:
  HilbertSpace() = default;

  Kind kind_ = Kind::euclidean;
  std::size_t dim_ = 0;
  double beta_ = 0.0;
  Vector grid_;
  Vector weights_;
  Vector cell_coef_;
};

inline double inner(const HilbertSpace& space, const Vector& x, const Vector& y) {
  return space.inner(x, y);
}

/// Deterministic random probe vectors used by the structural audits.
inline std::vector<Vector> probe_vectors(std::size_t dim, std::size_t count, std::uint64_t seed) {
  Engine engine = make_engine(seed, StreamTag::probe);
  std::normal_distribution<double> normal;
  std::vector<Vector> probes(count, Vector(static_cast<Eigen::Index>(dim)));
  for (auto& p : probes)
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = normal(engine);
  return probes;
}

/// An idempotent operator, self-adjoint in the geometry it was validated against.
/// Stored as an explicit matrix; copies share the storage.
class Projection {
 public:
  Projection(Matrix matrix, const HilbertSpace& space, double tol = 1e-10)
      : matrix_(std::make_shared<const Matrix>(std::move(matrix))) {
    const auto n = static_cast<Eigen::Index>(space.dim());
    require(matrix_->rows() == n && matrix_->cols() == n, "Projection: matrix/space dimension mismatch");
    const auto probes = probe_vectors(space.dim(), 8, 0x50524f4aULL);
    for (std::size_t k = 0; k < probes.size(); ++k) {
      const Vector& x = probes[k];
      const Vector& y = probes[(k + 1) % probes.size()];
      const Vector px = apply(x);
      const double scale = std::max(1.0, space.norm(x));
      require(space.norm(apply(px) - px) <= tol * scale, "Projection: matrix is not idempotent");
      const double lhs = space.inner(px, y);
      const double rhs = space.inner(x, apply(y));
      const double ref = std::max(1.0, space.norm(x) * space.norm(y));
      require(std::abs(lhs - rhs) <= 1e3 * tol * ref, "Projection: matrix is not self-adjoint");
    }
  }

  static Projection identity(const HilbertSpace& space) {
    const auto n = static_cast<Eigen::Index>(space.dim());
    return Projection(Matrix::Identity(n, n), space);
  }
  static Projection zero(const HilbertSpace& space) {
    const auto n = static_cast<Eigen::Index>(space.dim());
    return Projection(Matrix::Zero(n, n), space);
  }
  /// Coordinate projection diag(mask); orthogonal for euclidean and weighted spaces.
  static Projection coordinate(const HilbertSpace& space, const std::vector<bool>& mask) {
    require(mask.size() == space.dim(), "Projection::coordinate: mask size mismatch");
    Vector d(static_cast<Eigen::Index>(mask.size()));
    for (std::size_t i = 0; i < mask.size(); ++i) d[static_cast<Eigen::Index>(i)] = mask[i] ? 1.0 : 0.0;
    return Projection(d.asDiagonal(), space);
  }
  /// h -> h(x_max) * 1, the long-rate projection on an hbeta grid.
  static Projection long_rate(const HilbertSpace& space) {
    require(space.is_grid(), "Projection::long_rate: not an hbeta grid");
    const auto n = static_cast<Eigen::Index>(space.dim());
    Matrix m = Matrix::Zero(n, n);
    m.col(n - 1).setOnes();
    return Projection(std::move(m), space);
  }
  /// v -> (sum_i eta_i v_i) * 1, the eta-averaging projection on L^2(eta).
  static Projection averaging(const HilbertSpace& space) {
    require(space.kind() == HilbertSpace::Kind::weighted, "Projection::averaging: needs a weighted space");
    const Vector& eta = space.weights();
    const double total = eta.sum();
    require(std::abs(total - 1.0) <= 1e-12, "Projection::averaging: weights must sum to one");
    Matrix m = Vector::Ones(eta.size()) * eta.transpose();
    return Projection(std::move(m), space);
  }

  const Matrix& matrix() const noexcept { return *matrix_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_->rows()); }

  Vector apply(const Vector& x) const {
    if (x.size() != matrix_->cols())
      throw ContractViolation("project: dimension mismatch");
    return (*matrix_) * x;
  }

  /// I - P.
  Vector complement(const Vector& x) const { return x - apply(x); }

 private:
  std::shared_ptr<const Matrix> matrix_;
};

inline Vector project(const Projection& p, const Vector& x) { return p.apply(x); }

/// Generator A together with its semigroup S(t).
class OperatorModel {
 public:
  enum class SemigroupMode { matrix_exponential, grid_shift };

  static OperatorModel matrix(HilbertSpace space, Matrix generator) {
    const auto n = static_cast<Eigen::Index>(space.dim());
    require(generator.rows() == n && generator.cols() == n,
            "OperatorModel: generator must be square with the space dimension");
    OperatorModel op(std::move(space));
    op.mode_ = SemigroupMode::matrix_exponential;
    op.generator_ = std::make_shared<const Matrix>(std::move(generator));
    return op;
  }

  /// Shift semigroup S(t)h(x) = h(x + t) on a grid space, extended beyond x_max by h(x_max).
  static OperatorModel grid_shift(HilbertSpace space) {
    require(space.is_grid(), "OperatorModel::grid_shift: needs an hbeta grid");
    OperatorModel op(std::move(space));
    op.mode_ = SemigroupMode::grid_shift;
    return op;
  }

  SemigroupMode mode() const noexcept { return mode_; }
  const HilbertSpace& space() const noexcept { return space_; }
  std::size_t dim() const noexcept { return space_.dim(); }

  /// Generator matrix; forward differences for the shift semigroup.
  Matrix generator() const {
    if (mode_ == SemigroupMode::matrix_exponential) return *generator_;
    const auto n = static_cast<Eigen::Index>(dim());
    Matrix d = Matrix::Zero(n, n);
    const Vector& x = space_.grid();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double inv = 1.0 / (x[i + 1] - x[i]);
      d(i, i) = -inv;
      d(i, i + 1) = inv;
    }
    return d;
  }

  Vector apply_generator(const Vector& v) const {
    space_.check_dim(v);
    if (mode_ == SemigroupMode::matrix_exponential) return (*generator_) * v;
    const Eigen::Index n = v.size();
    const Vector& x = space_.grid();
    Vector out(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) out[i] = (v[i + 1] - v[i]) / (x[i + 1] - x[i]);
    out[n - 1] = 0.0;
    return out;
  }

  /// e^{tA} (matrix mode only).
  Matrix semigroup_matrix(double t) const {
    require(mode_ == SemigroupMode::matrix_exponential, "semigroup_matrix: not in matrix mode");
    require(t >= 0.0, "semigroup_matrix: t must be nonnegative");
    const auto n = static_cast<Eigen::Index>(dim());
    if (t == 0.0) return Matrix::Identity(n, n);
    return (t * (*generator_)).exp();
  }

  /// Adjoint of S(t) in the space geometry: G^{-1} S(t)^T G.
  Matrix adjoint_semigroup_matrix(double t) const {
    const Matrix s = semigroup_matrix(t);
    if (space_.kind() == HilbertSpace::Kind::euclidean) return s.transpose();
    const Matrix g = space_.gram();
    return g.llt().solve(s.transpose() * g);
  }

  Vector apply_semigroup(double t, const Vector& x) const {
    require(t >= 0.0, "apply_semigroup: t must be nonnegative");
    space_.check_dim(x);
    if (t == 0.0) return x;
    if (mode_ == SemigroupMode::matrix_exponential) return semigroup_matrix(t) * x;
    Vector out;
    shift_into(t, x, out);
    return out;
  }

  /// out(x_i) = h(x_i + t) by linear interpolation, constant beyond x_max.
  /// Grid-aligned shifts reduce to exact index shifts.
  void shift_into(double t, const Vector& h, Vector& out) const {
    const Vector& x = space_.grid();
    const Eigen::Index n = x.size();
    out.resize(n);
    const double last = h[n - 1];
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double target = x[i] + t;
      if (target >= x[n - 1]) {
        out[i] = last;
        continue;
      }
      while (k + 1 < n && x[k + 1] <= target) ++k;
      const double frac = (target - x[k]) / (x[k + 1] - x[k]);
      if (frac < 1e-12)
        out[i] = h[k];
      else if (frac > 1.0 - 1e-12)
        out[i] = h[k + 1];
      else
        out[i] = h[k] + frac * (h[k + 1] - h[k]);
    }
  }

 private:
  explicit OperatorModel(HilbertSpace space) : space_(std::move(space)) {}

  HilbertSpace space_;
  SemigroupMode mode_ = SemigroupMode::matrix_exponential;
  std::shared_ptr<const Matrix> generator_;
};

inline Vector apply_semigroup(const OperatorModel& op, double t, const Vector& x) {
  return op.apply_semigroup(t, x);
}

}  // namespace spdelab
