#pragma once

// Driving noise: a Q-Wiener process truncated to finitely many modes and a
// finite-activity marked Poisson random measure. Increments are binned to a
// uniform time grid; a NoisePath records them so that they can be replayed or
// viewed with a time shift.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "hilbert.hpp"
#include "random.hpp"

namespace spdelab {

/// Distribution of the jump marks nu (vectors of a fixed dimension).
struct MarkDistribution {
  enum class Kind { point_mass, gaussian, uniform, discrete };

  Kind kind = Kind::point_mass;
  Vector a;  // point: location; gaussian: mean; uniform: lower corner; discrete: first atom
  Vector b;  // gaussian: per-component std; uniform: upper corner
  std::vector<Vector> atoms;   // discrete only
  std::vector<double> probs;   // discrete only, sums to one

  static MarkDistribution point_mass(Vector z) { return {Kind::point_mass, std::move(z), Vector(), {}, {}}; }
  static MarkDistribution gaussian(Vector mean, Vector stddev) {
    require(mean.size() == stddev.size(), "gaussian marks: mean/std size mismatch");
    require((stddev.array() >= 0.0).all(), "gaussian marks: negative std");
    return {Kind::gaussian, std::move(mean), std::move(stddev), {}, {}};
  }
  static MarkDistribution uniform(Vector lo, Vector hi) {
    require(lo.size() == hi.size(), "uniform marks: bound size mismatch");
    require((hi.array() >= lo.array()).all(), "uniform marks: hi < lo");
    return {Kind::uniform, std::move(lo), std::move(hi), {}, {}};
  }
  /// Atoms with nonnegative weights (normalized here).
  static MarkDistribution discrete(std::vector<Vector> atoms, std::vector<double> weights) {
    require(!atoms.empty() && atoms.size() == weights.size(), "discrete marks: atoms/weights mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      require(atoms[i].size() == atoms[0].size(), "discrete marks: atoms differ in dimension");
      require(weights[i] >= 0.0, "discrete marks: negative weight");
      total += weights[i];
    }
    require(total > 0.0, "discrete marks: weights sum to zero");
    for (double& w : weights) w /= total;
    Vector first = atoms[0];
    return {Kind::discrete, std::move(first), Vector(), std::move(atoms), std::move(weights)};
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(a.size()); }

  template <class Rng>
  Vector sample(Rng& rng) const {
    Vector z(a.size());
    switch (kind) {
      case Kind::point_mass:
        return a;
      case Kind::gaussian: {
        boost::random::normal_distribution<double> normal;
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = a[i] + b[i] * normal(rng);
        return z;
      }
      case Kind::uniform: {
        std::uniform_real_distribution<double> unif;
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = a[i] + (b[i] - a[i]) * unif(rng);
        return z;
      }
      case Kind::discrete: {
        const double u = std::uniform_real_distribution<double>()(rng);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
          acc += probs[i];
          if (u < acc) return atoms[i];
        }
        return atoms.back();
      }
    }
    return z;
  }

  Vector mean() const {
    switch (kind) {
      case Kind::point_mass:
      case Kind::gaussian:
        return a;
      case Kind::uniform:
        return 0.5 * (a + b);
      case Kind::discrete: {
        Vector m = Vector::Zero(a.size());
        for (std::size_t i = 0; i < atoms.size(); ++i) m += probs[i] * atoms[i];
        return m;
      }
    }
    return a;
  }

  /// Componentwise E[m_i^2].
  Vector second_moments() const {
    switch (kind) {
      case Kind::point_mass:
        return a.array().square();
      case Kind::gaussian:
        return a.array().square() + b.array().square();
      case Kind::uniform:
        return (a.array().square() + a.array() * b.array() + b.array().square()) / 3.0;
      case Kind::discrete: {
        Vector m = Vector::Zero(a.size());
        for (std::size_t i = 0; i < atoms.size(); ++i) m += probs[i] * atoms[i].array().square().matrix();
        return m;
      }
    }
    return a;
  }

  /// E[||m||^2] in the euclidean mark coordinates.
  double mean_squared_norm() const { return second_moments().sum(); }

  /// E[m 1{||m|| <= radius}]: closed form for point masses and one-dimensional
  /// marks, fixed-seed Monte Carlo otherwise.
  Vector truncated_mean(double radius, std::size_t mc_samples = 1u << 20,
                        std::uint64_t seed = 0x5452554eULL) const {
    if (kind == Kind::point_mass) return a.norm() <= radius ? a : Vector(Vector::Zero(a.size()));
    if (kind == Kind::discrete) {
      Vector m = Vector::Zero(a.size());
      for (std::size_t i = 0; i < atoms.size(); ++i)
        if (atoms[i].norm() <= radius) m += probs[i] * atoms[i];
      return m;
    }
    if (a.size() == 1) {
      Vector out(1);
      if (kind == Kind::uniform) {
        const double lo = std::max(a[0], -radius), hi = std::min(b[0], radius);
        const double width = b[0] - a[0];
        if (width == 0.0)
          out[0] = std::abs(a[0]) <= radius ? a[0] : 0.0;
        else
          out[0] = hi > lo ? 0.5 * (hi * hi - lo * lo) / width : 0.0;
        return out;
      }
      const double m = a[0], s = b[0];
      if (s == 0.0) {
        out[0] = std::abs(m) <= radius ? m : 0.0;
        return out;
      }
      const double za = (-radius - m) / s, zb = (radius - m) / s;
      const auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
      const auto pdf = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
      out[0] = m * (cdf(zb) - cdf(za)) + s * (pdf(za) - pdf(zb));
      return out;
    }
    Engine engine = make_engine(seed, StreamTag::quadrature);
    Vector acc = Vector::Zero(a.size());
    for (std::size_t k = 0; k < mc_samples; ++k) {
      const Vector z = sample(engine);
      if (z.norm() <= radius) acc += z;
    }
    return acc / static_cast<double>(mc_samples);
  }
};

/// Q = sum_j lambda_j e_j (x) e_j with orthonormal e_j (columns of `eigenvectors`).
struct QWienerSpec {
  Vector eigenvalues;
  Matrix eigenvectors;  // dim_U x modes

  static QWienerSpec diagonal(Vector eigenvalues) {
    const auto m = eigenvalues.size();
    return {std::move(eigenvalues), Matrix::Identity(m, m)};
  }
  static QWienerSpec none() { return diagonal(Vector()); }

  std::size_t modes() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
  std::size_t u_dim() const noexcept { return static_cast<std::size_t>(eigenvectors.rows()); }
  double trace() const { return eigenvalues.sum(); }

  void validate() const {
    require(eigenvectors.cols() == eigenvalues.size(), "QWienerSpec: eigenvector/eigenvalue count mismatch");
    require((eigenvalues.array() >= 0.0).all(), "QWienerSpec: eigenvalues must be nonnegative");
    if (eigenvalues.size() == 0) return;
    const Matrix gram = eigenvectors.transpose() * eigenvectors;
    const Matrix id = Matrix::Identity(gram.rows(), gram.cols());
    require((gram - id).cwiseAbs().maxCoeff() <= 1e-10, "QWienerSpec: eigenvectors are not orthonormal");
  }
};

/// Finite jump measure mu = total_rate * law(marks) with coefficient gamma(x, nu).
struct JumpSpec {
  double total_rate = 0.0;
  MarkDistribution marks;
  std::function<Vector(const Vector& x, const Vector& mark)> gamma;
  /// int gamma(x, nu) mu(dnu), the compensator drift subtracted by the scheme.
  std::function<Vector(const Vector& x)> compensator;
  /// int ||gamma(x, nu) - gamma(y, nu)||_H^2 mu(dnu).
  std::function<double(const Vector& x, const Vector& y)> l2_difference;
  /// Set when gamma(x, nu) = nu: the compensator is then this constant vector.
  std::optional<Vector> additive_compensator;

  bool active() const noexcept { return total_rate > 0.0; }

  static JumpSpec none() {
    JumpSpec js;
    js.marks = MarkDistribution::point_mass(Vector());
    js.gamma = [](const Vector& x, const Vector&) { return Vector(Vector::Zero(x.size())); };
    js.compensator = [](const Vector& x) { return Vector(Vector::Zero(x.size())); };
    js.l2_difference = [](const Vector&, const Vector&) { return 0.0; };
    js.additive_compensator = Vector();
    return js;
  }

  /// gamma(x, z) = z; marks live in H coordinates. `compensator` is the constant
  /// drift correction (the full mean rate * E[z], or a truncated version of it).
  static JumpSpec additive(double rate, MarkDistribution marks, Vector compensator) {
    require(rate >= 0.0, "JumpSpec: rate must be nonnegative");
    require(compensator.size() == static_cast<Eigen::Index>(marks.dim()),
            "JumpSpec: compensator dimension mismatch");
    JumpSpec js;
    js.total_rate = rate;
    js.marks = std::move(marks);
    js.gamma = [](const Vector&, const Vector& z) { return z; };
    js.compensator = [c = compensator](const Vector&) { return c; };
    js.l2_difference = [](const Vector&, const Vector&) { return 0.0; };
    js.additive_compensator = std::move(compensator);
    return js;
  }

  /// gamma(x, m) = m_0 * B x with scalar-valued marks (first component).
  static JumpSpec linear(const HilbertSpace& space, double rate, MarkDistribution marks, Matrix b) {
    require(rate >= 0.0, "JumpSpec: rate must be nonnegative");
    require(marks.dim() >= 1, "JumpSpec::linear: marks need at least one component");
    JumpSpec js;
    js.total_rate = rate;
    const double m1 = marks.mean()[0];
    const double m2 = marks.second_moments()[0];
    js.marks = std::move(marks);
    js.gamma = [b](const Vector& x, const Vector& m) { return Vector(m[0] * (b * x)); };
    js.compensator = [b, rate, m1](const Vector& x) { return Vector(rate * m1 * (b * x)); };
    js.l2_difference = [b, rate, m2, space](const Vector& x, const Vector& y) {
      return rate * m2 * space.norm_squared(b * (x - y));
    };
    return js;
  }
};

/// One step's worth of jump marks.
using MarkSpan = std::span<const Vector>;

/// Streams Gaussian mode increments N(0, dt lambda_j) and Poisson(rate dt) jump
/// marks from two independent sub-streams of one seed.
class NoiseGenerator {
 public:
  NoiseGenerator(const QWienerSpec& qw, const JumpSpec& js, double dt, std::uint64_t seed)
      : gaussian_engine_(make_engine(seed, StreamTag::gaussian)),
        jump_engine_(make_engine(seed, StreamTag::jump)),
        scale_(qw.eigenvalues.array().max(0.0).sqrt() * std::sqrt(dt)),
        marks_(js.marks),
        jumps_active_(js.total_rate > 0.0) {
    require(dt > 0.0, "NoiseGenerator: dt must be positive");
    if (jumps_active_) poisson_ = std::poisson_distribution<long>(js.total_rate * dt);
  }

  std::size_t modes() const noexcept { return static_cast<std::size_t>(scale_.size()); }

  void next(Vector& gaussian, std::vector<Vector>& marks) {
    gaussian.resize(scale_.size());
    for (Eigen::Index j = 0; j < scale_.size(); ++j) gaussian[j] = scale_[j] * normal_(gaussian_engine_);
    marks.clear();
    if (!jumps_active_) return;
    const long count = poisson_(jump_engine_);
    for (long k = 0; k < count; ++k) marks.push_back(marks_.sample(jump_engine_));
  }

 private:
  Engine gaussian_engine_;
  Engine jump_engine_;
  boost::random::normal_distribution<double> normal_;
  std::poisson_distribution<long> poisson_;
  Vector scale_;
  MarkDistribution marks_;
  bool jumps_active_;
};

struct JumpEvent {
  std::size_t step;
  Vector mark;
};

/// Recorded noise on a grid of n_steps steps of length dt.
class NoisePath {
 public:
  NoisePath(double dt, std::size_t n_steps, std::size_t modes, std::uint64_t seed)
      : dt_(dt), n_steps_(n_steps), seed_(seed), gaussian_(static_cast<Eigen::Index>(modes),
                                                           static_cast<Eigen::Index>(n_steps)) {
    jump_offsets_.reserve(n_steps + 1);
    jump_offsets_.push_back(0);
  }

  double dt() const noexcept { return dt_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  std::uint64_t master_seed() const noexcept { return seed_; }
  std::size_t modes() const noexcept { return static_cast<std::size_t>(gaussian_.rows()); }
  const Matrix& gaussian_increments() const noexcept { return gaussian_; }

  auto gaussian(std::size_t k) const { return gaussian_.col(static_cast<Eigen::Index>(k)); }
  MarkSpan marks(std::size_t k) const {
    return MarkSpan(marks_.data() + jump_offsets_[k], jump_offsets_[k + 1] - jump_offsets_[k]);
  }
  std::size_t jump_count() const noexcept { return marks_.size(); }

  std::vector<JumpEvent> jump_events() const {
    std::vector<JumpEvent> events;
    for (std::size_t k = 0; k < n_steps_; ++k)
      for (const Vector& m : marks(k)) events.push_back({k, m});
    return events;
  }

  void record(std::size_t k, const Vector& gaussian, const std::vector<Vector>& marks) {
    gaussian_.col(static_cast<Eigen::Index>(k)) = gaussian;
    marks_.insert(marks_.end(), marks.begin(), marks.end());
    jump_offsets_.push_back(marks_.size());
  }

 private:
  double dt_;
  std::size_t n_steps_;
  std::uint64_t seed_;
  Matrix gaussian_;
  std::vector<std::size_t> jump_offsets_;
  std::vector<Vector> marks_;
};

inline NoisePath sample_path(const QWienerSpec& qw, const JumpSpec& js, double dt, std::size_t n_steps,
                             std::uint64_t seed) {
  NoiseGenerator gen(qw, js, dt, seed);
  NoisePath path(dt, n_steps, qw.modes(), seed);
  Vector g;
  std::vector<Vector> marks;
  for (std::size_t k = 0; k < n_steps; ++k) {
    gen.next(g, marks);
    path.record(k, g, marks);
  }
  return path;
}

/// Read-only view of a NoisePath starting at an offset: step k of the view is
/// step k + offset of the parent. The parent must outlive the view.
class NoiseView {
 public:
  explicit NoiseView(const NoisePath& path) : path_(&path), offset_(0) {}

  std::size_t offset() const noexcept { return offset_; }
  std::size_t n_steps() const noexcept { return path_->n_steps() - offset_; }
  double dt() const noexcept { return path_->dt(); }
  const NoisePath& parent() const noexcept { return *path_; }

  auto gaussian(std::size_t k) const { return path_->gaussian(k + offset_); }
  MarkSpan marks(std::size_t k) const { return path_->marks(k + offset_); }

  NoiseView shift(std::size_t tau_steps) const {
    require(tau_steps <= n_steps(), "shift_view: shift beyond the end of the path");
    NoiseView v(*this);
    v.offset_ += tau_steps;
    return v;
  }

  /// Jump events re-indexed to the view's clock.
  std::vector<JumpEvent> jump_events() const {
    std::vector<JumpEvent> events;
    for (std::size_t k = 0; k < n_steps(); ++k)
      for (const Vector& m : marks(k)) events.push_back({k, m});
    return events;
  }

 private:
  const NoisePath* path_;
  std::size_t offset_;
};

inline NoiseView shift_view(const NoisePath& path, std::size_t tau_steps) {
  return NoiseView(path).shift(tau_steps);
}
inline NoiseView shift_view(const NoiseView& view, std::size_t tau_steps) { return view.shift(tau_steps); }

}  // namespace spdelab
