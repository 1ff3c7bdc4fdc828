#pragma once

// Exponential-Euler simulation of
//
//   dX = (AX + F(X)) dt + sigma(X) dW + int gamma(X-, nu) Ntilde(dt, dnu)
//
// in its mild form. One step maps x to
//
//   S(dt) [x + dt F(x) - dt comp(x) + sigma(x) dW + sum_jumps gamma(x, nu)].

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gdc_cert.hpp"
#include "hilbert.hpp"
#include "noise.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "statistics.hpp"

namespace spdelab {

/// Euclidean coordinate norm at which a trajectory is declared divergent.
inline constexpr double kBlowupNorm = 1e12;

struct ScenarioFlags {
  bool vanishing_on_H1 = false;
  bool deterministic_P1 = false;
};

using DriftFn = std::function<Vector(const Vector&)>;
/// sigma(x) as a dim x modes matrix acting on the Q-eigenbasis coordinates of dW.
using DiffusionFn = std::function<Matrix(const Vector&)>;

/// F(x) = linear x + offset, constant sigma and state-independent additive jumps.
struct AffineParts {
  Matrix linear;
  Vector offset;
  Matrix diffusion;
};

class Scenario {
 public:
  Scenario(OperatorModel op, Projection p1) : op_(std::move(op)), p1_(std::move(p1)) {
    require(p1_.dim() == op_.dim(), "Scenario: projection dimension mismatch");
    jumps_ = JumpSpec::none();
    set_linear_drift(Matrix::Zero(dim_i(), dim_i()), Vector::Zero(dim_i()));
    set_noise(QWienerSpec::none());
  }

  std::string name;
  LipschitzConstants lipschitz;
  std::optional<GdcCertificate> certificate;
  ScenarioFlags flags;

  const OperatorModel& op() const noexcept { return op_; }
  const HilbertSpace& space() const noexcept { return op_.space(); }
  const Projection& p1() const noexcept { return p1_; }
  std::size_t dim() const noexcept { return op_.dim(); }
  const QWienerSpec& noise() const noexcept { return noise_; }
  const JumpSpec& jumps() const noexcept { return jumps_; }

  void set_drift(DriftFn f) {
    drift_ = std::move(f);
    linear_drift_.reset();
  }
  void set_linear_drift(Matrix linear, Vector offset) {
    require(linear.rows() == dim_i() && linear.cols() == dim_i(), "Scenario: drift matrix dimension mismatch");
    require(offset.size() == dim_i(), "Scenario: drift offset dimension mismatch");
    linear_drift_ = std::make_shared<const std::pair<Matrix, Vector>>(std::move(linear), std::move(offset));
    drift_ = [parts = linear_drift_](const Vector& x) { return Vector(parts->first * x + parts->second); };
  }
  void set_noise(QWienerSpec noise) {
    noise.validate();
    noise_ = std::move(noise);
    set_constant_diffusion(Matrix::Zero(dim_i(), static_cast<Eigen::Index>(noise_.modes())));
  }
  /// Must follow set_noise (the column count is the number of modes).
  void set_diffusion(DiffusionFn s) {
    diffusion_ = std::move(s);
    constant_diffusion_.reset();
  }
  void set_constant_diffusion(Matrix s) {
    require(s.rows() == dim_i() && s.cols() == static_cast<Eigen::Index>(noise_.modes()),
            "Scenario: diffusion must be dim x modes");
    constant_diffusion_ = std::make_shared<const Matrix>(std::move(s));
    diffusion_ = [m = constant_diffusion_](const Vector&) { return *m; };
  }
  void set_jumps(JumpSpec js) {
    if (js.active()) require(js.marks.dim() > 0, "Scenario: jump marks have no dimension");
    jumps_ = std::move(js);
  }

  Vector drift(const Vector& x) const { return drift_(x); }
  Matrix diffusion(const Vector& x) const { return diffusion_(x); }

  /// Present when F is affine, sigma constant and the jumps additive.
  std::optional<AffineParts> affine() const {
    if (!linear_drift_ || !constant_diffusion_) return std::nullopt;
    if (jumps_.active() && !jumps_.additive_compensator) return std::nullopt;
    return AffineParts{linear_drift_->first, linear_drift_->second, *constant_diffusion_};
  }

  /// ||sigma(x) - sigma(y)||^2 in L_2^0: sum_j lambda_j ||(sigma(x) - sigma(y)) e_j||^2.
  double diffusion_hs_difference(const Vector& x, const Vector& y) const {
    const Matrix d = diffusion(x) - diffusion(y);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < d.cols(); ++j) acc += noise_.eigenvalues[j] * space().norm_squared(d.col(j));
    return acc;
  }

  /// Certificate from the dissipativity bisection on the generator matrix.
  const GdcCertificate& certify(double lambda1, double tol = 1e-9) {
    require(op_.mode() == OperatorModel::SemigroupMode::matrix_exponential,
            "Scenario::certify: needs a matrix generator");
    certificate = make_certificate(space(), op_.generator(), p1_, lambda1, lipschitz, tol);
    return *certificate;
  }

 private:
  Eigen::Index dim_i() const { return static_cast<Eigen::Index>(op_.dim()); }

  OperatorModel op_;
  Projection p1_;
  QWienerSpec noise_;
  JumpSpec jumps_;
  DriftFn drift_;
  DiffusionFn diffusion_;
  std::shared_ptr<const std::pair<Matrix, Vector>> linear_drift_;
  std::shared_ptr<const Matrix> constant_diffusion_;
};

struct LipschitzAudit {
  double F = 0.0;
  double sigma = 0.0;
  double gamma = 0.0;
};

/// Largest measured squared Lipschitz ratios over random pairs; throws
/// HypothesisViolated when one exceeds its declaration by more than 1%.
inline LipschitzAudit audit_lipschitz(const Scenario& sc, std::size_t pairs = 200,
                                      std::uint64_t seed = 0x4c495053ULL, double scale = 1.0) {
  const HilbertSpace& space = sc.space();
  const auto xs = probe_vectors(sc.dim(), pairs, seed);
  const auto ys = probe_vectors(sc.dim(), pairs, seed + 1);
  LipschitzAudit worst;
  for (std::size_t k = 0; k < pairs; ++k) {
    const Vector x = scale * xs[k], y = scale * ys[k];
    const double d2 = space.norm_squared(x - y);
    if (d2 == 0.0) continue;
    worst.F = std::max(worst.F, space.norm_squared(sc.drift(x) - sc.drift(y)) / d2);
    worst.sigma = std::max(worst.sigma, sc.diffusion_hs_difference(x, y) / d2);
    if (sc.jumps().active()) worst.gamma = std::max(worst.gamma, sc.jumps().l2_difference(x, y) / d2);
  }
  const auto check = [](double measured, double declared, const char* what) {
    if (measured > declared * 1.01 + 1e-14)
      throw HypothesisViolated(std::string("Lipschitz declaration violated for ") + what + ": measured " +
                               std::to_string(measured) + " > declared " + std::to_string(declared));
  };
  check(worst.F, sc.lipschitz.L_F, "F");
  check(worst.sigma, sc.lipschitz.L_sigma, "sigma");
  check(worst.gamma, sc.lipschitz.L_gamma, "gamma");
  return worst;
}

/// Precomputed one-step map for a fixed dt. Immutable after construction and
/// shared by all trajectories; scratch storage lives in a Workspace.
class Stepper {
 public:
  struct Workspace {
    Vector a, b;
  };

  Stepper(const Scenario& sc, double dt) : sc_(&sc), dt_(dt) {
    require(dt > 0.0, "step: dt must be positive");
    matrix_mode_ = sc.op().mode() == OperatorModel::SemigroupMode::matrix_exponential;
    if (matrix_mode_) s_ = sc.op().semigroup_matrix(dt);
    jumps_active_ = sc.jumps().active();
    if (const auto parts = sc.affine(); parts && matrix_mode_) {
      affine_ = true;
      const auto n = static_cast<Eigen::Index>(sc.dim());
      phi_ = s_ * (Matrix::Identity(n, n) + dt * parts->linear);
      Vector c = parts->offset;
      if (jumps_active_) c -= *sc.jumps().additive_compensator;
      shift_ = dt * (s_ * c);
      psi_ = s_ * parts->diffusion;
      has_noise_ = psi_.size() > 0 && psi_.cwiseAbs().maxCoeff() > 0.0;
    }
  }

  double dt() const noexcept { return dt_; }
  bool affine() const noexcept { return affine_; }
  const Scenario& scenario() const noexcept { return *sc_; }

  /// x <- one exponential-Euler step of x.
  template <class G>
  void advance(Vector& x, const G& gaussian, MarkSpan marks, Workspace& ws) const {
    if (affine_) {
      const Eigen::Index n = x.size();
      ws.a.resize(n);
      // plain loops: the affine systems are small and Eigen's dispatch dominates
      for (Eigen::Index i = 0; i < n; ++i) {
        double acc = shift_[i];
        for (Eigen::Index j = 0; j < n; ++j) acc += phi_(i, j) * x[j];
        if (has_noise_)
          for (Eigen::Index j = 0; j < psi_.cols(); ++j) acc += psi_(i, j) * gaussian[j];
        ws.a[i] = acc;
      }
      if (jumps_active_)
        for (const Vector& m : marks) ws.a.noalias() += s_ * m;
      x.swap(ws.a);
      return;
    }
    ws.b = x + dt_ * sc_->drift(x);
    if (sc_->noise().modes() > 0) ws.b.noalias() += sc_->diffusion(x) * gaussian;
    if (jumps_active_) {
      const JumpSpec& js = sc_->jumps();
      ws.b -= dt_ * js.compensator(x);
      for (const Vector& m : marks) ws.b += js.gamma(x, m);
    }
    if (matrix_mode_) {
      ws.a.noalias() = s_ * ws.b;
      x.swap(ws.a);
    } else {
      sc_->op().shift_into(dt_, ws.b, x);
    }
  }

  static bool finite_and_bounded(const Vector& x) { return x.squaredNorm() <= kBlowupNorm * kBlowupNorm; }

 private:
  const Scenario* sc_;
  double dt_;
  bool matrix_mode_ = true;
  bool affine_ = false;
  bool has_noise_ = false;
  bool jumps_active_ = false;
  Matrix s_, phi_, psi_;
  Vector shift_;
};

/// One exponential-Euler step. Throws NumericalBlowup carrying `step_index`.
inline Vector step(const Scenario& sc, const Vector& x, double dt, const Vector& gaussian, MarkSpan marks,
                   std::size_t step_index = 0) {
  sc.space().check_dim(x);
  require(static_cast<std::size_t>(gaussian.size()) == sc.noise().modes(), "step: noise increment size mismatch");
  const Stepper stepper(sc, dt);
  Stepper::Workspace ws;
  Vector out = x;
  stepper.advance(out, gaussian, marks, ws);
  if (!Stepper::finite_and_bounded(out)) throw NumericalBlowup(step_index, 0, "state diverged");
  return out;
}

/// Runs x along a recorded noise view; returns the n_steps + 1 states.
inline std::vector<Vector> run_path(const Stepper& stepper, const Vector& x, const NoiseView& noise,
                                    std::size_t n_steps, std::size_t trajectory = 0) {
  require(n_steps <= noise.n_steps(), "run_path: noise view too short");
  std::vector<Vector> states;
  states.reserve(n_steps + 1);
  states.push_back(x);
  Stepper::Workspace ws;
  Vector cur = x;
  for (std::size_t k = 0; k < n_steps; ++k) {
    stepper.advance(cur, noise.gaussian(k), noise.marks(k), ws);
    if (!Stepper::finite_and_bounded(cur)) throw NumericalBlowup(k + 1, trajectory, "state diverged");
    states.push_back(cur);
  }
  return states;
}

/// A scalar statistic of the replica states at one time.
struct Observable {
  std::string name;
  std::function<double(std::span<const Vector>)> eval;
};

namespace obs {

inline Observable coordinate(std::size_t replica, std::size_t index, std::string name = {}) {
  if (name.empty()) name = "x" + std::to_string(index);
  return {std::move(name), [=](std::span<const Vector> s) { return s[replica][static_cast<Eigen::Index>(index)]; }};
}

inline Observable norm_squared(const HilbertSpace& space, std::size_t replica, std::string name = "norm_sq") {
  return {std::move(name), [=](std::span<const Vector> s) { return space.norm_squared(s[replica]); }};
}

inline Observable distance_squared(const HilbertSpace& space, std::size_t r1, std::size_t r2,
                                   std::string name = "dist_sq") {
  return {std::move(name), [=](std::span<const Vector> s) { return space.norm_squared(s[r1] - s[r2]); }};
}

inline Observable projected_distance_squared(const HilbertSpace& space, const Projection& p, std::size_t r1,
                                             std::size_t r2, std::string name = "p1_dist_sq") {
  return {std::move(name),
          [=](std::span<const Vector> s) { return space.norm_squared(p.apply(s[r1] - s[r2])); }};
}

inline Observable deviation_squared(const HilbertSpace& space, std::size_t replica, Vector target,
                                    std::string name = "dev_sq") {
  return {std::move(name), [=, t = std::move(target)](std::span<const Vector> s) {
            return space.norm_squared(s[replica] - t);
          }};
}

inline Observable pairing(const HilbertSpace& space, std::size_t replica, Vector direction,
                          std::string name = "pairing") {
  return {std::move(name),
          [=, d = std::move(direction)](std::span<const Vector> s) { return space.inner(s[replica], d); }};
}

}  // namespace obs

/// A trajectory copy driven by the common noise: it sits at `initial` until
/// global step `start_step`, then consumes the increments of steps start_step, ...
struct Replica {
  Vector initial;
  std::size_t start_step = 0;
};

struct EnsembleSpec {
  std::vector<Replica> replicas;
  double dt = 1e-3;
  std::size_t n_steps = 0;
  std::size_t n_traj = 1;
  std::uint64_t master_seed = 0;
  std::vector<std::size_t> snapshot_steps;
  std::vector<Observable> observables;
  bool record_states = false;
  unsigned threads = 1;
};

class Ensemble {
 public:
  std::vector<std::size_t> snapshot_steps;
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::uint64_t> seeds;
  std::size_t n_traj = 0;
  std::size_t n_replicas = 0;
  std::vector<double> values;  // (s * n_obs + o) * n_traj + i
  std::vector<Vector> states;  // (s * n_replicas + r) * n_traj + i, when recorded

  std::size_t n_snapshots() const noexcept { return snapshot_steps.size(); }
  std::size_t n_observables() const noexcept { return names.size(); }

  std::size_t observable_index(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    require(it != names.end(), "Ensemble: unknown observable " + name);
    return static_cast<std::size_t>(it - names.begin());
  }

  std::span<const double> samples(std::size_t s, std::size_t o) const {
    return std::span<const double>(values.data() + (s * n_observables() + o) * n_traj, n_traj);
  }
  std::span<const double> samples(std::size_t s, const std::string& name) const {
    return samples(s, observable_index(name));
  }
  stats::Moments summary(std::size_t s, std::size_t o) const { return stats::moments(samples(s, o)); }

  std::span<const Vector> states_at(std::size_t s, std::size_t replica = 0) const {
    require(!states.empty(), "Ensemble: states were not recorded");
    return std::span<const Vector>(states.data() + (s * n_replicas + replica) * n_traj, n_traj);
  }
};

inline Ensemble simulate_ensemble(const Scenario& sc, const EnsembleSpec& spec) {
  require(!spec.replicas.empty(), "simulate_ensemble: no replicas");
  require(spec.n_traj > 0, "simulate_ensemble: n_traj must be positive");
  for (const Replica& r : spec.replicas) {
    sc.space().check_dim(r.initial);
    require(r.start_step <= spec.n_steps, "simulate_ensemble: replica starts after the horizon");
  }
  std::vector<std::size_t> snaps = spec.snapshot_steps;
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  require(snaps.empty() || snaps.back() <= spec.n_steps, "simulate_ensemble: snapshot beyond the horizon");

  Ensemble ens;
  ens.snapshot_steps = snaps;
  for (std::size_t s : snaps) ens.times.push_back(static_cast<double>(s) * spec.dt);
  for (const Observable& o : spec.observables) ens.names.push_back(o.name);
  ens.n_traj = spec.n_traj;
  ens.n_replicas = spec.replicas.size();
  ens.seeds.resize(spec.n_traj);
  for (std::size_t i = 0; i < spec.n_traj; ++i) ens.seeds[i] = trajectory_seed(spec.master_seed, i);
  const std::size_t n_obs = spec.observables.size();
  ens.values.assign(snaps.size() * n_obs * spec.n_traj, 0.0);
  if (spec.record_states) ens.states.resize(snaps.size() * ens.n_replicas * spec.n_traj);

  const Stepper stepper(sc, spec.dt);
  const std::size_t n_rep = spec.replicas.size();

  parallel_for(spec.n_traj, spec.threads, [&](std::size_t i) {
    NoiseGenerator gen(sc.noise(), sc.jumps(), spec.dt, ens.seeds[i]);
    std::vector<Vector> x(n_rep);
    for (std::size_t r = 0; r < n_rep; ++r) x[r] = spec.replicas[r].initial;
    Stepper::Workspace ws;
    Vector g;
    std::vector<Vector> marks;
    std::size_t next = 0;
    auto record = [&](std::size_t s) {
      for (std::size_t o = 0; o < n_obs; ++o)
        ens.values[(s * n_obs + o) * spec.n_traj + i] = spec.observables[o].eval(x);
      if (spec.record_states)
        for (std::size_t r = 0; r < n_rep; ++r) ens.states[(s * n_rep + r) * spec.n_traj + i] = x[r];
    };
    while (next < snaps.size() && snaps[next] == 0) record(next++);
    for (std::size_t k = 0; k < spec.n_steps; ++k) {
      gen.next(g, marks);
      for (std::size_t r = 0; r < n_rep; ++r) {
        if (k < spec.replicas[r].start_step) continue;
        stepper.advance(x[r], g, marks, ws);
        if (!Stepper::finite_and_bounded(x[r])) throw NumericalBlowup(k + 1, i, "state diverged");
      }
      while (next < snaps.size() && snaps[next] == k + 1) record(next++);
    }
  });
  return ens;
}

/// Steps of the dt grid matching the given times; throws if a time is off-grid.
inline std::vector<std::size_t> snapshot_steps_for(std::span<const double> times, double dt) {
  std::vector<std::size_t> steps;
  for (double t : times) {
    require(t >= 0.0, "snapshot times must be nonnegative");
    const double k = std::round(t / dt);
    require(std::abs(k * dt - t) <= 1e-9 * std::max(1.0, t), "snapshot time is not on the step grid");
    steps.push_back(static_cast<std::size_t>(k));
  }
  return steps;
}

/// Plain ensemble from one initial state; records full states and coordinates.
inline Ensemble simulate_ensemble(const Scenario& sc, const Vector& initial, double dt, std::size_t n_steps,
                                  std::size_t n_traj, std::uint64_t master_seed,
                                  std::span<const double> snapshot_times, unsigned threads = 1) {
  EnsembleSpec spec;
  spec.replicas = {{initial, 0}};
  spec.dt = dt;
  spec.n_steps = n_steps;
  spec.n_traj = n_traj;
  spec.master_seed = master_seed;
  spec.snapshot_steps = snapshot_steps_for(snapshot_times, dt);
  spec.record_states = true;
  spec.threads = threads;
  return simulate_ensemble(sc, spec);
}

struct CoupledPair {
  std::vector<Vector> x_path;  // X on [0, T + tau]
  std::vector<Vector> y_path;  // Y on [0, T], driven by the noise shifted by tau
  std::size_t tau_steps = 0;
};

/// The shifted-noise coupling of (X_t, X_{t+tau}) on one noise path.
inline CoupledPair coupled_pair(const Scenario& sc, const Vector& x, double tau, double dt, std::size_t n_steps,
                                std::uint64_t seed) {
  require(tau >= 0.0, "coupled_pair: tau must be nonnegative");
  const double k = std::round(tau / dt);
  require(std::abs(k * dt - tau) <= 1e-9 * std::max(1.0, tau), "coupled_pair: tau must be a multiple of dt");
  const auto tau_steps = static_cast<std::size_t>(k);
  const NoisePath path = sample_path(sc.noise(), sc.jumps(), dt, n_steps + tau_steps, seed);
  const Stepper stepper(sc, dt);
  CoupledPair pair;
  pair.tau_steps = tau_steps;
  pair.x_path = run_path(stepper, x, NoiseView(path), n_steps + tau_steps);
  pair.y_path = run_path(stepper, x, shift_view(path, tau_steps), n_steps);
  return pair;
}

struct StabilityReport {
  std::vector<double> times;
  std::vector<double> lhs_mean, lhs_std_err;  // E||X^x - X^y||^2
  std::vector<double> rhs_mean;               // e^{-eps t}||x-y||^2 + 2(alpha+beta) int ...
  std::vector<double> excess_mean, excess_std_err;  // per-trajectory lhs - rhs
  std::size_t violations = 0;
  bool holds() const noexcept { return violations == 0; }
};

/// Common-noise check of the stability estimate at every `stride`-th step.
inline StabilityReport stability_check(const Scenario& sc, const Vector& x, const Vector& y, double dt,
                                       std::size_t n_steps, std::size_t n_traj, std::uint64_t seed,
                                       std::size_t stride = 10, unsigned threads = 1) {
  require(sc.certificate.has_value(), "stability_check: scenario has no certificate");
  const GdcCertificate& cert = *sc.certificate;
  if (!cert.contraction())
    throw HypothesisViolated("stability estimate needs epsilon > 0, got " + std::to_string(cert.epsilon));
  require(stride > 0, "stability_check: stride must be positive");
  EnsembleSpec spec;
  spec.replicas = {{x, 0}, {y, 0}};
  spec.dt = dt;
  spec.n_steps = n_steps;
  spec.n_traj = n_traj;
  spec.master_seed = seed;
  for (std::size_t k = 0; k <= n_steps; k += stride) spec.snapshot_steps.push_back(k);
  if (spec.snapshot_steps.back() != n_steps) spec.snapshot_steps.push_back(n_steps);
  spec.observables = {obs::distance_squared(sc.space(), 0, 1),
                      obs::projected_distance_squared(sc.space(), sc.p1(), 0, 1)};
  spec.threads = threads;
  const Ensemble ens = simulate_ensemble(sc, spec);

  const double eps = cert.epsilon;
  const double weight = 2.0 * (cert.alpha + cert.beta_const);
  const double d0 = sc.space().norm_squared(x - y);
  const std::size_t ns = ens.n_snapshots();
  StabilityReport rep;
  rep.times = ens.times;
  // running integral int_0^t e^{-eps(t-u)} ||P1 Delta_u||^2 du per trajectory,
  // trapezoid over the snapshot grid
  std::vector<double> excess(n_traj), integral(n_traj, 0.0);
  for (std::size_t s = 0; s < ns; ++s) {
    const double t = ens.times[s];
    const auto lhs = ens.samples(s, 0);
    const auto p1 = ens.samples(s, 1);
    const stats::Moments lm = stats::moments(lhs);
    double rhs_sum = 0.0;
    for (std::size_t i = 0; i < n_traj; ++i) {
      if (s > 0) {
        const double h = t - ens.times[s - 1];
        const double decay = std::exp(-eps * h);
        integral[i] = decay * integral[i] + 0.5 * h * (p1[i] + decay * ens.samples(s - 1, 1)[i]);
      }
      const double rhs = std::exp(-eps * t) * d0 + weight * integral[i];
      excess[i] = lhs[i] - rhs;
      rhs_sum += rhs;
    }
    const stats::Moments em = stats::moments(excess);
    rep.lhs_mean.push_back(lm.mean);
    rep.lhs_std_err.push_back(lm.std_err);
    rep.rhs_mean.push_back(rhs_sum / static_cast<double>(n_traj));
    rep.excess_mean.push_back(em.mean);
    rep.excess_std_err.push_back(em.std_err);
    if (em.mean > 3.0 * em.std_err + 1e-12 * (1.0 + d0)) ++rep.violations;
  }
  return rep;
}

struct LyapunovProbe {
  double generator = 0.0;  // L(||.||^2)(x, y)
  double bound = 0.0;      // -eps ||x-y||^2 + 2(alpha+beta) ||P1(x-y)||^2
  double excess() const noexcept { return generator - bound; }
};

inline LyapunovProbe lyapunov_probe(const Scenario& sc, const Vector& x, const Vector& y) {
  require(sc.certificate.has_value(), "lyapunov_probe: scenario has no certificate");
  const GdcCertificate& cert = *sc.certificate;
  const HilbertSpace& space = sc.space();
  const Vector d = x - y;
  const Vector flow = sc.op().apply_generator(d) + sc.drift(x) - sc.drift(y);
  LyapunovProbe p;
  p.generator = 2.0 * space.inner(flow, d) + sc.diffusion_hs_difference(x, y);
  if (sc.jumps().active()) p.generator += sc.jumps().l2_difference(x, y);
  p.bound = -cert.epsilon * space.norm_squared(d) +
            2.0 * (cert.alpha + cert.beta_const) * space.norm_squared(sc.p1().apply(d));
  return p;
}

}  // namespace spdelab
