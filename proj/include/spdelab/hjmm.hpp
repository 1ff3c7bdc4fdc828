#pragma once

// Forward-curve dynamics in H_beta (Musiela parametrization): the shift
// semigroup, the no-arbitrage drift
//
//   F(h) = sum_j sigma^j(h) Sigma^j(h) - int gamma(h,nu) (e^{Gamma(h,nu)} - 1) mu(dnu),
//
// the printed bound on its Lipschitz constant and the decay experiment towards
// the long rate.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "gdc_cert.hpp"
#include "hilbert.hpp"
#include "noise.hpp"
#include "sde_engine.hpp"
#include "statistics.hpp"
#include "wasserstein.hpp"

namespace spdelab {

/// Default grid for a given beta: x_max = 20/beta * max(1, beta), n = 2048.
inline GridSpec default_hjmm_grid(double beta) {
  require(beta > 0.0, "default_hjmm_grid: beta must be positive");
  return GridSpec{20.0 / beta * std::max(1.0, beta), 2048, beta};
}

/// A curve on an hbeta grid together with its long rate h(x_max).
class ForwardCurve {
 public:
  ForwardCurve(const HilbertSpace& space, Vector values) : values_(std::move(values)) {
    require(space.is_grid(), "ForwardCurve: needs an hbeta grid");
    space.check_dim(values_);
    require(values_.allFinite(), "ForwardCurve: non-finite values");
  }

  const Vector& values() const noexcept { return values_; }
  double long_rate() const { return values_[values_.size() - 1]; }
  /// P0 h = h - h(x_max).
  Vector p0() const { return values_.array() - long_rate(); }
  /// P1 h as a constant curve.
  Vector p1() const { return Vector::Constant(values_.size(), long_rate()); }

 private:
  Vector values_;
};

/// Cumulative trapezoid int_0^{x_i} f on the grid.
inline Vector cumulative_trapezoid(const Vector& grid, const Vector& f) {
  Vector out(f.size());
  out[0] = 0.0;
  for (Eigen::Index i = 1; i < f.size(); ++i) out[i] = out[i - 1] + 0.5 * (grid[i] - grid[i - 1]) * (f[i] + f[i - 1]);
  return out;
}

/// sigma^1(h)(x) = int_x^inf min(e^{-beta y}, |h'(y)|) dy with h' the forward difference.
/// Each cell is integrated exactly for the piecewise-linear interpolant. With
/// `include_tail` the e^{-beta x_max}/beta tail beyond the grid is added when the
/// exponential branch is active on the last cell; without it the result has
/// value 0 at x_max (the projection onto zero long rate).
inline Vector example_volatility(const HilbertSpace& space, const Vector& h, double beta, bool include_tail = true) {
  require(space.is_grid(), "example_volatility: needs an hbeta grid");
  space.check_dim(h);
  require(beta > 0.0, "example_volatility: beta must be positive");
  const Vector& x = space.grid();
  const Eigen::Index n = h.size();
  Vector out(n);
  out[n - 1] = 0.0;
  for (Eigen::Index k = n - 2; k >= 0; --k) {
    const double dx = x[k + 1] - x[k];
    const double d = std::abs(h[k + 1] - h[k]) / dx;
    const double e0 = std::exp(-beta * x[k]), e1 = std::exp(-beta * x[k + 1]);
    double cell;
    if (d >= e0)
      cell = (e0 - e1) / beta;
    else if (d <= e1)
      cell = d * dx;
    else {
      const double cross = -std::log(d) / beta;  // e^{-beta cross} = d
      cell = d * (cross - x[k]) + (d - e1) / beta;
    }
    out[k] = out[k + 1] + cell;
  }
  if (include_tail) {
    const double dx = x[n - 1] - x[n - 2];
    const double d_last = std::abs(h[n - 1] - h[n - 2]) / dx;
    const double e_end = std::exp(-beta * x[n - 1]);
    if (d_last >= e_end) out.array() += e_end / beta;
  }
  return out;
}

/// Volatility specification: finitely many factors sigma^j (state dependent or
/// tabulated), optional jumps, and the declared constants.
struct HjmmVolatility {
  enum class Kind { zero, example, tabulated };

  Kind kind = Kind::zero;
  double beta = 1.0;
  double beta_prime = std::numeric_limits<double>::infinity();
  std::vector<Vector> table;  // tabulated factors on the grid
  double M = 0.0;
  double L_sigma = 0.0;
  double L_gamma = 0.0;
  bool vanishes_at_constants = true;

  // Jump part: gamma(h, mark) valued in zero-long-rate curves, mu = jump_rate * law(marks).
  double jump_rate = 0.0;
  MarkDistribution marks = MarkDistribution::point_mass(Vector());
  std::function<Vector(const Vector& h, const Vector& mark)> gamma;
  /// Quadrature nodes for the jump integral (weights sum to jump_rate).
  std::vector<Vector> jump_nodes;
  std::vector<double> jump_weights;

  static HjmmVolatility zero(double beta) {
    HjmmVolatility v;
    v.kind = Kind::zero;
    v.beta = beta;
    return v;
  }

  /// The single-factor example with M = 1/beta, L_sigma = 1, gamma = 0.
  static HjmmVolatility example(double beta, double beta_prime) {
    HjmmVolatility v;
    v.kind = Kind::example;
    v.beta = beta;
    v.beta_prime = beta_prime;
    v.M = 1.0 / beta;
    v.L_sigma = 1.0;
    return v;
  }

  /// State-independent factors given on the grid (L_sigma = 0, M = sum ||sigma^j||^2).
  static HjmmVolatility tabulated(const HilbertSpace& space, std::vector<Vector> factors, double beta_prime) {
    HjmmVolatility v;
    v.kind = Kind::tabulated;
    v.beta = space.beta();
    v.beta_prime = beta_prime;
    for (Vector& f : factors) {
      space.check_dim(f);
      // valued in zero long rate
      f.array() -= f[f.size() - 1];
      v.M += space.norm_squared(f);
    }
    v.table = std::move(factors);
    v.vanishes_at_constants = v.table.empty();
    return v;
  }

  bool has_jumps() const noexcept { return jump_rate > 0.0; }

  std::size_t factors() const noexcept {
    switch (kind) {
      case Kind::zero:
        return 0;
      case Kind::example:
        return 1;
      case Kind::tabulated:
        return table.size();
    }
    return 0;
  }

  /// Factor matrix (dim x factors), each column valued in zero long rate.
  Matrix sigma(const HilbertSpace& space, const Vector& h) const {
    const auto n = static_cast<Eigen::Index>(space.dim());
    Matrix s(n, static_cast<Eigen::Index>(factors()));
    if (kind == Kind::example) s.col(0) = example_volatility(space, h, beta, false);
    if (kind == Kind::tabulated)
      for (std::size_t j = 0; j < table.size(); ++j) s.col(static_cast<Eigen::Index>(j)) = table[j];
    return s;
  }
};

/// Sets the jump part with quadrature nodes: atoms for point/discrete marks,
/// `mc_nodes` fixed-seed samples otherwise.
inline void set_hjmm_jumps(HjmmVolatility& vol, double rate, MarkDistribution marks,
                           std::function<Vector(const Vector&, const Vector&)> gamma, double L_gamma,
                           std::size_t mc_nodes = 256, std::uint64_t seed = 0x484a4d4dULL) {
  require(rate >= 0.0, "set_hjmm_jumps: negative rate");
  vol.jump_rate = rate;
  vol.gamma = std::move(gamma);
  vol.L_gamma = L_gamma;
  vol.jump_nodes.clear();
  vol.jump_weights.clear();
  if (marks.kind == MarkDistribution::Kind::point_mass) {
    vol.jump_nodes = {marks.a};
    vol.jump_weights = {rate};
  } else if (marks.kind == MarkDistribution::Kind::discrete) {
    vol.jump_nodes = marks.atoms;
    for (double p : marks.probs) vol.jump_weights.push_back(rate * p);
  } else {
    Engine engine = make_engine(seed, StreamTag::quadrature);
    for (std::size_t k = 0; k < mc_nodes; ++k) {
      vol.jump_nodes.push_back(marks.sample(engine));
      vol.jump_weights.push_back(rate / static_cast<double>(mc_nodes));
    }
  }
  vol.marks = std::move(marks);
}

struct HjmmDrift {
  Vector curve;
  double long_rate_residual = 0.0;  // |F(h)(x_max)|
};

/// F_HJMM(h) with Sigma^j and Gamma by cumulative trapezoid on the grid.
inline HjmmDrift hjmm_drift(const HilbertSpace& space, const HjmmVolatility& vol, const Vector& h) {
  require(space.is_grid(), "hjmm_drift: needs an hbeta grid");
  space.check_dim(h);
  const Vector& x = space.grid();
  const Eigen::Index n = h.size();
  HjmmDrift out;
  out.curve = Vector::Zero(n);
  const Matrix s = vol.sigma(space, h);
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    const Vector sj = s.col(j);
    out.curve.array() += sj.array() * cumulative_trapezoid(x, sj).array();
  }
  if (vol.has_jumps()) {
    for (std::size_t k = 0; k < vol.jump_nodes.size(); ++k) {
      const Vector g = vol.gamma(h, vol.jump_nodes[k]);
      const Vector big_gamma = -cumulative_trapezoid(x, g);
      if (!(big_gamma.cwiseAbs().maxCoeff() < 700.0))
        throw HypothesisViolated("HJMM drift: exp(Gamma) overflows; the jump bound Phi >= |Gamma| is violated");
      out.curve.array() -= vol.jump_weights[k] * g.array() * big_gamma.array().exp().unaryExpr(
                                                                 [](double e) { return e - 1.0; });
    }
  }
  if (!out.curve.allFinite())
    throw HypothesisViolated("HJMM drift: non-finite value; the jump bound Phi >= |Gamma| is violated");
  out.long_rate_residual = std::abs(out.curve[n - 1]);
  return out;
}

/// The printed Lipschitz bound for the HJMM drift. beta_prime may be +infinity.
inline double lf_bound(double L_sigma, double L_gamma, double M, double beta, double beta_prime) {
  require(beta > 0.0, "lf_bound: beta must be positive");
  require(beta_prime > beta, "lf_bound: beta' must exceed beta");
  require(L_sigma >= 0.0 && L_gamma >= 0.0 && M >= 0.0, "lf_bound: constants must be nonnegative");
  const double pre = std::max(L_sigma, L_gamma) * std::sqrt(M) / beta;
  const double t1 = std::sqrt(6.0 * M * std::sqrt(2.0));
  const double t2 = std::sqrt(8.0 / (beta * beta * beta) + 16.0 / beta);
  const double q = 1.0 + 1.0 / std::sqrt(beta);
  const double t3 = std::isinf(beta_prime) ? 0.0 : std::sqrt((16.0 * q * q + 48.0) / (beta_prime - beta));
  return pre * (t1 + t2 + t3);
}

struct HjmmModel {
  HilbertSpace space;
  HjmmVolatility vol;
  double L_F = 0.0;
  GdcCertificate certificate;

  /// beta - 2 sqrt(L_F) - L_sigma - L_gamma.
  double margin() const { return certificate.epsilon; }
};

/// Builds the model and checks beta > 2 sqrt(L_F) + L_sigma + L_gamma.
inline HjmmModel make_hjmm_model(const HilbertSpace& space, const HjmmVolatility& vol) {
  require(space.is_grid(), "make_hjmm_model: needs an hbeta grid");
  require(std::abs(space.beta() - vol.beta) <= 1e-12 * vol.beta, "make_hjmm_model: grid beta differs from vol beta");
  const double beta = vol.beta;
  const double lf = lf_bound(vol.L_sigma, vol.L_gamma, vol.M, beta, vol.beta_prime);
  const double margin = beta - 2.0 * std::sqrt(lf) - vol.L_sigma - vol.L_gamma;
  if (!(margin > 0.0))
    throw HypothesisViolated("HJMM contraction condition fails: beta - 2 sqrt(L_F) - L_sigma - L_gamma = " +
                             std::to_string(margin));
  // <Ah,h> <= -beta/2 ||h||^2 + beta/2 ||P1 h||^2
  const GdcCertificate cert = make_certificate(beta / 2.0, 0.0, {lf, vol.L_sigma, vol.L_gamma});
  return HjmmModel{space, vol, lf, cert};
}

/// Engine scenario: shift semigroup, long-rate projection, F_HJMM drift.
inline Scenario hjmm_scenario(const HjmmModel& model) {
  const HilbertSpace& space = model.space;
  Scenario sc(OperatorModel::grid_shift(space), Projection::long_rate(space));
  sc.name = "hjmm";
  auto vol = std::make_shared<const HjmmVolatility>(model.vol);
  sc.set_drift([space, vol](const Vector& h) { return hjmm_drift(space, *vol, h).curve; });
  const auto m = static_cast<Eigen::Index>(model.vol.factors());
  sc.set_noise(QWienerSpec::diagonal(Vector::Ones(m)));
  if (model.vol.kind == HjmmVolatility::Kind::example)
    sc.set_diffusion([space, vol](const Vector& h) { return vol->sigma(space, h); });
  else if (m > 0)
    sc.set_constant_diffusion(model.vol.sigma(space, space.constant(0.0)));
  if (model.vol.has_jumps()) {
    JumpSpec js;
    js.total_rate = model.vol.jump_rate;
    js.marks = model.vol.marks;
    js.gamma = model.vol.gamma;
    js.compensator = [vol](const Vector& h) {
      Vector acc = Vector::Zero(h.size());
      for (std::size_t k = 0; k < vol->jump_nodes.size(); ++k) acc += vol->jump_weights[k] * vol->gamma(h, vol->jump_nodes[k]);
      return acc;
    };
    js.l2_difference = [space, vol](const Vector& a, const Vector& b) {
      double acc = 0.0;
      for (std::size_t k = 0; k < vol->jump_nodes.size(); ++k)
        acc += vol->jump_weights[k] * space.norm_squared(vol->gamma(a, vol->jump_nodes[k]) - vol->gamma(b, vol->jump_nodes[k]));
      return acc;
    };
    sc.set_jumps(std::move(js));
  }
  sc.lipschitz = model.certificate.lipschitz;
  sc.certificate = model.certificate;
  sc.flags.vanishing_on_H1 = model.vol.vanishes_at_constants;
  sc.flags.deterministic_P1 = true;
  return sc;
}

/// c + sum_k a_k e^{-k_k x}: a smooth random curve with decay exponents in
/// [beta/2 + 0.5, beta/2 + 2.5] so that its H_beta norm is finite.
inline Vector random_curve(const HilbertSpace& space, Engine& engine, double amplitude = 1.0) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> rate(0.5, 2.5);
  const Vector& x = space.grid();
  Vector h = Vector::Constant(x.size(), 0.05 * unif(engine));
  for (int k = 0; k < 3; ++k) {
    const double a = amplitude * unif(engine);
    const double r = space.beta() / 2.0 + rate(engine);
    h.array() += a * (-r * x.array()).exp();
  }
  return h;
}

struct HjmmAudit {
  double max_sigma_norm_sq = 0.0;        // sup ||sigma(h)||^2 over probes (vs M)
  double max_sigma_at_xmax = 0.0;        // sup |sigma_j(h)(x_max)|
  double max_drift_long_rate = 0.0;      // sup |F(h)(x_max)|
  double max_drift_lipschitz_ratio = 0.0;  // sup ||F(h1)-F(h2)|| / ||h1-h2||
};

inline HjmmAudit audit_hjmm(const HjmmModel& model, std::size_t probes = 200, std::uint64_t seed = 0x41554454ULL) {
  const HilbertSpace& space = model.space;
  Engine engine = make_engine(seed, StreamTag::probe);
  HjmmAudit a;
  for (std::size_t k = 0; k < probes; ++k) {
    const Vector h1 = random_curve(space, engine);
    const Vector h2 = random_curve(space, engine);
    const Matrix s = model.vol.sigma(space, h1);
    double hs = 0.0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      hs += space.norm_squared(s.col(j));
      a.max_sigma_at_xmax = std::max(a.max_sigma_at_xmax, std::abs(s(s.rows() - 1, j)));
    }
    a.max_sigma_norm_sq = std::max(a.max_sigma_norm_sq, hs);
    const HjmmDrift f1 = hjmm_drift(space, model.vol, h1);
    const HjmmDrift f2 = hjmm_drift(space, model.vol, h2);
    a.max_drift_long_rate = std::max(a.max_drift_long_rate, f1.long_rate_residual);
    const double d = space.norm(h1 - h2);
    if (d > 0.0) a.max_drift_lipschitz_ratio = std::max(a.max_drift_lipschitz_ratio, space.norm(f1.curve - f2.curve) / d);
  }
  return a;
}

struct HjmmReport {
  std::vector<double> times;
  std::vector<double> decay_mean, decay_std_err;  // E||X_t - h0(inf)||^2 (vanishing case)
  std::vector<double> w2_adjacent;                // W2 of short-rate laws between t_s and t_{s+1} (general case)
  stats::RateFit fit;
  double L_F = 0.0;
  double margin = 0.0;          // beta - 2 sqrt(L_F) - L_sigma - L_gamma
  double theoretical_rate = 0.0;  // margin (vanishing case) or margin / 2
  double long_rate_max_deviation = 0.0;
  bool vanishing = true;
  bool passed = false;
};

struct HjmmRunConfig {
  double horizon = 3.0;
  double dt = 0.0;           // 0: one grid cell
  std::size_t n_traj = 2000;
  std::size_t n_snapshots = 30;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

inline HjmmReport hjmm_ergodicity_experiment(const HjmmModel& model, const Vector& h0, const HjmmRunConfig& cfg) {
  const HilbertSpace& space = model.space;
  space.check_dim(h0);
  const Scenario sc = hjmm_scenario(model);
  const double dt = cfg.dt > 0.0 ? cfg.dt : space.grid()[1] - space.grid()[0];
  const auto n_steps = static_cast<std::size_t>(std::llround(cfg.horizon / dt));
  require(n_steps >= 1, "hjmm experiment: horizon shorter than one step");
  require(cfg.n_snapshots >= 4, "hjmm experiment: need at least 4 snapshots");
  const double long_rate = h0[h0.size() - 1];

  EnsembleSpec spec;
  spec.replicas = {{h0, 0}};
  spec.dt = dt;
  spec.n_steps = n_steps;
  spec.n_traj = cfg.n_traj;
  spec.master_seed = cfg.seed;
  spec.threads = cfg.threads;
  for (std::size_t s = 0; s <= cfg.n_snapshots; ++s)
    spec.snapshot_steps.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(s * n_steps) /
                                                                        static_cast<double>(cfg.n_snapshots))));
  spec.observables = {obs::deviation_squared(space, 0, space.constant(long_rate), "dev_sq"),
                      obs::coordinate(0, space.dim() - 1, "long_rate"), obs::coordinate(0, 0, "short_rate")};
  const Ensemble ens = simulate_ensemble(sc, spec);

  HjmmReport rep;
  rep.times = ens.times;
  rep.L_F = model.L_F;
  rep.margin = model.margin();
  rep.vanishing = model.vol.vanishes_at_constants;
  rep.theoretical_rate = rep.vanishing ? rep.margin : rep.margin / 2.0;
  for (std::size_t s = 0; s < ens.n_snapshots(); ++s) {
    const stats::Moments m = ens.summary(s, 0);
    rep.decay_mean.push_back(m.mean);
    rep.decay_std_err.push_back(m.std_err);
    for (double v : ens.samples(s, 1)) rep.long_rate_max_deviation = std::max(rep.long_rate_max_deviation, std::abs(v - long_rate));
  }
  if (rep.vanishing) {
    rep.fit = stats::exponential_rate_fit(rep.times, rep.decay_mean);
    rep.passed = rep.fit.rate >= 0.85 * rep.theoretical_rate && rep.long_rate_max_deviation == 0.0;
  } else {
    std::vector<double> t;
    for (std::size_t s = 1; s + 1 < ens.n_snapshots(); ++s) {
      const auto a = ens.samples(s, 2), b = ens.samples(s + 1, 2);
      rep.w2_adjacent.push_back(w2_1d(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end())));
      t.push_back(ens.times[s]);
    }
    rep.fit = stats::exponential_rate_fit(t, rep.w2_adjacent);
    rep.passed = rep.fit.rate >= 0.85 * rep.theoretical_rate && rep.long_rate_max_deviation == 0.0;
  }
  return rep;
}

}  // namespace spdelab
