#pragma once

// JSON scenario documents. Every object is checked against a fixed key set and
// every coefficient comes from a named builder that knows its own Lipschitz constant.

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "convergence_lab.hpp"
#include "errors.hpp"
#include "hilbert.hpp"
#include "hjmm.hpp"
#include "noise.hpp"
#include "ou_levy.hpp"
#include "sde_engine.hpp"

namespace spdelab {

using Json = nlohmann::json;

namespace schema {

inline void keys(const Json& j, const std::set<std::string>& allowed, const std::string& where,
                 const std::set<std::string>& required = {}) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw SchemaError(where + ": unknown key '" + k + "'");
  for (const std::string& k : required)
    if (!j.contains(k)) throw SchemaError(where + ": missing key '" + k + "'");
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(where + ": not finite");
  return v;
}

inline double number(const Json& obj, const std::string& key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

inline std::size_t count(const Json& obj, const std::string& key, std::size_t fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const Json& j = obj.at(key);
  if (!j.is_number_integer() || j.get<long long>() < 0) throw SchemaError(where + "." + key + ": expected a nonnegative integer");
  return j.get<std::size_t>();
}

inline std::string text(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_string()) throw SchemaError(where + "." + key + ": expected a string");
  return obj.at(key).get<std::string>();
}

inline bool flag(const Json& obj, const std::string& key, bool fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) throw SchemaError(where + "." + key + ": expected a boolean");
  return obj.at(key).get<bool>();
}

inline Vector vector(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw SchemaError(where + ": expected a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], where);
  return v;
}

inline Vector vector(const Json& j, std::size_t dim, const std::string& where) {
  Vector v = vector(j, where);
  if (static_cast<std::size_t>(v.size()) != dim)
    throw SchemaError(where + ": expected " + std::to_string(dim) + " entries, got " + std::to_string(v.size()));
  return v;
}

inline Matrix matrix(const Json& j, std::size_t rows, std::size_t cols, const std::string& where) {
  if (!j.is_array() || j.size() != rows) throw SchemaError(where + ": expected " + std::to_string(rows) + " rows");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw SchemaError(where + ": row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], where);
  }
  return m;
}

inline std::vector<double> numbers(const Json& j, const std::string& where) {
  const Vector v = vector(j, where);
  return {v.data(), v.data() + v.size()};
}

}  // namespace schema

inline Json load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario file " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

inline HilbertSpace parse_space(const Json& j) {
  const std::string kind = schema::text(j, "kind", "space");
  if (kind == "euclidean") {
    schema::keys(j, {"kind", "dim"}, "space", {"dim"});
    return HilbertSpace::euclidean(schema::count(j, "dim", 0, "space"));
  }
  if (kind == "weighted") {
    schema::keys(j, {"kind", "weights"}, "space", {"weights"});
    return HilbertSpace::weighted(schema::vector(j.at("weights"), "space.weights"));
  }
  if (kind == "hbeta_grid") {
    schema::keys(j, {"kind", "x_max", "n", "beta"}, "space", {"beta"});
    const double beta = schema::number(j.at("beta"), "space.beta");
    GridSpec g = default_hjmm_grid(beta);
    g.x_max = schema::number(j, "x_max", g.x_max, "space");
    g.n = schema::count(j, "n", g.n, "space");
    return HilbertSpace::hbeta_grid(g);
  }
  throw SchemaError("space.kind: unknown kind '" + kind + "'");
}

inline OperatorModel parse_operator(const Json& j, const HilbertSpace& space) {
  const std::string kind = schema::text(j, "kind", "operator");
  if (kind == "matrix") {
    schema::keys(j, {"kind", "generator"}, "operator", {"generator"});
    return OperatorModel::matrix(space, schema::matrix(j.at("generator"), space.dim(), space.dim(), "operator.generator"));
  }
  if (kind == "grid_shift") {
    schema::keys(j, {"kind"}, "operator");
    return OperatorModel::grid_shift(space);
  }
  throw SchemaError("operator.kind: unknown kind '" + kind + "'");
}

inline Projection parse_projection(const Json& j, const HilbertSpace& space) {
  const std::string kind = schema::text(j, "kind", "projection");
  if (kind == "coordinate") {
    schema::keys(j, {"kind", "mask"}, "projection", {"mask"});
    const Json& m = j.at("mask");
    if (!m.is_array() || m.size() != space.dim()) throw SchemaError("projection.mask: expected one boolean per coordinate");
    std::vector<bool> mask;
    for (const Json& b : m) {
      if (!b.is_boolean()) throw SchemaError("projection.mask: expected booleans");
      mask.push_back(b.get<bool>());
    }
    return Projection::coordinate(space, mask);
  }
  schema::keys(j, {"kind"}, "projection");
  if (kind == "identity") return Projection::identity(space);
  if (kind == "zero") return Projection::zero(space);
  if (kind == "long_rate") return Projection::long_rate(space);
  if (kind == "averaging") return Projection::averaging(space);
  throw SchemaError("projection.kind: unknown kind '" + kind + "'");
}

inline MarkDistribution parse_marks(const Json& j, const std::string& where) {
  const std::string kind = schema::text(j, "kind", where);
  if (kind == "point_mass") {
    schema::keys(j, {"kind", "value"}, where, {"value"});
    return MarkDistribution::point_mass(schema::vector(j.at("value"), where + ".value"));
  }
  if (kind == "gaussian") {
    schema::keys(j, {"kind", "mean", "std"}, where, {"mean", "std"});
    return MarkDistribution::gaussian(schema::vector(j.at("mean"), where + ".mean"), schema::vector(j.at("std"), where + ".std"));
  }
  if (kind == "uniform") {
    schema::keys(j, {"kind", "lo", "hi"}, where, {"lo", "hi"});
    return MarkDistribution::uniform(schema::vector(j.at("lo"), where + ".lo"), schema::vector(j.at("hi"), where + ".hi"));
  }
  if (kind == "discrete") {
    schema::keys(j, {"kind", "atoms", "weights"}, where, {"atoms", "weights"});
    const Json& a = j.at("atoms");
    if (!a.is_array() || a.empty()) throw SchemaError(where + ".atoms: expected a nonempty array");
    std::vector<Vector> atoms;
    for (const Json& v : a) atoms.push_back(schema::vector(v, where + ".atoms"));
    return MarkDistribution::discrete(std::move(atoms), schema::numbers(j.at("weights"), where + ".weights"));
  }
  throw SchemaError(where + ".kind: unknown kind '" + kind + "'");
}

/// Piecewise-linear interpolation with constant extension, applied coordinatewise.
struct TabulatedMap {
  std::vector<double> knots, values;

  double operator()(double x) const {
    if (x <= knots.front()) return values.front();
    if (x >= knots.back()) return values.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - knots.begin());
    const double w = (x - knots[k - 1]) / (knots[k] - knots[k - 1]);
    return (1.0 - w) * values[k - 1] + w * values[k];
  }
  double max_slope() const {
    double s = 0.0;
    for (std::size_t k = 1; k < knots.size(); ++k)
      s = std::max(s, std::abs(values[k] - values[k - 1]) / (knots[k] - knots[k - 1]));
    return s;
  }
};

inline TabulatedMap parse_table(const Json& j, const std::string& where) {
  TabulatedMap t{schema::numbers(j.at("knots"), where + ".knots"), schema::numbers(j.at("values"), where + ".values")};
  if (t.knots.size() != t.values.size() || t.knots.size() < 2)
    throw SchemaError(where + ": knots and values need the same length >= 2");
  for (std::size_t k = 1; k < t.knots.size(); ++k)
    if (!(t.knots[k] > t.knots[k - 1])) throw SchemaError(where + ".knots: must be strictly increasing");
  return t;
}

struct BuiltDrift {
  DriftFn fn;
  std::optional<std::pair<Matrix, Vector>> linear;
  double lipschitz = 0.0;  // squared-ratio constant L_F
};

/// Drift builders: zero, constant, linear, sine, tabulated, vanishing (wraps another builder).
inline BuiltDrift parse_drift(const Json& j, const HilbertSpace& space, const Projection& p1, const std::string& where) {
  const std::string b = schema::text(j, "builder", where);
  const std::size_t n = space.dim();
  const auto ni = static_cast<Eigen::Index>(n);
  if (b == "zero") {
    schema::keys(j, {"builder"}, where);
    return {nullptr, std::make_pair(Matrix(Matrix::Zero(ni, ni)), Vector(Vector::Zero(ni))), 0.0};
  }
  if (b == "constant") {
    schema::keys(j, {"builder", "value"}, where, {"value"});
    return {nullptr, std::make_pair(Matrix(Matrix::Zero(ni, ni)), schema::vector(j.at("value"), n, where + ".value")), 0.0};
  }
  if (b == "linear") {
    schema::keys(j, {"builder", "matrix", "offset"}, where, {"matrix"});
    Matrix m = schema::matrix(j.at("matrix"), n, n, where + ".matrix");
    Vector c = j.contains("offset") ? schema::vector(j.at("offset"), n, where + ".offset") : Vector(Vector::Zero(ni));
    // operator norm in the space geometry: lambda_max(G^{-1} M^T G M)
    const Matrix g = space.gram();
    const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(m.transpose() * g * m, g, Eigen::EigenvaluesOnly);
    const double l = std::max(0.0, es.eigenvalues().maxCoeff());
    return {nullptr, std::make_pair(std::move(m), std::move(c)), l};
  }
  if (b == "sine") {
    schema::keys(j, {"builder", "amplitude"}, where, {"amplitude"});
    const double a = schema::number(j.at("amplitude"), where + ".amplitude");
    if (space.kind() != HilbertSpace::Kind::euclidean) throw SchemaError(where + ": sine drift needs a euclidean space");
    return {[a](const Vector& x) { return Vector(a * x.array().sin()); }, std::nullopt, a * a};
  }
  if (b == "tabulated") {
    schema::keys(j, {"builder", "knots", "values"}, where, {"knots", "values"});
    if (space.kind() != HilbertSpace::Kind::euclidean) throw SchemaError(where + ": tabulated drift needs a euclidean space");
    const TabulatedMap t = parse_table(j, where);
    const double s = t.max_slope();
    return {[t](const Vector& x) { return Vector(x.unaryExpr([&t](double v) { return t(v); })); }, std::nullopt, s * s};
  }
  if (b == "vanishing") {
    schema::keys(j, {"builder", "inner"}, where, {"inner"});
    BuiltDrift inner = parse_drift(j.at("inner"), space, p1, where + ".inner");
    DriftFn g = inner.fn;
    if (!g) g = [m = inner.linear->first, c = inner.linear->second](const Vector& x) { return Vector(m * x + c); };
    const Vector g0 = g(Vector::Zero(ni));
    // F(x) = P0 (G(P0 x) - G(0)): vanishes on ran(P1) and P1 F = 0
    DriftFn f = [g, g0, p1](const Vector& x) { return p1.complement(g(p1.complement(x)) - g0); };
    return {f, std::nullopt, inner.lipschitz};
  }
  throw SchemaError(where + ".builder: unknown builder '" + b + "'");
}

struct BuiltDiffusion {
  DiffusionFn fn;
  std::optional<Matrix> constant;
  double lipschitz = 0.0;  // L_sigma
};

/// Diffusion builders: zero, constant, sine_diagonal, vanishing (wraps another builder).
inline BuiltDiffusion parse_diffusion(const Json& j, const HilbertSpace& space, const Projection& p1,
                                      const QWienerSpec& qw, const std::string& where) {
  const std::string b = schema::text(j, "builder", where);
  const auto n = static_cast<Eigen::Index>(space.dim());
  const auto m = static_cast<Eigen::Index>(qw.modes());
  if (b == "zero") {
    schema::keys(j, {"builder"}, where);
    return {nullptr, Matrix(Matrix::Zero(n, m)), 0.0};
  }
  if (b == "constant") {
    schema::keys(j, {"builder", "matrix"}, where, {"matrix"});
    return {nullptr, schema::matrix(j.at("matrix"), space.dim(), qw.modes(), where + ".matrix"), 0.0};
  }
  if (b == "sine_diagonal") {
    schema::keys(j, {"builder", "amplitude"}, where, {"amplitude"});
    if (space.kind() != HilbertSpace::Kind::euclidean) throw SchemaError(where + ": sine_diagonal needs a euclidean space");
    if (m != n) throw SchemaError(where + ": sine_diagonal needs one noise mode per coordinate");
    const double a = schema::number(j.at("amplitude"), where + ".amplitude");
    const double lmax = qw.eigenvalues.size() ? qw.eigenvalues.maxCoeff() : 0.0;
    return {[a](const Vector& x) { return Matrix(a * x.array().sin().matrix().asDiagonal()); }, std::nullopt, a * a * lmax};
  }
  if (b == "vanishing") {
    schema::keys(j, {"builder", "inner"}, where, {"inner"});
    BuiltDiffusion inner = parse_diffusion(j.at("inner"), space, p1, qw, where + ".inner");
    DiffusionFn g = inner.fn;
    if (!g) g = [c = *inner.constant](const Vector&) { return c; };
    const Matrix g0 = g(Vector::Zero(n));
    const Matrix p0 = Matrix::Identity(n, n) - p1.matrix();
    DiffusionFn f = [g, g0, p1, p0](const Vector& x) { return Matrix(p0 * (g(p1.complement(x)) - g0)); };
    return {f, std::nullopt, inner.lipschitz};
  }
  throw SchemaError(where + ".builder: unknown builder '" + b + "'");
}

struct BuiltJumps {
  JumpSpec spec = JumpSpec::none();
  double lipschitz = 0.0;  // L_gamma
};

/// Jump builders: none, additive (gamma = z, fully compensated), linear (gamma = z_0 B x).
inline BuiltJumps parse_jumps(const Json& j, const HilbertSpace& space, const std::string& where) {
  const std::string kind = schema::text(j, "kind", where);
  if (kind == "none") {
    schema::keys(j, {"kind"}, where);
    return {};
  }
  schema::keys(j, {"kind", "rate", "marks", "matrix"}, where, {"rate", "marks"});
  const double rate = schema::number(j.at("rate"), where + ".rate");
  if (rate < 0.0) throw SchemaError(where + ".rate: must be nonnegative");
  MarkDistribution marks = parse_marks(j.at("marks"), where + ".marks");
  if (kind == "additive") {
    if (j.contains("matrix")) throw SchemaError(where + ": unknown key 'matrix' for additive jumps");
    if (marks.dim() != space.dim()) throw SchemaError(where + ".marks: dimension must match the space");
    const Vector comp = rate * marks.mean();
    return {JumpSpec::additive(rate, std::move(marks), comp), 0.0};
  }
  if (kind == "linear") {
    if (!j.contains("matrix")) throw SchemaError(where + ": missing key 'matrix'");
    Matrix b = schema::matrix(j.at("matrix"), space.dim(), space.dim(), where + ".matrix");
    const double m2 = marks.second_moments()[0];
    const Matrix g = space.gram();
    const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(b.transpose() * g * b, g, Eigen::EigenvaluesOnly);
    const double l = rate * m2 * std::max(0.0, es.eigenvalues().maxCoeff());
    return {JumpSpec::linear(space, rate, std::move(marks), std::move(b)), l};
  }
  throw SchemaError(where + ".kind: unknown kind '" + kind + "'");
}

/// One lab experiment from the document.
struct ExperimentSpec {
  std::string kind;  // vanishing_coeff, limit_existence, affine_uniqueness, divergence, stability
  std::string label;
  LabConfig lab;
  Vector x, y;
  std::vector<double> taus;
  std::size_t assignment_n = 512;
  double same_limit_tolerance = 0.05;
  double shift_tolerance = 0.02;
};

struct SimulateSpec {
  double dt = 1e-3;
  std::size_t steps = 1000;
  std::size_t traj = 1000;
  std::uint64_t seed = 0;
  std::size_t snapshots = 10;
};

struct OuSpec {
  std::vector<Vector> probes;
  double horizon = 20.0;
  double dt = 1e-2;
  std::size_t traj = 10000;
  std::uint64_t seed = 0;
};

struct ScenarioDocument {
  Json raw;
  std::string name;
  std::string kind;  // sde, ou, kolmogorov
  std::optional<Scenario> scenario;
  std::optional<OuScenario> ou;
  Vector initial;
  std::vector<ExperimentSpec> experiments;
  SimulateSpec simulate;
  OuSpec ou_run;
};

namespace detail {

inline std::uint64_t parse_seed(const Json& obj, std::uint64_t fallback, const std::string& where) {
  if (!obj.contains("seed")) return fallback;
  if (!obj.at("seed").is_number_unsigned() && !(obj.at("seed").is_number_integer() && obj.at("seed").get<long long>() >= 0))
    throw SchemaError(where + ".seed: expected a nonnegative integer");
  return obj.at("seed").get<std::uint64_t>();
}

inline ExperimentSpec parse_experiment(const Json& j, std::size_t dim, const Vector& initial, std::size_t index) {
  const std::string where = "experiments[" + std::to_string(index) + "]";
  schema::keys(j,
               {"kind", "label", "dt", "horizon", "n_traj", "n_snapshots", "seed", "x", "y", "taus", "assignment_n",
                "same_limit_tolerance", "shift_tolerance"},
               where, {"kind"});
  ExperimentSpec e;
  e.kind = schema::text(j, "kind", where);
  static const std::set<std::string> kinds = {"vanishing_coeff", "limit_existence", "affine_uniqueness", "divergence",
                                              "stability"};
  if (!kinds.count(e.kind)) throw SchemaError(where + ".kind: unknown experiment '" + e.kind + "'");
  e.label = j.contains("label") ? schema::text(j, "label", where) : e.kind;
  e.lab.dt = schema::number(j, "dt", e.lab.dt, where);
  e.lab.horizon = schema::number(j, "horizon", e.lab.horizon, where);
  e.lab.n_traj = schema::count(j, "n_traj", e.lab.n_traj, where);
  e.lab.n_snapshots = schema::count(j, "n_snapshots", e.lab.n_snapshots, where);
  e.lab.seed = parse_seed(j, 0, where);
  if (!(e.lab.dt > 0.0) || !(e.lab.horizon > 0.0) || e.lab.n_traj == 0 || e.lab.n_snapshots < 2)
    throw SchemaError(where + ": dt, horizon, n_traj must be positive and n_snapshots >= 2");
  e.x = j.contains("x") ? schema::vector(j.at("x"), dim, where + ".x") : initial;
  if (j.contains("y")) e.y = schema::vector(j.at("y"), dim, where + ".y");
  if ((e.kind == "affine_uniqueness" || e.kind == "stability") && e.y.size() == 0)
    throw SchemaError(where + ": '" + e.kind + "' needs a second state 'y'");
  if (j.contains("taus")) e.taus = schema::numbers(j.at("taus"), where + ".taus");
  if (e.kind == "limit_existence" && e.taus.empty()) throw SchemaError(where + ": 'limit_existence' needs 'taus'");
  e.assignment_n = schema::count(j, "assignment_n", e.assignment_n, where);
  e.same_limit_tolerance = schema::number(j, "same_limit_tolerance", e.same_limit_tolerance, where);
  e.shift_tolerance = schema::number(j, "shift_tolerance", e.shift_tolerance, where);
  return e;
}

inline LevyTriplet parse_triplet(const Json& j, const HilbertSpace& space) {
  schema::keys(j, {"drift_b", "cov_Q", "jump_rate", "marks"}, "triplet", {"drift_b", "cov_Q"});
  LevyTriplet t = LevyTriplet::gaussian(schema::vector(j.at("drift_b"), space.dim(), "triplet.drift_b"),
                                        schema::matrix(j.at("cov_Q"), space.dim(), space.dim(), "triplet.cov_Q"));
  t.jump_rate = schema::number(j, "jump_rate", 0.0, "triplet");
  if (t.jump_rate > 0.0) {
    if (!j.contains("marks")) throw SchemaError("triplet: jump_rate > 0 needs 'marks'");
    t.marks = parse_marks(j.at("marks"), "triplet.marks");
  }
  return t;
}

}  // namespace detail

/// Parses and validates a scenario document; all schema errors surface before any simulation.
inline ScenarioDocument parse_scenario(const Json& doc) {
  schema::keys(doc,
               {"name", "kind", "space", "operator", "projection", "drift", "noise", "diffusion", "jumps", "lipschitz",
                "certificate", "flags", "initial", "experiments", "simulate", "triplet", "generator", "eta", "ou_run"},
               "scenario", {"name"});
  ScenarioDocument out;
  out.raw = doc;
  out.name = schema::text(doc, "name", "scenario");
  out.kind = doc.contains("kind") ? schema::text(doc, "kind", "scenario") : "sde";

  std::size_t dim = 0;
  if (out.kind == "kolmogorov") {
    for (const char* k : {"space", "operator", "projection", "drift", "diffusion", "noise", "jumps"})
      if (doc.contains(k)) throw SchemaError(std::string("scenario: key '") + k + "' is not used by kolmogorov scenarios");
    if (!doc.contains("generator") || !doc.contains("eta") || !doc.contains("triplet"))
      throw SchemaError("scenario: kolmogorov needs 'generator', 'eta' and 'triplet'");
    const Vector eta = schema::vector(doc.at("eta"), "eta");
    dim = static_cast<std::size_t>(eta.size());
    const Matrix q = schema::matrix(doc.at("generator"), dim, dim, "generator");
    const HilbertSpace space = HilbertSpace::weighted(eta);
    out.ou = kolmogorov_instance(q, eta, detail::parse_triplet(doc.at("triplet"), space));
  } else {
    for (const char* k : {"space", "operator", "projection"})
      if (!doc.contains(k)) throw SchemaError(std::string("scenario: missing key '") + k + "'");
    if (doc.contains("generator") || doc.contains("eta"))
      throw SchemaError("scenario: 'generator'/'eta' belong to kolmogorov scenarios");
    const HilbertSpace space = parse_space(doc.at("space"));
    dim = space.dim();
    const OperatorModel op = parse_operator(doc.at("operator"), space);
    const Projection p1 = parse_projection(doc.at("projection"), space);
    if (out.kind == "ou") {
      for (const char* k : {"drift", "diffusion", "noise", "jumps"})
        if (doc.contains(k)) throw SchemaError(std::string("scenario: ou scenarios take 'triplet', not '") + k + "'");
      if (!doc.contains("triplet")) throw SchemaError("scenario: ou needs 'triplet'");
      out.ou = make_ou_scenario(op, p1, detail::parse_triplet(doc.at("triplet"), space));
    } else if (out.kind == "sde") {
      if (doc.contains("triplet")) throw SchemaError("scenario: 'triplet' belongs to ou scenarios");
      Scenario sc(op, p1);
      sc.name = out.name;
      LipschitzConstants lips;
      if (doc.contains("drift")) {
        BuiltDrift d = parse_drift(doc.at("drift"), space, p1, "drift");
        if (d.linear)
          sc.set_linear_drift(d.linear->first, d.linear->second);
        else
          sc.set_drift(d.fn);
        lips.L_F = d.lipschitz;
      }
      QWienerSpec qw = QWienerSpec::none();
      if (doc.contains("noise")) {
        schema::keys(doc.at("noise"), {"eigenvalues"}, "noise", {"eigenvalues"});
        qw = QWienerSpec::diagonal(schema::vector(doc.at("noise").at("eigenvalues"), "noise.eigenvalues"));
        if ((qw.eigenvalues.array() < 0.0).any()) throw SchemaError("noise.eigenvalues: must be nonnegative");
      }
      sc.set_noise(qw);
      if (doc.contains("diffusion")) {
        BuiltDiffusion s = parse_diffusion(doc.at("diffusion"), space, p1, qw, "diffusion");
        if (s.constant)
          sc.set_constant_diffusion(*s.constant);
        else
          sc.set_diffusion(s.fn);
        lips.L_sigma = s.lipschitz;
      }
      if (doc.contains("jumps")) {
        BuiltJumps js = parse_jumps(doc.at("jumps"), space, "jumps");
        sc.set_jumps(std::move(js.spec));
        lips.L_gamma = js.lipschitz;
      }
      if (doc.contains("lipschitz")) {
        const Json& l = doc.at("lipschitz");
        schema::keys(l, {"L_F", "L_sigma", "L_gamma"}, "lipschitz");
        const LipschitzConstants declared{schema::number(l, "L_F", lips.L_F, "lipschitz"),
                                          schema::number(l, "L_sigma", lips.L_sigma, "lipschitz"),
                                          schema::number(l, "L_gamma", lips.L_gamma, "lipschitz")};
        if (declared.L_F < lips.L_F || declared.L_sigma < lips.L_sigma || declared.L_gamma < lips.L_gamma)
          throw SchemaError("lipschitz: declared constants are below the builders' constants");
        lips = declared;
      }
      sc.lipschitz = lips;
      if (doc.contains("flags")) {
        const Json& f = doc.at("flags");
        schema::keys(f, {"vanishing_on_H1", "deterministic_P1"}, "flags");
        sc.flags.vanishing_on_H1 = schema::flag(f, "vanishing_on_H1", false, "flags");
        sc.flags.deterministic_P1 = schema::flag(f, "deterministic_P1", false, "flags");
      }
      if (doc.contains("certificate")) {
        const Json& c = doc.at("certificate");
        schema::keys(c, {"lambda1", "tol"}, "certificate", {"lambda1"});
        if (op.mode() != OperatorModel::SemigroupMode::matrix_exponential)
          throw SchemaError("certificate: bisection needs a matrix operator");
        sc.certify(schema::number(c.at("lambda1"), "certificate.lambda1"), schema::number(c, "tol", 1e-9, "certificate"));
      }
      out.scenario = std::move(sc);
    } else {
      throw SchemaError("scenario.kind: unknown kind '" + out.kind + "'");
    }
  }

  out.initial = doc.contains("initial") ? schema::vector(doc.at("initial"), dim, "initial")
                                        : Vector(Vector::Zero(static_cast<Eigen::Index>(dim)));
  if (doc.contains("experiments")) {
    if (!out.scenario) throw SchemaError("experiments: lab experiments need an sde scenario");
    const Json& ex = doc.at("experiments");
    if (!ex.is_array()) throw SchemaError("experiments: expected an array");
    for (std::size_t i = 0; i < ex.size(); ++i) out.experiments.push_back(detail::parse_experiment(ex[i], dim, out.initial, i));
  }
  if (doc.contains("simulate")) {
    const Json& s = doc.at("simulate");
    schema::keys(s, {"dt", "steps", "traj", "seed", "snapshots"}, "simulate");
    out.simulate.dt = schema::number(s, "dt", out.simulate.dt, "simulate");
    out.simulate.steps = schema::count(s, "steps", out.simulate.steps, "simulate");
    out.simulate.traj = schema::count(s, "traj", out.simulate.traj, "simulate");
    out.simulate.seed = detail::parse_seed(s, 0, "simulate");
    out.simulate.snapshots = schema::count(s, "snapshots", out.simulate.snapshots, "simulate");
  }
  if (doc.contains("ou_run")) {
    if (!out.ou) throw SchemaError("ou_run: needs an ou or kolmogorov scenario");
    const Json& o = doc.at("ou_run");
    schema::keys(o, {"probes", "horizon", "dt", "traj", "seed"}, "ou_run");
    if (o.contains("probes")) {
      if (!o.at("probes").is_array()) throw SchemaError("ou_run.probes: expected an array of vectors");
      for (const Json& u : o.at("probes")) out.ou_run.probes.push_back(schema::vector(u, dim, "ou_run.probes"));
    }
    out.ou_run.horizon = schema::number(o, "horizon", out.ou_run.horizon, "ou_run");
    out.ou_run.dt = schema::number(o, "dt", out.ou_run.dt, "ou_run");
    out.ou_run.traj = schema::count(o, "traj", out.ou_run.traj, "ou_run");
    out.ou_run.seed = detail::parse_seed(o, 0, "ou_run");
  }
  return out;
}

inline ScenarioDocument load_scenario(const std::string& path) { return parse_scenario(load_document(path)); }

}  // namespace spdelab
