#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "errors.hpp"

namespace spdelab::stats {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_err = 0.0;   // of the mean
  std::size_t count = 0;
};

inline Moments moments(std::span<const double> xs) {
  Moments m;
  m.count = xs.size();
  if (xs.empty()) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.variance = ss / static_cast<double>(xs.size() - 1);
    m.std_err = std::sqrt(m.variance / static_cast<double>(xs.size()));
  }
  return m;
}

/// Standard error of the sample variance, from the fourth central moment.
inline double variance_std_err(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 4) return std::numeric_limits<double>::infinity();
  const Moments m = moments(xs);
  double m4 = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    m4 += d * d * d * d;
  }
  m4 /= static_cast<double>(n);
  const double s4 = m.variance * m.variance;
  const double nn = static_cast<double>(n);
  return std::sqrt(std::max(0.0, (m4 - s4 * (nn - 3.0) / (nn - 1.0)) / nn));
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  double slope_std_err = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y ~ intercept + slope * x.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "linear_fit: size mismatch");
  require(x.size() >= 2, "linear_fit: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "linear_fit: abscissae are all equal");
  LinearFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  fit.slope_std_err = x.size() > 2 ? std::sqrt(ss / (n - 2.0) / sxx) : 0.0;
  return fit;
}

struct RateFit {
  double prefactor = 0.0;  // exp(intercept)
  double rate = 0.0;       // y ~ prefactor * exp(-rate t)
  double residual = 0.0;   // rms residual of the log fit
  double rate_std_err = 0.0;
  bool degenerate = false;  // every value under the floor: rate is +infinity
};

/// Fits y(t) ~ C e^{-rate t} by least squares on log y, ignoring values at or
/// below `floor`. Fewer than two usable points gives the +infinity sentinel.
inline RateFit exponential_rate_fit(std::span<const double> t, std::span<const double> y,
                                    double floor = 1e-14) {
  require(t.size() == y.size(), "exponential_rate_fit: size mismatch");
  std::vector<double> xs, ls;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (y[i] > floor && std::isfinite(y[i])) {
      xs.push_back(t[i]);
      ls.push_back(std::log(y[i]));
    }
  }
  RateFit out;
  if (xs.size() < 2) {
    out.degenerate = true;
    out.rate = std::numeric_limits<double>::infinity();
    return out;
  }
  const LinearFit lf = linear_fit(xs, ls);
  out.prefactor = std::exp(lf.intercept);
  out.rate = -lf.slope;
  out.residual = lf.rms_residual;
  out.rate_std_err = lf.slope_std_err;
  return out;
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Asymptotic critical value c(alpha) sqrt((n+m)/(n m)), c(alpha) = sqrt(-ln(alpha/2)/2).
inline double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

/// Composite trapezoid on an arbitrary increasing abscissa.
inline double trapezoid(std::span<const double> t, std::span<const double> y) {
  require(t.size() == y.size(), "trapezoid: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

}  // namespace spdelab::stats
