#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "speclab/errors.hpp"

namespace speclab {

struct RunningMean {
  std::int64_t n = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;

  void add(double x) {
    ++n;
    double d = x - mean_;
    mean_ += d / static_cast<double>(n);
    m2_ += d * (x - mean_);
  }
  double mean() const { return mean_; }
  double variance() const {
    return n > 1 ? m2_ / static_cast<double>(n - 1) : 0.0;
  }
  double stddev() const { return std::sqrt(variance()); }
  double stderr_mean() const {
    return n > 0 ? stddev() / std::sqrt(static_cast<double>(n)) : 0.0;
  }
};

struct BinomialInterval {
  double estimate = 0.0;  // raw frequency
  double center = 0.0;    // Wilson center (defined even at 0 or n hits)
  double lower = 0.0;
  double upper = 1.0;
};

// Wilson 95% score interval for a binomial proportion.
inline BinomialInterval wilson_interval(std::int64_t hits, std::int64_t n,
                                        double z = 1.959963984540054) {
  BinomialInterval ci;
  if (n <= 0) return ci;
  double p = static_cast<double>(hits) / static_cast<double>(n);
  double z2 = z * z;
  double denom = 1.0 + z2 / static_cast<double>(n);
  double center = (p + z2 / (2.0 * static_cast<double>(n))) / denom;
  double half =
      z *
      std::sqrt(p * (1.0 - p) / static_cast<double>(n) +
                z2 / (4.0 * static_cast<double>(n) * static_cast<double>(n))) /
      denom;
  ci.estimate = p;
  ci.center = center;
  ci.lower = std::max(0.0, center - half);
  ci.upper = std::min(1.0, center + half);
  return ci;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square residual
};

inline LineFit fit_line(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("line fit needs at least two points");
  double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ConfigError("line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

// log of binomial pmf, stable for n up to a few thousand
inline double log_binomial_pmf(std::int64_t n, std::int64_t k, double p) {
  if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  double lg = std::lgamma(static_cast<double>(n + 1)) -
              std::lgamma(static_cast<double>(k + 1)) -
              std::lgamma(static_cast<double>(n - k + 1));
  return lg + static_cast<double>(k) * std::log(p) +
         static_cast<double>(n - k) * std::log1p(-p);
}

// P{ Bin(n,p) <= k }
inline double binomial_cdf(std::int64_t n, double p, std::int64_t k) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  double s = 0.0;
  for (std::int64_t j = 0; j <= k; ++j) s += std::exp(log_binomial_pmf(n, j, p));
  return std::min(1.0, s);
}

}  // namespace speclab
