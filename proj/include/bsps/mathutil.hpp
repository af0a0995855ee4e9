#pragma once

#include <cmath>

namespace bsps {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// log(1 + exp(x)) without overflow.
inline double log1pexp(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double expit(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Inverse standard normal CDF (Wichura's PPND16, ~1e-15 accurate).
double inv_norm_cdf(double p);

// Digamma via recurrence + asymptotic expansion.
double digamma(double x);

}  // namespace bsps
