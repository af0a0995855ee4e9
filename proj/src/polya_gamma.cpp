#include "bsps/polya_gamma.hpp"

#include <cmath>

#include "bsps/errors.hpp"
#include "bsps/mathutil.hpp"

namespace bsps {

namespace {

constexpr double kTrunc = 0.64;  // series crossover point
constexpr double kPiSq = 9.869604401089358;

// log CDF of inverse-Gaussian(mu = 1/z, lambda = 1) at t, stable for z >= 0.
double log_cdf_inv_gauss(double t, double z) {
  const double rt = std::sqrt(t);
  if (z <= 0.0) {
    // Levy limit: 2 Phi(-1/sqrt(t))
    return std::log(2.0) + std::log(norm_cdf(-1.0 / rt));
  }
  const double a = (t * z - 1.0) / rt;   // Phi(a)
  const double b = -(t * z + 1.0) / rt;  // e^{2z} Phi(b)
  const double term1 = norm_cdf(a);
  // log(Phi(b)) via erfc asymptotics when deep in the tail
  const double bb = -b;  // positive
  double log_phi_b;
  if (bb < 20.0) {
    log_phi_b = std::log(norm_cdf(b));
  } else {
    const double bb2 = bb * bb;
    log_phi_b = -0.5 * bb2 - std::log(bb) - 0.5 * std::log(2.0 * M_PI) +
                std::log1p(-1.0 / bb2 + 3.0 / (bb2 * bb2));
  }
  const double log_term2 = 2.0 * z + log_phi_b;
  if (term1 <= 0.0) return log_term2;
  const double log_term1 = std::log(term1);
  const double hi = std::max(log_term1, log_term2);
  return hi + std::log(std::exp(log_term1 - hi) + std::exp(log_term2 - hi));
}

// Inverse-Gaussian(mu, 1) truncated to (0, t]; z = 1/mu.
double sample_truncated_inv_gauss(double z, double t, Rng& rng) {
  if (z < 1.0 / t) {
    // mu > t: sample 1/X from a truncated chi-square-type density, then
    // thin by the exp(-z^2 X / 2) tilt.
    for (;;) {
      double e1, e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / t);
      const double x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      if (std::log(rng.uniform()) <= -0.5 * z * z * x) return x;
    }
  }
  const double mu = 1.0 / z;
  for (;;) {
    // Michael-Schucany-Haas
    const double nu = rng.normal();
    const double y = nu * nu;
    double x = mu + 0.5 * mu * mu * y - 0.5 * mu * std::sqrt(4.0 * mu * y + mu * mu * y * y);
    if (x <= 0.0) continue;
    if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    if (x <= t) return x;
  }
}

// a_n(x) / a_0(x) = (2n+1) exp(-n(n+1) theta) with theta = 2/x on the left
// branch and pi^2 x / 2 on the right; both series alternate and decrease.
double coef_ratio(int n, double theta) {
  return (2.0 * n + 1.0) * std::exp(-static_cast<double>(n) * (n + 1.0) * theta);
}

}  // namespace

double sample_pg1(double c, Rng& rng) {
  const double z = 0.5 * std::abs(c);
  const double k = kPiSq / 8.0 + 0.5 * z * z;
  const double log_p = std::log(M_PI / (2.0 * k)) - k * kTrunc;
  const double log_q = std::log(2.0) - z + log_cdf_inv_gauss(kTrunc, z);
  const double prob_right = 1.0 / (1.0 + std::exp(log_q - log_p));

  for (int round = 0; round < 10000; ++round) {
    double x;
    if (rng.uniform() < prob_right) {
      x = kTrunc + rng.exponential() / k;
    } else {
      x = sample_truncated_inv_gauss(z, kTrunc, rng);
    }
    const double theta = (x <= kTrunc) ? 2.0 / x : kPiSq * x / 2.0;
    const double v = rng.uniform();
    double s = 1.0;
    for (int n = 1;; ++n) {
      const double r = coef_ratio(n, theta);
      if (n % 2 == 1) {
        s -= r;
        if (v <= s) return x / 4.0;
      } else {
        s += r;
        if (v > s) break;
      }
      if (n > 200) return x / 4.0;  // series ratio below machine epsilon
    }
  }
  throw SamplerStall("sample_pg1: no acceptance after 1e4 proposal rounds");
}

}  // namespace bsps
