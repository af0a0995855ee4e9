#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "bsps/agents.hpp"
#include "bsps/rng.hpp"
#include "bsps/sites.hpp"

namespace bsps::testing {

inline SiteSet random_sites(int n, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Eigen::MatrixX2d c(n, 2);
  for (int i = 0; i < n; ++i) {
    c(i, 0) = rng.uniform(lo, hi);
    c(i, 1) = rng.uniform(lo, hi);
  }
  return SiteSet::make(c);
}

struct GaussianFixture {
  SiteSet sites;
  Eigen::VectorXd y;
  AgentForecastSet forecasts;
};

// Small synthetic regression problem with J Gaussian agents.
inline GaussianFixture make_fixture(int n, int num_agents, Rng& rng) {
  SiteSet sites = random_sites(n, rng);
  Eigen::MatrixXd a(n, num_agents), b(n, num_agents);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    double truth = 0.5 * sites.coords()(i, 0) - 0.3 * sites.coords()(i, 1);
    for (int j = 0; j < num_agents; ++j) {
      a(i, j) = truth + 0.3 * rng.normal() + 0.2 * j;
      b(i, j) = 0.1 + 0.2 * rng.uniform();
    }
    y(i) = truth + 0.4 * rng.normal();
  }
  return {std::move(sites), std::move(y), AgentForecastSet::gaussian(a, b)};
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Standard error of the mean of a correlated sequence via batch means.
inline double batch_means_se(const std::vector<double>& v, int n_batches = 20) {
  const int n = static_cast<int>(v.size());
  const int batch = std::max(1, n / n_batches);
  std::vector<double> means;
  for (int start = 0; start + batch <= n; start += batch) {
    double s = 0;
    for (int i = start; i < start + batch; ++i) s += v[i];
    means.push_back(s / batch);
  }
  const double m = mean_of(means);
  double var = 0;
  for (double x : means) var += (x - m) * (x - m);
  var /= std::max<std::size_t>(1, means.size() - 1);
  return std::sqrt(var / static_cast<double>(means.size()));
}

// Standard error of the mean of independent draws.
inline double iid_se(const std::vector<double>& v) {
  const double m = mean_of(v);
  double var = 0;
  for (double x : v) var += (x - m) * (x - m);
  var /= static_cast<double>(v.size() - 1);
  return std::sqrt(var / static_cast<double>(v.size()));
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    ks = std::max(ks, std::abs(i / na - j / nb));
  }
  return ks;
}

}  // namespace bsps::testing
