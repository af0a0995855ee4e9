#include "bsps/sites.hpp"

#include <cmath>
#include <string>

#include "bsps/errors.hpp"

namespace bsps {

namespace {

void check_finite(const Eigen::MatrixX2d& coords) {
  if (coords.rows() == 0) throw EmptyData("SiteSet: no coordinates");
  if (!coords.allFinite()) throw SchemaError("SiteSet: non-finite coordinate");
}

// Returns the first offending pair closer than tol, or (-1,-1).
std::pair<int, int> find_near_duplicate(const Eigen::MatrixX2d& coords, double tol) {
  const int n = static_cast<int>(coords.rows());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((coords.row(i) - coords.row(j)).norm() < tol) return {i, j};
  return {-1, -1};
}

}  // namespace

SiteSet SiteSet::make(Eigen::MatrixX2d coords) {
  check_finite(coords);
  auto [i, j] = find_near_duplicate(coords, kDupTol);
  if (i >= 0)
    throw DuplicateSites("SiteSet: sites " + std::to_string(i) + " and " +
                         std::to_string(j) + " are closer than " + std::to_string(kDupTol));
  return SiteSet(std::move(coords));
}

SiteSet SiteSet::make_jittered(Eigen::MatrixX2d coords, Rng& rng) {
  check_finite(coords);
  for (int round = 0; round < 64; ++round) {
    auto [i, j] = find_near_duplicate(coords, kDupTol);
    if (i < 0) return SiteSet(std::move(coords));
    coords(j, 0) += kJitterSd * rng.normal();
    coords(j, 1) += kJitterSd * rng.normal();
  }
  throw DuplicateSites("SiteSet: jitter failed to separate duplicate sites");
}

double SiteSet::max_pairwise_distance() const {
  double dmax = 0.0;
  const int m = n();
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) dmax = std::max(dmax, distance(i, j));
  return dmax;
}

Eigen::MatrixXd pairwise_distances(const SiteSet& sites) {
  const int n = sites.n();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = sites.distance(i, j);
  return d;
}

}  // namespace bsps
