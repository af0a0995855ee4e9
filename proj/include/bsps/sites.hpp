#pragma once

#include <Eigen/Dense>

#include "bsps/rng.hpp"

namespace bsps {

// Ordered collection of 2-D plane coordinates. Construction rejects
// coincident sites; make_jittered() perturbs offenders first (additive
// N(0, 1e-3 I2) noise on coordinates closer than kDupTol).
class SiteSet {
 public:
  static constexpr double kDupTol = 1e-9;
  static constexpr double kJitterSd = 0.0316227766016837933;  // sqrt(1e-3)

  // Throws DuplicateSites if any pair is closer than kDupTol.
  static SiteSet make(Eigen::MatrixX2d coords);
  // Jitters near-duplicates before validation; deterministic given rng.
  static SiteSet make_jittered(Eigen::MatrixX2d coords, Rng& rng);

  int n() const { return static_cast<int>(coords_.rows()); }
  const Eigen::MatrixX2d& coords() const { return coords_; }
  Eigen::Vector2d site(int i) const { return coords_.row(i); }

  double distance(int i, int j) const {
    return (coords_.row(i) - coords_.row(j)).norm();
  }
  double distance_to(int i, const Eigen::Vector2d& p) const {
    return (coords_.row(i).transpose() - p).norm();
  }

  double max_pairwise_distance() const;

 private:
  explicit SiteSet(Eigen::MatrixX2d coords) : coords_(std::move(coords)) {}
  Eigen::MatrixX2d coords_;
};

// Full n x n Euclidean distance table (symmetric, zero diagonal).
Eigen::MatrixXd pairwise_distances(const SiteSet& sites);

}  // namespace bsps
