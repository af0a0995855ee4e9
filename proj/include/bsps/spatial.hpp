#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bsps/rng.hpp"
#include "bsps/sites.hpp"

namespace bsps {

// Isotropic exponential correlation, exp(-d/range).
struct ExpKernel {
  double range;
  double operator()(double d) const { return std::exp(-d / range); }
};

// Correlation matrix C(||s_i - s_j||); symmetric, unit diagonal.
Eigen::MatrixXd corr_matrix(const SiteSet& sites, ExpKernel kernel);
Eigen::MatrixXd corr_matrix_from_distances(const Eigen::MatrixXd& dists, ExpKernel kernel);

// Lower-triangular Cholesky factor of M + jitter*I.
struct CholFactor {
  Eigen::MatrixXd L;
  double jitter = 0.0;  // jitter actually applied

  double log_det() const {  // of M + jitter*I
    return 2.0 * L.diagonal().array().log().sum();
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const {
    Eigen::VectorXd x = L.triangularView<Eigen::Lower>().solve(v);
    return L.transpose().triangularView<Eigen::Upper>().solve(x);
  }
  Eigen::MatrixXd solve_matrix(const Eigen::MatrixXd& m) const {
    Eigen::MatrixXd x = L.triangularView<Eigen::Lower>().solve(m);
    return L.transpose().triangularView<Eigen::Upper>().solve(x);
  }
  // L^{-1} v; squared norm of the result is the quadratic form v' M^{-1} v.
  Eigen::VectorXd half_solve(const Eigen::VectorXd& v) const {
    return L.triangularView<Eigen::Lower>().solve(v);
  }
  Eigen::MatrixXd half_solve_matrix(const Eigen::MatrixXd& m) const {
    return L.triangularView<Eigen::Lower>().solve(m);
  }
  // L^{-T} v, for N(0, M) sampling through the precision factor.
  Eigen::VectorXd transpose_solve(const Eigen::VectorXd& v) const {
    return L.transpose().triangularView<Eigen::Upper>().solve(v);
  }
  Eigen::MatrixXd inverse() const {
    return solve_matrix(Eigen::MatrixXd::Identity(L.rows(), L.cols()));
  }
};

// Factors M + jitter*I. On failure escalates jitter tenfold from 1e-8 up to
// 1e-4, then throws NotPositiveDefinite. Escalations are noted on stderr.
CholFactor chol_factor(const Eigen::MatrixXd& m, double jitter = 0.0);

// Maximal-ordering nearest-neighbor index. Sites are ordered ascending by
// first coordinate (ties: second coordinate, then site index); N(s_i) holds
// the at most m nearest previously-ordered sites, nearest first, distance
// ties broken by lower site index. All site indices are original indices.
struct NeighborIndex {
  int m = 0;
  std::vector<int> order;  // order[k] = site at ordering position k
  std::vector<int> pos;    // pos[site] = ordering position
  std::vector<std::vector<int>> neighbors;  // per site

  struct Descendant {
    int t;     // site with this site in its neighbor set
    int slot;  // position within neighbors[t]
  };
  std::vector<std::vector<Descendant>> descendants;
};

NeighborIndex build_neighbor_index(const SiteSet& sites, int m);

// Kernel-independent neighbor geometry, cached so coefficients can be
// rebuilt cheaply when the range parameter moves.
struct NeighborDistances {
  std::vector<Eigen::VectorXd> d_self;  // site -> its neighbors
  std::vector<Eigen::MatrixXd> d_nn;    // neighbor <-> neighbor
};

NeighborDistances neighbor_distances(const NeighborIndex& index, const SiteSet& sites);

// Per-site regression of a field value on its neighbors: B_i over N(s_i) and
// residual variance factor F_i in (0,1]; empty neighbor set gives F_i = 1.
struct NngpCoeffs {
  std::vector<Eigen::VectorXd> B;
  std::vector<double> F;
};

NngpCoeffs nngp_coefficients(const NeighborIndex& index, const NeighborDistances& geo,
                             ExpKernel kernel);
NngpCoeffs nngp_coefficients(const NeighborIndex& index, const SiteSet& sites,
                             ExpKernel kernel);

// Joint log-density of `field` under the NNGP factorization with marginal
// N(mean_level, tau) at every site. Equals the dense multivariate normal
// log-density when m >= n-1.
double nngp_log_density(const NeighborIndex& index, const NngpCoeffs& coeffs,
                        const Eigen::VectorXd& field, double mean_level, double tau);

// Kriging conditional of a GP at a new site given field values at `sites`.
struct GpConditional {
  double mean;
  double variance;  // clamped to [0, tau]
};

GpConditional gp_conditional(const Eigen::Vector2d& new_site, const SiteSet& sites,
                             const Eigen::VectorXd& field, double mean_level, double tau,
                             ExpKernel kernel);
// Variant reusing a factorization of corr_matrix(sites, kernel).
GpConditional gp_conditional(const Eigen::Vector2d& new_site, const SiteSet& sites,
                             const Eigen::VectorXd& field, double mean_level, double tau,
                             ExpKernel kernel, const CholFactor& chol);

// Mean-zero GP draw with covariance sd^2 * C(d; kernel): sd * L * z.
Eigen::VectorXd sample_gp(const SiteSet& sites, double sd, ExpKernel kernel, Rng& rng);

}  // namespace bsps
