#include "bsps/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "bsps/errors.hpp"

namespace bsps {

Eigen::MatrixXd corr_matrix_from_distances(const Eigen::MatrixXd& dists, ExpKernel kernel) {
  Eigen::MatrixXd c = (-dists / kernel.range).array().exp();
  c.diagonal().setOnes();
  return c;
}

Eigen::MatrixXd corr_matrix(const SiteSet& sites, ExpKernel kernel) {
  const int n = sites.n();
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i) {
    c(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) c(i, j) = c(j, i) = kernel(sites.distance(i, j));
  }
  return c;
}

namespace {

bool try_llt(const Eigen::MatrixXd& m, double jitter, Eigen::MatrixXd& L_out) {
  Eigen::MatrixXd a = m;
  if (jitter > 0.0) a.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return false;
  L_out = llt.matrixL();
  return L_out.allFinite();
}

}  // namespace

CholFactor chol_factor(const Eigen::MatrixXd& m, double jitter) {
  if (m.rows() != m.cols()) throw NotPositiveDefinite("chol_factor: matrix not square");
  CholFactor f;
  if (try_llt(m, jitter, f.L)) {
    f.jitter = jitter;
    return f;
  }
  double j = std::max(jitter * 10.0, 1e-8);
  for (; j <= 1e-4 * (1.0 + 1e-12); j *= 10.0) {
    if (try_llt(m, j, f.L)) {
      std::cerr << "[chol_factor] jitter escalated to " << j << "\n";
      f.jitter = j;
      return f;
    }
  }
  throw NotPositiveDefinite("chol_factor: factorization failed at jitter 1e-4");
}

NeighborIndex build_neighbor_index(const SiteSet& sites, int m) {
  if (m < 1) throw SchemaError("build_neighbor_index: m must be >= 1");
  const int n = sites.n();
  NeighborIndex idx;
  idx.m = m;
  idx.order.resize(n);
  std::iota(idx.order.begin(), idx.order.end(), 0);
  const auto& c = sites.coords();
  std::sort(idx.order.begin(), idx.order.end(), [&](int a, int b) {
    if (c(a, 0) != c(b, 0)) return c(a, 0) < c(b, 0);
    if (c(a, 1) != c(b, 1)) return c(a, 1) < c(b, 1);
    return a < b;
  });
  idx.pos.resize(n);
  for (int k = 0; k < n; ++k) idx.pos[idx.order[k]] = k;

  idx.neighbors.assign(n, {});
  for (int k = 0; k < n; ++k) {
    const int i = idx.order[k];
    const int take = std::min(m, k);
    if (take == 0) continue;
    std::vector<int> cand(idx.order.begin(), idx.order.begin() + k);
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end(), [&](int a, int b) {
      const double da = sites.distance(i, a), db = sites.distance(i, b);
      if (da != db) return da < db;
      return a < b;
    });
    cand.resize(take);
    idx.neighbors[i] = std::move(cand);
  }

  idx.descendants.assign(n, {});
  for (int t = 0; t < n; ++t)
    for (int slot = 0; slot < static_cast<int>(idx.neighbors[t].size()); ++slot)
      idx.descendants[idx.neighbors[t][slot]].push_back({t, slot});
  return idx;
}

NeighborDistances neighbor_distances(const NeighborIndex& index, const SiteSet& sites) {
  const int n = sites.n();
  NeighborDistances geo;
  geo.d_self.resize(n);
  geo.d_nn.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& nb = index.neighbors[i];
    const int k = static_cast<int>(nb.size());
    geo.d_self[i].resize(k);
    geo.d_nn[i].resize(k, k);
    for (int a = 0; a < k; ++a) {
      geo.d_self[i](a) = sites.distance(i, nb[a]);
      geo.d_nn[i](a, a) = 0.0;
      for (int b = a + 1; b < k; ++b)
        geo.d_nn[i](a, b) = geo.d_nn[i](b, a) = sites.distance(nb[a], nb[b]);
    }
  }
  return geo;
}

NngpCoeffs nngp_coefficients(const NeighborIndex& index, const NeighborDistances& geo,
                             ExpKernel kernel) {
  const int n = static_cast<int>(index.neighbors.size());
  NngpCoeffs out;
  out.B.resize(n);
  out.F.resize(n);
  for (int i = 0; i < n; ++i) {
    const int k = static_cast<int>(index.neighbors[i].size());
    if (k == 0) {
      out.B[i].resize(0);
      out.F[i] = 1.0;
      continue;
    }
    Eigen::MatrixXd c_nn = corr_matrix_from_distances(geo.d_nn[i], kernel);
    Eigen::VectorXd c_sn = (-geo.d_self[i].array() / kernel.range).exp();
    CholFactor f = chol_factor(c_nn);
    out.B[i] = f.solve(c_sn);
    const double fi = 1.0 - c_sn.dot(out.B[i]);
    out.F[i] = std::clamp(fi, 1e-12, 1.0);
  }
  return out;
}

NngpCoeffs nngp_coefficients(const NeighborIndex& index, const SiteSet& sites,
                             ExpKernel kernel) {
  return nngp_coefficients(index, neighbor_distances(index, sites), kernel);
}

double nngp_log_density(const NeighborIndex& index, const NngpCoeffs& coeffs,
                        const Eigen::VectorXd& field, double mean_level, double tau) {
  constexpr double kLog2Pi = 1.8378770664093454836;
  const int n = static_cast<int>(field.size());
  double ll = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& nb = index.neighbors[i];
    double cond_mean = mean_level;
    for (int a = 0; a < static_cast<int>(nb.size()); ++a)
      cond_mean += coeffs.B[i](a) * (field(nb[a]) - mean_level);
    const double v = tau * coeffs.F[i];
    const double r = field(i) - cond_mean;
    ll += -0.5 * (kLog2Pi + std::log(v) + r * r / v);
  }
  return ll;
}

GpConditional gp_conditional(const Eigen::Vector2d& new_site, const SiteSet& sites,
                             const Eigen::VectorXd& field, double mean_level, double tau,
                             ExpKernel kernel, const CholFactor& chol) {
  const int n = sites.n();
  Eigen::VectorXd cross(n);
  for (int i = 0; i < n; ++i) cross(i) = kernel(sites.distance_to(i, new_site));
  const Eigen::VectorXd w = chol.half_solve(cross);
  const Eigen::VectorXd u = chol.half_solve((field.array() - mean_level).matrix());
  GpConditional out;
  out.mean = mean_level + w.dot(u);
  out.variance = std::clamp(tau * (1.0 - w.squaredNorm()), 0.0, tau);
  return out;
}

GpConditional gp_conditional(const Eigen::Vector2d& new_site, const SiteSet& sites,
                             const Eigen::VectorXd& field, double mean_level, double tau,
                             ExpKernel kernel) {
  if (field.size() != sites.n()) throw LengthMismatch("gp_conditional: field length != n");
  if (!(tau > 0.0)) throw SchemaError("gp_conditional: tau must be > 0");
  return gp_conditional(new_site, sites, field, mean_level, tau, kernel,
                        chol_factor(corr_matrix(sites, kernel)));
}

Eigen::VectorXd sample_gp(const SiteSet& sites, double sd, ExpKernel kernel, Rng& rng) {
  const CholFactor f = chol_factor(corr_matrix(sites, kernel));
  Eigen::VectorXd z(sites.n());
  for (int i = 0; i < sites.n(); ++i) z(i) = rng.normal();
  const Eigen::VectorXd draw = f.L.triangularView<Eigen::Lower>() * z;
  return sd * draw;
}

}  // namespace bsps
