#include "bsps/vb.hpp"

#include <cmath>

#include "bsps/errors.hpp"
#include "bsps/mathutil.hpp"
#include "bsps/spatial.hpp"

namespace bsps {

RangeGrid RangeGrid::log_spaced(double lo, double hi, int num_points) {
  if (num_points < 1) throw ConfigError("RangeGrid: need at least one point");
  if (!(lo > 0 && lo <= hi)) throw ConfigError("RangeGrid: need 0 < lo <= hi");
  RangeGrid grid;
  grid.eta.resize(num_points);
  if (num_points == 1) {
    grid.eta(0) = std::sqrt(lo * hi);
    return grid;
  }
  const double step = (std::log(hi) - std::log(lo)) / (num_points - 1);
  for (int l = 0; l < num_points; ++l) grid.eta(l) = std::exp(std::log(lo) + l * step);
  return grid;
}

void RangeGrid::validate(const PriorConfig& priors) const {
  if (eta.size() < 1) throw ConfigError("RangeGrid: empty");
  for (int l = 0; l < eta.size(); ++l) {
    if (!(eta(l) > 0)) throw ConfigError("RangeGrid: non-positive point");
    if (l > 0 && !(eta(l) > eta(l - 1)))
      throw ConfigError("RangeGrid: points must be strictly increasing");
    if (eta(l) < priors.g_lo - 1e-12 || eta(l) > priors.g_hi + 1e-12)
      throw ConfigError("RangeGrid: point outside [g_lo, g_hi]");
  }
}

VbWorkspace vb_precompute(const SiteSet& sites, const RangeGrid& grid) {
  VbWorkspace ws;
  const Eigen::MatrixXd dists = pairwise_distances(sites);
  ws.corr_inv.reserve(grid.size());
  ws.logdet.reserve(grid.size());
  for (int l = 0; l < grid.size(); ++l) {
    const CholFactor f =
        chol_factor(corr_matrix_from_distances(dists, ExpKernel{grid.eta(l)}));
    ws.corr_inv.push_back(f.inverse());
    ws.logdet.push_back(f.log_det());
  }
  return ws;
}

VariationalState vb_init(const Eigen::VectorXd& y, const AgentForecastSet& forecasts,
                         const PriorConfig& priors, const RangeGrid& grid) {
  if (forecasts.kind() != ForecastKind::Gaussian)
    throw KindMismatch("vb_init: Gaussian forecasts required");
  const int n = static_cast<int>(y.size());
  if (n == 0) throw EmptyData("vb_init: empty response");
  if (forecasts.n() != n) throw LengthMismatch("vb_init: forecasts/response size mismatch");
  const int J = forecasts.num_agents();
  priors.validate(J);

  VariationalState s;
  s.m = forecasts.a();
  s.s2 = forecasts.b();
  const double tau0 = priors.b_tau / (priors.a_tau + 1.0);
  s.mu.resize(J + 1);
  s.Sigma.resize(J + 1);
  s.logdet_Sigma.resize(J + 1);
  for (int j = 0; j <= J; ++j) {
    s.mu[j] = Eigen::VectorXd::Constant(n, priors.beta_bar(j));
    s.Sigma[j] = tau0 * Eigen::MatrixXd::Identity(n, n);
    s.logdet_Sigma[j] = n * std::log(tau0);
  }
  s.a_tau = Eigen::VectorXd::Constant(J + 1, priors.a_tau);
  s.b_tau = Eigen::VectorXd::Constant(J + 1, priors.b_tau);
  s.p = Eigen::MatrixXd::Constant(J + 1, grid.size(), 1.0 / grid.size());
  s.a_sigma = priors.a_sigma;
  s.b_sigma = priors.b_sigma;
  return s;
}

VariationalState vb_warmstart_state(const PosteriorSamples& samples,
                                    const PriorConfig& priors, const RangeGrid& grid) {
  if (samples.draws.empty()) throw EmptyData("vb_warmstart_state: no draws");
  const int n = samples.draws[0].n();
  const int J = samples.draws[0].num_agents();
  const int L = grid.size();
  const double nd = static_cast<double>(samples.draws.size());

  VariationalState s;
  s.m = Eigen::MatrixXd::Zero(n, J);
  s.s2 = Eigen::MatrixXd::Zero(n, J);
  Eigen::MatrixXd beta_mean = Eigen::MatrixXd::Zero(n, J + 1);
  Eigen::MatrixXd beta_m2 = Eigen::MatrixXd::Zero(n, J + 1);
  Eigen::VectorXd tau_mean = Eigen::VectorXd::Zero(J + 1);
  double sigma2_mean = 0.0;
  Eigen::MatrixXd g_counts = Eigen::MatrixXd::Constant(J + 1, L, 1e-6);
  for (const auto& draw : samples.draws) {
    s.m += draw.f;
    s.s2 += draw.f.cwiseProduct(draw.f);
    beta_mean += draw.beta;
    beta_m2 += draw.beta.cwiseProduct(draw.beta);
    tau_mean += draw.tau;
    sigma2_mean += draw.sigma2;
    for (int j = 0; j <= J; ++j) {
      int nearest = 0;
      for (int l = 1; l < L; ++l)
        if (std::abs(grid.eta(l) - draw.g(j)) < std::abs(grid.eta(nearest) - draw.g(j)))
          nearest = l;
      g_counts(j, nearest) += 1.0;
    }
  }
  s.m /= nd;
  s.s2 = (s.s2 / nd - s.m.cwiseProduct(s.m)).cwiseMax(1e-8);
  beta_mean /= nd;
  const Eigen::MatrixXd beta_var =
      (beta_m2 / nd - beta_mean.cwiseProduct(beta_mean)).cwiseMax(1e-8);
  tau_mean /= nd;
  sigma2_mean /= nd;

  s.mu.resize(J + 1);
  s.Sigma.resize(J + 1);
  s.logdet_Sigma.resize(J + 1);
  for (int j = 0; j <= J; ++j) {
    s.mu[j] = beta_mean.col(j);
    s.Sigma[j] = beta_var.col(j).asDiagonal();
    s.logdet_Sigma[j] = beta_var.col(j).array().log().sum();
  }
  s.a_tau = Eigen::VectorXd::Constant(J + 1, priors.a_tau + 0.5 * n);
  s.b_tau.resize(J + 1);
  for (int j = 0; j <= J; ++j) s.b_tau(j) = s.a_tau(j) * std::max(tau_mean(j), 1e-8);
  s.p.resize(J + 1, L);
  for (int j = 0; j <= J; ++j) s.p.row(j) = g_counts.row(j) / g_counts.row(j).sum();
  s.a_sigma = priors.a_sigma + 0.5 * n;
  s.b_sigma = s.a_sigma * std::max(sigma2_mean, 1e-8);
  return s;
}

namespace {

// E_q[(y_i - sum_k beta_ki f_ki)^2] summed over sites, with f_0 = 1.
double expected_ssr(const VariationalState& s, const Eigen::VectorXd& y) {
  const int J = s.num_agents();
  Eigen::VectorXd resid = y - s.mu[0];
  for (int j = 1; j <= J; ++j) resid -= s.mu[j].cwiseProduct(s.m.col(j - 1));
  double iq = resid.squaredNorm() + s.Sigma[0].trace();
  for (int j = 1; j <= J; ++j) {
    const auto mu2 = s.mu[j].array().square();
    const auto sig = s.Sigma[j].diagonal().array();
    const auto m2 = s.m.col(j - 1).array().square();
    const auto v = s.s2.col(j - 1).array();
    iq += ((mu2 + sig) * (m2 + v) - mu2 * m2).sum();
  }
  return iq;
}

// (mu_j - bbar 1)' Ginv_l (mu_j - bbar 1) + tr(Sigma_j Ginv_l), per grid point.
Eigen::VectorXd field_grid_quads(const VariationalState& s, int j, double beta_bar_j,
                                 const VbWorkspace& ws) {
  const int L = static_cast<int>(ws.corr_inv.size());
  const Eigen::VectorXd delta = (s.mu[j].array() - beta_bar_j).matrix();
  Eigen::VectorXd quads(L);
  for (int l = 0; l < L; ++l) {
    quads(l) = delta.dot(ws.corr_inv[l] * delta) +
               ws.corr_inv[l].cwiseProduct(s.Sigma[j]).sum();
  }
  return quads;
}

}  // namespace

void vb_sweep(VariationalState& s, const Eigen::VectorXd& y,
              const AgentForecastSet& forecasts, const PriorConfig& priors,
              const RangeGrid& grid, const VbWorkspace& ws) {
  const int n = s.n();
  const int J = s.num_agents();
  const int L = grid.size();
  const Eigen::MatrixXd& a = forecasts.a();
  const Eigen::MatrixXd& b = forecasts.b();
  const double r_sigma = s.a_sigma / s.b_sigma;

  // factors
  for (int j = 1; j <= J; ++j) {
    for (int i = 0; i < n; ++i) {
      const double mu_ji = s.mu[j](i);
      const double mom2 = mu_ji * mu_ji + s.Sigma[j](i, i);
      const double var = 1.0 / (1.0 / b(i, j - 1) + mom2 * r_sigma);
      double resid = y(i) - s.mu[0](i);
      for (int k = 1; k <= J; ++k)
        if (k != j) resid -= s.mu[k](i) * s.m(i, k - 1);
      s.s2(i, j - 1) = var;
      s.m(i, j - 1) = var * (a(i, j - 1) / b(i, j - 1) + mu_ji * r_sigma * resid);
    }
  }

  // coefficient fields
  for (int j = 0; j <= J; ++j) {
    const double r_tau = s.a_tau(j) / s.b_tau(j);
    Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(n, n);
    for (int l = 0; l < L; ++l) prec += (s.p(j, l) * r_tau) * ws.corr_inv[l];
    Eigen::VectorXd prior_pull = prec * Eigen::VectorXd::Ones(n) * priors.beta_bar(j);
    if (j == 0)
      prec.diagonal().array() += r_sigma;
    else
      prec.diagonal() +=
          r_sigma * (s.m.col(j - 1).array().square() + s.s2.col(j - 1).array()).matrix();

    Eigen::VectorXd resid = y;
    for (int k = 0; k <= J; ++k) {
      if (k == j) continue;
      if (k == 0)
        resid -= s.mu[0];
      else
        resid -= s.mu[k].cwiseProduct(s.m.col(k - 1));
    }
    Eigen::VectorXd lin = prior_pull;
    if (j == 0)
      lin += r_sigma * resid;
    else
      lin += r_sigma * s.m.col(j - 1).cwiseProduct(resid);

    const CholFactor chol = chol_factor(prec);
    s.Sigma[j] = chol.inverse();
    s.logdet_Sigma[j] = -chol.log_det();
    s.mu[j] = chol.solve(lin);
  }

  // tau, then range probabilities from the same quadratic forms
  for (int j = 0; j <= J; ++j) {
    const Eigen::VectorXd quads = field_grid_quads(s, j, priors.beta_bar(j), ws);
    const double weighted = s.p.row(j).dot(quads);
    s.a_tau(j) = priors.a_tau + 0.5 * n;
    s.b_tau(j) = priors.b_tau + 0.5 * weighted;

    Eigen::VectorXd logw(L);
    for (int l = 0; l < L; ++l)
      logw(l) = -0.5 * ws.logdet[l] - 0.5 * (s.a_tau(j) / s.b_tau(j)) * quads(l);
    const double hi = logw.maxCoeff();
    const Eigen::VectorXd w = (logw.array() - hi).exp().matrix();
    s.p.row(j) = w / w.sum();
  }

  // noise variance
  s.a_sigma = priors.a_sigma + 0.5 * n;
  s.b_sigma = priors.b_sigma + 0.5 * expected_ssr(s, y);
}

double vb_elbo(const VariationalState& s, const Eigen::VectorXd& y,
               const AgentForecastSet& forecasts, const PriorConfig& priors,
               const RangeGrid& grid, const VbWorkspace& ws) {
  constexpr double kLog2Pi = 1.8378770664093454836;
  const int n = s.n();
  const int J = s.num_agents();
  const int L = grid.size();
  const Eigen::MatrixXd& a = forecasts.a();
  const Eigen::MatrixXd& b = forecasts.b();

  const double e_log_sigma2 = std::log(s.b_sigma) - digamma(s.a_sigma);
  const double e_inv_sigma2 = s.a_sigma / s.b_sigma;

  // likelihood
  double elbo = -0.5 * n * (kLog2Pi + e_log_sigma2) - 0.5 * e_inv_sigma2 * expected_ssr(s, y);

  // factor prior and entropy
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < n; ++i) {
      const double dm = s.m(i, j) - a(i, j);
      elbo += -0.5 * (kLog2Pi + std::log(b(i, j))) -
              (dm * dm + s.s2(i, j)) / (2.0 * b(i, j));
      elbo += 0.5 * (kLog2Pi + 1.0 + std::log(s.s2(i, j)));
    }
  }

  for (int j = 0; j <= J; ++j) {
    const double e_log_tau = std::log(s.b_tau(j)) - digamma(s.a_tau(j));
    const double e_inv_tau = s.a_tau(j) / s.b_tau(j);
    const Eigen::VectorXd quads = field_grid_quads(s, j, priors.beta_bar(j), ws);

    // GP prior on the field under the range mixture
    double mean_logdet = 0.0;
    for (int l = 0; l < L; ++l) mean_logdet += s.p(j, l) * ws.logdet[l];
    elbo += -0.5 * n * (kLog2Pi + e_log_tau) - 0.5 * mean_logdet -
            0.5 * e_inv_tau * s.p.row(j).dot(quads);
    // field entropy
    elbo += 0.5 * n * (kLog2Pi + 1.0) + 0.5 * s.logdet_Sigma[j];

    // tau prior and entropy
    elbo += priors.a_tau * std::log(priors.b_tau) - std::lgamma(priors.a_tau) -
            (priors.a_tau + 1.0) * e_log_tau - priors.b_tau * e_inv_tau;
    elbo += s.a_tau(j) + std::log(s.b_tau(j)) + std::lgamma(s.a_tau(j)) -
            (1.0 + s.a_tau(j)) * digamma(s.a_tau(j));

    // range prior and entropy
    elbo += -std::log(static_cast<double>(L));
    for (int l = 0; l < L; ++l)
      if (s.p(j, l) > 0.0) elbo -= s.p(j, l) * std::log(s.p(j, l));
  }

  // sigma2 prior and entropy
  elbo += priors.a_sigma * std::log(priors.b_sigma) - std::lgamma(priors.a_sigma) -
          (priors.a_sigma + 1.0) * e_log_sigma2 - priors.b_sigma * e_inv_sigma2;
  elbo += s.a_sigma + std::log(s.b_sigma) + std::lgamma(s.a_sigma) -
          (1.0 + s.a_sigma) * digamma(s.a_sigma);

  return elbo;
}

VbResult run_vb(const SiteSet& sites, const Eigen::VectorXd& y,
                const AgentForecastSet& forecasts, const PriorConfig& priors,
                const RangeGrid& grid, double tol, int max_iter,
                const VariationalState* init) {
  if (!(tol > 0)) throw ConfigError("run_vb: tol must be > 0");
  grid.validate(priors);
  const VbWorkspace ws = vb_precompute(sites, grid);
  VbResult result;
  result.state = init ? *init : vb_init(y, forecasts, priors, grid);
  VariationalState& s = result.state;

  auto rel = [](double now, double before) {
    return std::abs(now - before) / (1.0 + std::abs(before));
  };

  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd m_old = s.m;
    std::vector<Eigen::VectorXd> mu_old = s.mu;
    const Eigen::VectorXd tau_ratio_old = s.a_tau.cwiseQuotient(s.b_tau);
    const double sigma_ratio_old = s.a_sigma / s.b_sigma;

    vb_sweep(s, y, forecasts, priors, grid, ws);
    result.elbo_trace.push_back(vb_elbo(s, y, forecasts, priors, grid, ws));
    result.iterations = it + 1;

    double change = rel(s.a_sigma / s.b_sigma, sigma_ratio_old);
    for (int j = 0; j < s.a_tau.size(); ++j)
      change = std::max(change, rel(s.a_tau(j) / s.b_tau(j), tau_ratio_old(j)));
    for (int j = 0; j < static_cast<int>(s.mu.size()); ++j)
      for (int i = 0; i < s.mu[j].size(); ++i)
        change = std::max(change, rel(s.mu[j](i), mu_old[j](i)));
    for (int j = 0; j < s.m.cols(); ++j)
      for (int i = 0; i < s.m.rows(); ++i)
        change = std::max(change, rel(s.m(i, j), m_old(i, j)));

    if (change < tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

Eigen::MatrixXd vb_kriged_coefficients(const std::vector<Eigen::VectorXd>& mu,
                                       const Eigen::MatrixXd& p,
                                       const Eigen::VectorXd& beta_bar,
                                       const SiteSet& train_sites, const SiteSet& new_sites,
                                       const RangeGrid& grid, const VbWorkspace& ws) {
  const int J = static_cast<int>(mu.size()) - 1;
  const int n = train_sites.n();
  const int n_new = new_sites.n();
  const int L = grid.size();

  // Ginv_l (mu_j - bbar 1), reused across new sites
  std::vector<std::vector<Eigen::VectorXd>> v(J + 1, std::vector<Eigen::VectorXd>(L));
  for (int j = 0; j <= J; ++j) {
    const Eigen::VectorXd delta = (mu[j].array() - beta_bar(j)).matrix();
    for (int l = 0; l < L; ++l) v[j][l] = ws.corr_inv[l] * delta;
  }

  Eigen::MatrixXd kriged(J + 1, n_new);
  for (int j = 0; j <= J; ++j) kriged.row(j).setConstant(beta_bar(j));
  Eigen::VectorXd cross(n);
  for (int snew = 0; snew < n_new; ++snew) {
    const Eigen::Vector2d site = new_sites.site(snew);
    for (int l = 0; l < L; ++l) {
      const ExpKernel kern{grid.eta(l)};
      for (int i = 0; i < n; ++i) cross(i) = kern(train_sites.distance_to(i, site));
      for (int j = 0; j <= J; ++j) kriged(j, snew) += p(j, l) * cross.dot(v[j][l]);
    }
  }
  return kriged;
}

Eigen::VectorXd vb_point_predict(const VariationalState& s, const SiteSet& train_sites,
                                 const SiteSet& new_sites,
                                 const AgentForecastSet& forecasts_at_new,
                                 const RangeGrid& grid, const PriorConfig& priors,
                                 const VbWorkspace& ws) {
  if (forecasts_at_new.kind() != ForecastKind::Gaussian)
    throw KindMismatch("vb_point_predict: Gaussian forecasts required");
  const int J = s.num_agents();
  if (forecasts_at_new.num_agents() != J)
    throw LengthMismatch("vb_point_predict: agent count mismatch");
  const Eigen::MatrixXd kriged = vb_kriged_coefficients(s.mu, s.p, priors.beta_bar,
                                                        train_sites, new_sites, grid, ws);
  const int n_new = new_sites.n();
  Eigen::VectorXd out(n_new);
  for (int snew = 0; snew < n_new; ++snew) {
    double mean = kriged(0, snew);
    for (int j = 1; j <= J; ++j) mean += kriged(j, snew) * forecasts_at_new.a()(snew, j - 1);
    out(snew) = mean;
  }
  return out;
}

}  // namespace bsps
