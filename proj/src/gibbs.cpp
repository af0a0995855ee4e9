#include "bsps/gibbs.hpp"

#include <cmath>
#include <string>

#include "bsps/errors.hpp"

namespace bsps {

PriorConfig PriorConfig::defaults(int num_agents, double d_max) {
  PriorConfig p;
  p.g_lo = 0.01 * d_max;
  p.g_hi = d_max;
  p.beta_bar = Eigen::VectorXd::Constant(num_agents + 1, 1.0 / std::max(1, num_agents));
  p.beta_bar(0) = 0.0;
  return p;
}

void PriorConfig::validate(int num_agents) const {
  if (!(a_sigma > 0 && b_sigma > 0 && a_tau > 0 && b_tau > 0))
    throw ConfigError("priors: shape/rate parameters must be positive");
  if (!(g_lo > 0 && g_lo < g_hi)) throw ConfigError("priors: need 0 < g_lo < g_hi");
  if (beta_bar.size() != num_agents + 1)
    throw ConfigError("priors: beta_bar must have J+1 entries");
}

void ChainConfig::validate() const {
  if (n_keep < 1) throw ConfigError("chain: n_keep must be >= 1");
  if (thin < 1) throw ConfigError("chain: thin must be >= 1");
  if (n_burn < 0) throw ConfigError("chain: n_burn must be >= 0");
  if (backend == BackendKind::Nngp && m < 1) throw ConfigError("chain: m must be >= 1");
}

Eigen::VectorXd SynthesisState::linear_predictor() const {
  Eigen::VectorXd psi = beta.col(0);
  for (int j = 0; j < num_agents(); ++j)
    psi += f.col(j).cwiseProduct(beta.col(j + 1));
  return psi;
}

FullGpBackend::Field FullGpBackend::make_field(const Eigen::MatrixXd& dists, double g) {
  Field f;
  f.g = g;
  f.chol = chol_factor(corr_matrix_from_distances(dists, ExpKernel{g}));
  f.logdet = f.chol.log_det();
  f.corr_inv = f.chol.inverse();
  f.inv_one = f.corr_inv.rowwise().sum();
  return f;
}

FullGpBackend FullGpBackend::build(const SiteSet& sites, const Eigen::VectorXd& g) {
  FullGpBackend b;
  b.dists = pairwise_distances(sites);
  b.fields.reserve(g.size());
  for (int j = 0; j < g.size(); ++j) b.fields.push_back(make_field(b.dists, g(j)));
  return b;
}

NngpBackend NngpBackend::build(const SiteSet& sites, int m, const Eigen::VectorXd& g) {
  NngpBackend b;
  b.index = build_neighbor_index(sites, m);
  b.geo = neighbor_distances(b.index, sites);
  b.g.resize(g.size());
  b.coeffs.resize(g.size());
  for (int j = 0; j < g.size(); ++j) {
    b.g[j] = g(j);
    b.coeffs[j] = nngp_coefficients(b.index, b.geo, ExpKernel{g(j)});
  }
  return b;
}

Backend build_backend(const SiteSet& sites, const ChainConfig& cfg, const Eigen::VectorXd& g) {
  if (cfg.backend == BackendKind::FullGp) return FullGpBackend::build(sites, g);
  return NngpBackend::build(sites, cfg.m, g);
}

SynthesisState init_state(const Eigen::VectorXd& y, const AgentForecastSet& forecasts,
                          const PriorConfig& priors) {
  const int n = static_cast<int>(y.size());
  if (n == 0) throw EmptyData("init_state: empty response");
  if (forecasts.n() != n) throw LengthMismatch("init_state: forecasts/response size mismatch");
  const int J = forecasts.num_agents();
  priors.validate(J);

  SynthesisState s;
  s.f = forecasts.a();
  s.beta = priors.beta_bar.transpose().replicate(n, 1);
  double var = 1e-6;
  if (n >= 2) {
    const double mean = y.mean();
    var = (y.array() - mean).square().sum() / static_cast<double>(n - 1);
  }
  s.sigma2 = std::max(var, 1e-6);
  s.tau = Eigen::VectorXd::Constant(J + 1, priors.b_tau / (priors.a_tau + 1.0));
  s.g = Eigen::VectorXd::Constant(J + 1, 0.5 * (priors.g_lo + priors.g_hi));
  return s;
}

void update_factors(SynthesisState& state, const Eigen::VectorXd& y,
                    const AgentForecastSet& forecasts, Rng& rng) {
  if (forecasts.kind() != ForecastKind::Gaussian)
    throw KindMismatch("update_factors: Gaussian forecasts required");
  const int n = state.n();
  const int J = state.num_agents();
  const Eigen::MatrixXd& a = forecasts.a();
  const Eigen::MatrixXd& b = forecasts.b();
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < n; ++i) {
      double resid = y(i) - state.beta(i, 0);
      for (int k = 0; k < J; ++k)
        if (k != j) resid -= state.beta(i, k + 1) * state.f(i, k);
      const ScalarConditional cond =
          factor_conditional(state.beta(i, j + 1), state.sigma2, a(i, j), b(i, j), resid);
      state.f(i, j) = cond.mean + std::sqrt(cond.variance) * rng.normal();
    }
  }
}

GaussianConditional beta_conditional_full(int j, const Eigen::MatrixXd& beta,
                                          const Eigen::MatrixXd& design,
                                          const Eigen::VectorXd& w, const Eigen::VectorXd& t,
                                          double tau_j, double beta_bar_j,
                                          const FullGpBackend::Field& field) {
  const int p = static_cast<int>(beta.cols());
  Eigen::VectorXd resid = t;
  for (int k = 0; k < p; ++k)
    if (k != j) resid -= design.col(k).cwiseProduct(beta.col(k));
  const Eigen::VectorXd lin =
      design.col(j).cwiseProduct(w).cwiseProduct(resid) + (beta_bar_j / tau_j) * field.inv_one;
  Eigen::MatrixXd prec = field.corr_inv / tau_j;
  prec.diagonal() += w.cwiseProduct(design.col(j)).cwiseProduct(design.col(j));
  GaussianConditional cond;
  cond.prec_chol = chol_factor(prec);
  cond.mean = cond.prec_chol.solve(lin);
  return cond;
}

Eigen::VectorXd draw_gaussian(const GaussianConditional& cond, Rng& rng) {
  Eigen::VectorXd z(cond.mean.size());
  for (int i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return cond.mean + cond.prec_chol.transpose_solve(z);
}

void draw_coefficients_full(Eigen::MatrixXd& beta, const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& w, const Eigen::VectorXd& t,
                            const Eigen::VectorXd& tau, const Eigen::VectorXd& beta_bar,
                            const FullGpBackend& backend, Rng& rng) {
  for (int j = 0; j < beta.cols(); ++j) {
    const GaussianConditional cond = beta_conditional_full(
        j, beta, design, w, t, tau(j), beta_bar(j), backend.fields[j]);
    beta.col(j) = draw_gaussian(cond, rng);
  }
}

GaussianConditional beta_conditional_nngp_site(int i, const Eigen::MatrixXd& beta,
                                               const Eigen::MatrixXd& design,
                                               const Eigen::VectorXd& w,
                                               const Eigen::VectorXd& t,
                                               const Eigen::VectorXd& tau,
                                               const Eigen::VectorXd& beta_bar,
                                               const NngpBackend& backend) {
  const int p = static_cast<int>(beta.cols());
  const auto& index = backend.index;
  Eigen::VectorXd gamma(p), m_lin(p);
  for (int j = 0; j < p; ++j) {
    const auto& coeffs = backend.coeffs[j];
    const double tj = tau(j);
    const double bbar = beta_bar(j);
    double gam = 1.0 / (tj * coeffs.F[i]);
    // own conditional term
    double lin = 0.0;
    {
      const auto& nb = index.neighbors[i];
      double pred = 0.0;
      for (int a = 0; a < static_cast<int>(nb.size()); ++a)
        pred += coeffs.B[i](a) * (beta(nb[a], j) - bbar);
      lin += pred / (tj * coeffs.F[i]);
    }
    // terms from sites whose neighbor sets contain i
    for (const auto& d : index.descendants[i]) {
      const double bts = coeffs.B[d.t](d.slot);
      const double ft = tj * coeffs.F[d.t];
      gam += bts * bts / ft;
      double rest = beta(d.t, j) - bbar;
      const auto& nbt = index.neighbors[d.t];
      for (int a = 0; a < static_cast<int>(nbt.size()); ++a)
        if (a != d.slot) rest -= coeffs.B[d.t](a) * (beta(nbt[a], j) - bbar);
      lin += bts * rest / ft;
    }
    gamma(j) = gam;
    m_lin(j) = lin + bbar * gam;
  }
  const Eigen::VectorXd frow = design.row(i);
  Eigen::MatrixXd prec = w(i) * (frow * frow.transpose());
  prec.diagonal() += gamma;
  GaussianConditional cond;
  cond.prec_chol = chol_factor(prec);
  cond.mean = cond.prec_chol.solve(w(i) * t(i) * frow + m_lin);
  return cond;
}

void draw_coefficients_nngp(Eigen::MatrixXd& beta, const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& w, const Eigen::VectorXd& t,
                            const Eigen::VectorXd& tau, const Eigen::VectorXd& beta_bar,
                            const NngpBackend& backend, Rng& rng) {
  for (int k = 0; k < static_cast<int>(backend.index.order.size()); ++k) {
    const int i = backend.index.order[k];
    const GaussianConditional cond =
        beta_conditional_nngp_site(i, beta, design, w, t, tau, beta_bar, backend);
    beta.row(i) = draw_gaussian(cond, rng);
  }
}

namespace {

Eigen::MatrixXd design_with_intercept(const SynthesisState& state) {
  Eigen::MatrixXd design(state.n(), state.num_agents() + 1);
  design.col(0).setOnes();
  design.rightCols(state.num_agents()) = state.f;
  return design;
}

}  // namespace

void update_beta_full(SynthesisState& state, const Eigen::VectorXd& y,
                      const PriorConfig& priors, const FullGpBackend& backend, Rng& rng) {
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(state.n(), 1.0 / state.sigma2);
  draw_coefficients_full(state.beta, design_with_intercept(state), w, y, state.tau,
                         priors.beta_bar, backend, rng);
}

void update_beta_nngp(SynthesisState& state, const Eigen::VectorXd& y,
                      const PriorConfig& priors, const NngpBackend& backend, Rng& rng) {
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(state.n(), 1.0 / state.sigma2);
  draw_coefficients_nngp(state.beta, design_with_intercept(state), w, y, state.tau,
                         priors.beta_bar, backend, rng);
}

double field_quadratic_form(int j, const Eigen::MatrixXd& beta, double beta_bar_j,
                            const Backend& backend) {
  const Eigen::VectorXd delta = (beta.col(j).array() - beta_bar_j).matrix();
  if (const auto* full = std::get_if<FullGpBackend>(&backend)) {
    return full->fields[j].chol.half_solve(delta).squaredNorm();
  }
  const auto& nngp = std::get<NngpBackend>(backend);
  const auto& coeffs = nngp.coeffs[j];
  double qf = 0.0;
  for (int i = 0; i < delta.size(); ++i) {
    const auto& nb = nngp.index.neighbors[i];
    double r = delta(i);
    for (int a = 0; a < static_cast<int>(nb.size()); ++a)
      r -= coeffs.B[i](a) * delta(nb[a]);
    qf += r * r / coeffs.F[i];
  }
  return qf;
}

IgParams tau_conditional(int j, const Eigen::MatrixXd& beta, const PriorConfig& priors,
                         const Backend& backend) {
  const double n = static_cast<double>(beta.rows());
  return {priors.a_tau + n / 2.0,
          priors.b_tau + 0.5 * field_quadratic_form(j, beta, priors.beta_bar(j), backend)};
}

void update_tau(Eigen::VectorXd& tau, const Eigen::MatrixXd& beta, const PriorConfig& priors,
                const Backend& backend, Rng& rng) {
  for (int j = 0; j < tau.size(); ++j) {
    const IgParams p = tau_conditional(j, beta, priors, backend);
    tau(j) = rng.inv_gamma(p.shape, p.rate);
  }
}

namespace {

double reflect_into(double x, double lo, double hi) {
  for (int guard = 0; guard < 1000 && (x < lo || x > hi); ++guard) {
    if (x < lo) x = 2.0 * lo - x;
    if (x > hi) x = 2.0 * hi - x;
  }
  return std::clamp(x, lo, hi);
}

// log full-conditional of g_j up to constants (prior is flat on the support).
double range_log_target_full(const Eigen::VectorXd& delta, double tau,
                             const CholFactor& chol) {
  return -0.5 * chol.log_det() - chol.half_solve(delta).squaredNorm() / (2.0 * tau);
}

double range_log_target_nngp(const Eigen::VectorXd& delta, double tau,
                             const NeighborIndex& index, const NngpCoeffs& coeffs) {
  double lt = 0.0;
  for (int i = 0; i < delta.size(); ++i) {
    const auto& nb = index.neighbors[i];
    double r = delta(i);
    for (int a = 0; a < static_cast<int>(nb.size()); ++a)
      r -= coeffs.B[i](a) * delta(nb[a]);
    lt += -0.5 * std::log(coeffs.F[i]) - r * r / (2.0 * tau * coeffs.F[i]);
  }
  return lt;
}

}  // namespace

bool update_range_mh(int j, const Eigen::MatrixXd& beta, Eigen::VectorXd& g,
                     const Eigen::VectorXd& tau, const PriorConfig& priors, Backend& backend,
                     double mh_step, Rng& rng) {
  const double proposal =
      reflect_into(g(j) + mh_step * rng.normal(), priors.g_lo, priors.g_hi);
  const double u = rng.uniform();
  const Eigen::VectorXd delta = (beta.col(j).array() - priors.beta_bar(j)).matrix();

  if (auto* full = std::get_if<FullGpBackend>(&backend)) {
    auto& field = full->fields[j];
    CholFactor prop_chol;
    try {
      prop_chol = chol_factor(corr_matrix_from_distances(full->dists, ExpKernel{proposal}));
    } catch (const NotPositiveDefinite&) {
      return false;
    }
    const double lt_prop = range_log_target_full(delta, tau(j), prop_chol);
    const double lt_cur = range_log_target_full(delta, tau(j), field.chol);
    if (std::log(u) >= lt_prop - lt_cur) return false;
    field.g = proposal;
    field.chol = std::move(prop_chol);
    field.logdet = field.chol.log_det();
    field.corr_inv = field.chol.inverse();
    field.inv_one = field.corr_inv.rowwise().sum();
    g(j) = proposal;
    return true;
  }

  auto& nngp = std::get<NngpBackend>(backend);
  NngpCoeffs prop_coeffs;
  try {
    prop_coeffs = nngp_coefficients(nngp.index, nngp.geo, ExpKernel{proposal});
  } catch (const NotPositiveDefinite&) {
    return false;
  }
  const double lt_prop = range_log_target_nngp(delta, tau(j), nngp.index, prop_coeffs);
  const double lt_cur = range_log_target_nngp(delta, tau(j), nngp.index, nngp.coeffs[j]);
  if (std::log(u) >= lt_prop - lt_cur) return false;
  nngp.g[j] = proposal;
  nngp.coeffs[j] = std::move(prop_coeffs);
  g(j) = proposal;
  return true;
}

void update_g_mh(SynthesisState& state, const PriorConfig& priors, Backend& backend,
                 const Eigen::VectorXd& mh_steps, Rng& rng,
                 Eigen::Array<bool, Eigen::Dynamic, 1>& accepted) {
  accepted.resize(state.g.size());
  for (int j = 0; j < state.g.size(); ++j)
    accepted(j) =
        update_range_mh(j, state.beta, state.g, state.tau, priors, backend, mh_steps(j), rng);
}

IgParams sigma2_conditional(const SynthesisState& state, const Eigen::VectorXd& y,
                            const PriorConfig& priors) {
  const double ssr = (y - state.linear_predictor()).squaredNorm();
  return {priors.a_sigma + static_cast<double>(state.n()) / 2.0, priors.b_sigma + ssr / 2.0};
}

void update_sigma2(SynthesisState& state, const Eigen::VectorXd& y, const PriorConfig& priors,
                   Rng& rng) {
  const IgParams p = sigma2_conditional(state, y, priors);
  state.sigma2 = rng.inv_gamma(p.shape, p.rate);
}

PosteriorSamples run_chain(const SiteSet& sites, const Eigen::VectorXd& y,
                           const AgentForecastSet& forecasts, const PriorConfig& priors,
                           const ChainConfig& cfg) {
  cfg.validate();
  if (forecasts.kind() != ForecastKind::Gaussian)
    throw KindMismatch("run_chain: Gaussian forecasts required");
  SynthesisState state = init_state(y, forecasts, priors);
  const int num_fields = state.num_agents() + 1;
  Backend backend = build_backend(sites, cfg, state.g);
  Rng rng(cfg.seed);

  const double default_step = 0.1 * (priors.g_hi - priors.g_lo);
  Eigen::VectorXd mh_steps =
      Eigen::VectorXd::Constant(num_fields, cfg.mh_step > 0 ? cfg.mh_step : default_step);
  const double step_lo = 1e-8 * (priors.g_hi - priors.g_lo);
  const double step_hi = 2.0 * (priors.g_hi - priors.g_lo);

  PosteriorSamples out;
  out.draws.reserve(cfg.n_keep);
  out.beta_bar = priors.beta_bar;
  out.kind = ForecastKind::Gaussian;
  Eigen::VectorXd accept_count = Eigen::VectorXd::Zero(num_fields);
  Eigen::Array<bool, Eigen::Dynamic, 1> accepted(num_fields);

  const int total = cfg.n_burn + cfg.n_keep * cfg.thin;
  for (int it = 0; it < total; ++it) {
    try {
      update_factors(state, y, forecasts, rng);
      if (auto* full = std::get_if<FullGpBackend>(&backend))
        update_beta_full(state, y, priors, *full, rng);
      else
        update_beta_nngp(state, y, priors, std::get<NngpBackend>(backend), rng);
      update_tau(state.tau, state.beta, priors, backend, rng);
      update_g_mh(state, priors, backend, mh_steps, rng, accepted);
      update_sigma2(state, y, priors, rng);
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite("iteration " + std::to_string(it) + ": " + e.what());
    }

    if (it < cfg.n_burn) {
      if (cfg.adapt_mh) {
        const double gain = 1.0 / std::pow(it + 1.0, 0.6);
        for (int j = 0; j < num_fields; ++j) {
          const double target = accepted(j) ? 1.0 - 0.35 : -0.35;
          mh_steps(j) = std::clamp(mh_steps(j) * std::exp(gain * target), step_lo, step_hi);
        }
      }
      continue;
    }
    for (int j = 0; j < num_fields; ++j) accept_count(j) += accepted(j) ? 1.0 : 0.0;
    const int post = it - cfg.n_burn;
    if ((post + 1) % cfg.thin == 0) out.draws.push_back(state);
  }
  out.accept_rate = accept_count / static_cast<double>(cfg.n_keep * cfg.thin);
  return out;
}

}  // namespace bsps
