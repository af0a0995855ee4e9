#include "bsps/logistic.hpp"

#include <cmath>
#include <string>

#include "bsps/errors.hpp"
#include "bsps/mathutil.hpp"

namespace bsps {

Eigen::VectorXd BinaryState::linear_predictor() const {
  Eigen::VectorXd psi = beta.col(0);
  for (int j = 0; j < num_agents(); ++j)
    psi += f.col(j).cwiseProduct(beta.col(j + 1));
  return psi;
}

BinaryState init_state_binary(const Eigen::VectorXd& y, const AgentForecastSet& forecasts,
                              const PriorConfig& priors) {
  const int n = static_cast<int>(y.size());
  if (n == 0) throw EmptyData("init_state_binary: empty response");
  if (forecasts.n() != n)
    throw LengthMismatch("init_state_binary: forecasts/response size mismatch");
  for (int i = 0; i < n; ++i)
    if (y(i) != 0.0 && y(i) != 1.0)
      throw SchemaError("init_state_binary: response must be 0/1, got " +
                        std::to_string(y(i)) + " at row " + std::to_string(i));
  const int J = forecasts.num_agents();
  priors.validate(J);

  BinaryState s;
  s.f = (forecasts.a().array() >= 0.5).cast<double>();
  s.beta = priors.beta_bar.transpose().replicate(n, 1);
  s.omega = Eigen::VectorXd::Constant(n, 0.25);  // PG(1,0) mean
  s.tau = Eigen::VectorXd::Constant(J + 1, priors.b_tau / (priors.a_tau + 1.0));
  s.g = Eigen::VectorXd::Constant(J + 1, 0.5 * (priors.g_lo + priors.g_hi));
  return s;
}

void update_omega(BinaryState& state, Rng& rng) {
  const Eigen::VectorXd psi = state.linear_predictor();
  for (int i = 0; i < state.n(); ++i) state.omega(i) = sample_pg1(psi(i), rng);
}

double bernoulli_factor_probability(double a_ji, double beta_ji, double psi_without,
                                    double y_i) {
  const double psi0 = psi_without;
  const double psi1 = psi_without + beta_ji;
  const double log_l = (psi0 - psi1) * y_i + log1pexp(psi1) - log1pexp(psi0);
  // a / (a + (1-a) L), computed on the logit scale
  return expit(std::log(a_ji / (1.0 - a_ji)) - log_l);
}

void update_factor_bernoulli(BinaryState& state, const Eigen::VectorXd& y,
                             const AgentForecastSet& forecasts, Rng& rng) {
  if (forecasts.kind() != ForecastKind::Bernoulli)
    throw KindMismatch("update_factor_bernoulli: Bernoulli forecasts required");
  const int n = state.n();
  const int J = state.num_agents();
  const Eigen::MatrixXd& a = forecasts.a();
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < n; ++i) {
      double psi_without = state.beta(i, 0);
      for (int k = 0; k < J; ++k)
        if (k != j) psi_without += state.beta(i, k + 1) * state.f(i, k);
      const double p = bernoulli_factor_probability(a(i, j), state.beta(i, j + 1),
                                                    psi_without, y(i));
      state.f(i, j) = rng.bernoulli(p) ? 1.0 : 0.0;
    }
  }
}

void update_beta_logistic(BinaryState& state, const Eigen::VectorXd& y,
                          const PriorConfig& priors, const Backend& backend, Rng& rng) {
  const int n = state.n();
  Eigen::MatrixXd design(n, state.num_agents() + 1);
  design.col(0).setOnes();
  design.rightCols(state.num_agents()) = state.f;
  const Eigen::VectorXd w = state.omega;
  const Eigen::VectorXd t =
      (y.array() - 0.5) / state.omega.array();  // w .* t = y - 1/2
  if (const auto* full = std::get_if<FullGpBackend>(&backend))
    draw_coefficients_full(state.beta, design, w, t, state.tau, priors.beta_bar, *full, rng);
  else
    draw_coefficients_nngp(state.beta, design, w, t, state.tau, priors.beta_bar,
                           std::get<NngpBackend>(backend), rng);
}

PosteriorSamples run_chain_binary(const SiteSet& sites, const Eigen::VectorXd& y,
                                  const AgentForecastSet& forecasts, const PriorConfig& priors,
                                  const ChainConfig& cfg) {
  cfg.validate();
  BinaryState state = init_state_binary(y, forecasts, priors);
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
  out.kind = ForecastKind::Bernoulli;
  Eigen::VectorXd accept_count = Eigen::VectorXd::Zero(num_fields);
  Eigen::Array<bool, Eigen::Dynamic, 1> accepted(num_fields);

  const int total = cfg.n_burn + cfg.n_keep * cfg.thin;
  for (int it = 0; it < total; ++it) {
    try {
      // The collapsed factor draw marginalizes omega, so omega is refreshed
      // before the coefficient update conditions on it.
      update_factor_bernoulli(state, y, forecasts, rng);
      update_omega(state, rng);
      update_beta_logistic(state, y, priors, backend, rng);
      update_tau(state.tau, state.beta, priors, backend, rng);
      for (int j = 0; j < num_fields; ++j)
        accepted(j) = update_range_mh(j, state.beta, state.g, state.tau, priors, backend,
                                      mh_steps(j), rng);
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite("iteration " + std::to_string(it) + ": " + e.what());
    } catch (const SamplerStall& e) {
      throw SamplerStall("iteration " + std::to_string(it) + ": " + e.what());
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
    if ((post + 1) % cfg.thin == 0) {
      SynthesisState draw;
      draw.f = state.f;
      draw.beta = state.beta;
      draw.sigma2 = 1.0;  // unused for binary
      draw.tau = state.tau;
      draw.g = state.g;
      out.draws.push_back(std::move(draw));
    }
  }
  out.accept_rate = accept_count / static_cast<double>(cfg.n_keep * cfg.thin);
  return out;
}

TauUpdateFn binary_tau_update_fn() { return &update_tau; }
RangeUpdateFn binary_range_update_fn() { return &update_range_mh; }

}  // namespace bsps
