#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "bsps/agents.hpp"
#include "bsps/gibbs.hpp"
#include "bsps/sites.hpp"

namespace bsps {

// Posterior predictive draws at new sites, one row per retained posterior
// draw. Gaussian responses store y draws; binary responses store the
// Bernoulli success probability expit(psi).
struct PredictiveDraws {
  ForecastKind kind = ForecastKind::Gaussian;
  Eigen::MatrixXd values;       // n_draws x n_new
  Eigen::MatrixXd beta_at_new;  // (J+1) x n_new posterior means of the fields
};

// Coefficient fields are kriged through the full-GP conditional regardless
// of the fitting backend; factors are drawn from the agents' forecasts.
PredictiveDraws predictive_draws(const PosteriorSamples& samples, const SiteSet& train_sites,
                                 const SiteSet& new_sites,
                                 const AgentForecastSet& forecasts_at_new, std::uint64_t seed,
                                 int threads = 1);

struct PredictiveSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double alpha = 0.05;
};

// Mean plus empirical (alpha/2, 1-alpha/2) quantiles, type-7 interpolation.
PredictiveSummary summarize(const PredictiveDraws& draws, double alpha);

double quantile_type7(const Eigen::VectorXd& values, double prob);

// Per-train-site ratio |bhat_j| / (|bhat_j| + |bhat_k|) of posterior-mean
// coefficients for agents j and k (1-based agent indices); 0.5 where both
// means are exactly zero.
Eigen::VectorXd weight_ratio_map(const PosteriorSamples& samples, int agent_j, int agent_k);

// Posterior mean of each coefficient field at the training sites.
Eigen::MatrixXd posterior_mean_beta(const PosteriorSamples& samples);

}  // namespace bsps
