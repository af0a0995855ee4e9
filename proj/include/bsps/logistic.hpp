#pragma once

#include <Eigen/Dense>

#include "bsps/gibbs.hpp"
#include "bsps/polya_gamma.hpp"

namespace bsps {

// State of the binary-response chain: binary latent factors, coefficient
// fields, and the Polya-gamma auxiliaries omega.
struct BinaryState {
  Eigen::MatrixXd f;      // n x J in {0,1}
  Eigen::MatrixXd beta;   // n x (J+1)
  Eigen::VectorXd omega;  // n, positive
  Eigen::VectorXd tau;    // J+1
  Eigen::VectorXd g;      // J+1

  int n() const { return static_cast<int>(beta.rows()); }
  int num_agents() const { return static_cast<int>(f.cols()); }
  Eigen::VectorXd linear_predictor() const;
};

BinaryState init_state_binary(const Eigen::VectorXd& y, const AgentForecastSet& forecasts,
                              const PriorConfig& priors);

// omega_i ~ PG(1, psi_i), independently per site.
void update_omega(BinaryState& state, Rng& rng);

// Collapsed Bernoulli update of each f_ji from Ber(a^(f)_ji) with the
// logistic likelihood ratio L_ji between f_ji = 0 and f_ji = 1.
void update_factor_bernoulli(BinaryState& state, const Eigen::VectorXd& y,
                             const AgentForecastSet& forecasts, Rng& rng);
// Posterior factor probability for one cell, exposed for verification.
double bernoulli_factor_probability(double a_ji, double beta_ji, double psi_without,
                                    double y_i);

// beta_j | omega draw; the augmented likelihood at site i has precision
// weight omega_i and target (y_i - 1/2) / omega_i.
void update_beta_logistic(BinaryState& state, const Eigen::VectorXd& y,
                          const PriorConfig& priors, const Backend& backend, Rng& rng);

PosteriorSamples run_chain_binary(const SiteSet& sites, const Eigen::VectorXd& y,
                                  const AgentForecastSet& forecasts, const PriorConfig& priors,
                                  const ChainConfig& cfg);

// The tau/g steps are the gibbs-module functions themselves, not copies.
TauUpdateFn binary_tau_update_fn();
RangeUpdateFn binary_range_update_fn();

}  // namespace bsps
