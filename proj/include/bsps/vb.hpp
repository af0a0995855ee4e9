#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bsps/agents.hpp"
#include "bsps/gibbs.hpp"
#include "bsps/sites.hpp"

namespace bsps {

// Discrete support for the spatial range parameters.
struct RangeGrid {
  Eigen::VectorXd eta;  // strictly increasing, positive

  static RangeGrid log_spaced(double lo, double hi, int num_points);
  int size() const { return static_cast<int>(eta.size()); }
  void validate(const PriorConfig& priors) const;
};

// Per-grid-point precomputations shared by all sweeps.
struct VbWorkspace {
  std::vector<Eigen::MatrixXd> corr_inv;  // G(eta_l)^{-1}
  std::vector<double> logdet;             // log|G(eta_l)|
};

VbWorkspace vb_precompute(const SiteSet& sites, const RangeGrid& grid);

// All variational parameters. The intercept is field 0 with a point-mass
// factor at 1; factor parameters (m, s2) cover agents 1..J only.
struct VariationalState {
  Eigen::MatrixXd m;   // n x J factor means
  Eigen::MatrixXd s2;  // n x J factor variances
  std::vector<Eigen::VectorXd> mu;     // J+1 coefficient means
  std::vector<Eigen::MatrixXd> Sigma;  // J+1 coefficient covariances
  std::vector<double> logdet_Sigma;    // J+1
  Eigen::VectorXd a_tau, b_tau;        // J+1
  Eigen::MatrixXd p;                   // (J+1) x L range probabilities
  double a_sigma = 0.0, b_sigma = 0.0;

  int n() const { return static_cast<int>(mu[0].size()); }
  int num_agents() const { return static_cast<int>(m.cols()); }
};

VariationalState vb_init(const Eigen::VectorXd& y, const AgentForecastSet& forecasts,
                         const PriorConfig& priors, const RangeGrid& grid);

// Warm start from a short MCMC run: moments of the retained draws seed the
// variational parameters.
VariationalState vb_warmstart_state(const PosteriorSamples& samples,
                                    const PriorConfig& priors, const RangeGrid& grid);

// One full coordinate sweep in the fixed order: factors, coefficient fields,
// tau, range probabilities, noise variance; Gauss-Seidel within each block.
void vb_sweep(VariationalState& state, const Eigen::VectorXd& y,
              const AgentForecastSet& forecasts, const PriorConfig& priors,
              const RangeGrid& grid, const VbWorkspace& ws);

// Evidence lower bound of the current state.
double vb_elbo(const VariationalState& state, const Eigen::VectorXd& y,
               const AgentForecastSet& forecasts, const PriorConfig& priors,
               const RangeGrid& grid, const VbWorkspace& ws);

struct VbResult {
  VariationalState state;
  int iterations = 0;
  bool converged = false;
  std::vector<double> elbo_trace;  // one value per sweep
};

// Sweeps until the max relative change across (m, mu, a/b ratios) falls
// below tol or max_iter is hit; non-convergence is flagged, not thrown.
VbResult run_vb(const SiteSet& sites, const Eigen::VectorXd& y,
                const AgentForecastSet& forecasts, const PriorConfig& priors,
                const RangeGrid& grid, double tol, int max_iter,
                const VariationalState* init = nullptr);

// Variational coefficient means kriged to the new sites under the
// grid-expected kernel, one row per field.
Eigen::MatrixXd vb_kriged_coefficients(const std::vector<Eigen::VectorXd>& mu,
                                       const Eigen::MatrixXd& p,
                                       const Eigen::VectorXd& beta_bar,
                                       const SiteSet& train_sites, const SiteSet& new_sites,
                                       const RangeGrid& grid, const VbWorkspace& ws);

// Plug-in point prediction: each coefficient field is kriged to the new sites
// under the grid-expected kernel, then combined with the agent means.
Eigen::VectorXd vb_point_predict(const VariationalState& state, const SiteSet& train_sites,
                                 const SiteSet& new_sites,
                                 const AgentForecastSet& forecasts_at_new,
                                 const RangeGrid& grid, const PriorConfig& priors,
                                 const VbWorkspace& ws);

}  // namespace bsps
