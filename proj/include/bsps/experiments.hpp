#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bsps/agents.hpp"
#include "bsps/gibbs.hpp"
#include "bsps/predict.hpp"
#include "bsps/sites.hpp"

namespace bsps {

// Piecewise-quadratic toy process on [-1,1]^2 with two regions split at
// s1 = 0; train and test share one joint realization of the latent surfaces.
struct ToyDataset {
  SiteSet train_sites;
  SiteSet test_sites;
  Eigen::MatrixXd x_train, x_test;  // n x 2 covariates (x1, x2)
  Eigen::VectorXd y_train, y_test;
  Eigen::VectorXd w_train, w_test;  // latent spatial effect
  std::vector<bool> region1_train, region1_test;  // s1 <= 0

  static constexpr int kTrain = 300;
  static constexpr int kTest = 200;
};

ToyDataset simulate_toy(std::uint64_t seed);

// Friedman-style processes on [0,1]^2; which = 1 or 2, p >= 5 covariates.
struct ScenarioDataset {
  int which = 1;
  int p = 5;
  SiteSet train_sites;
  SiteSet test_sites;
  Eigen::MatrixXd x_train, x_test;  // n x p
  Eigen::VectorXd y_train, y_test;
  Eigen::VectorXd w_train, w_test;

  static constexpr int kTrain = 300;
  static constexpr int kTest = 100;
};

ScenarioDataset simulate_scenario(int which, int p, std::uint64_t seed);

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

struct CoverageLength {
  double cp;  // percent
  double al;
};

CoverageLength coverage_and_length(const PredictiveSummary& summary,
                                   const Eigen::VectorXd& truth);

// Mann-Whitney AUC with tie averaging; labels must contain both classes.
double roc_auc(const Eigen::VectorXd& probs, const Eigen::VectorXd& labels);

// ---------------------------------------------------------------------------
// Replication runner

struct ExperimentSpec {
  std::string name = "toy";  // toy | scenario1 | scenario2
  int p = 5;                 // scenario covariate count
  ChainConfig chain;         // defaults below switch to NNGP(10)
  double a_sigma = 0.1, b_sigma = 0.1, a_tau = 0.1, b_tau = 0.1;
  double alpha = 0.05;
  bool run_mcmc = true;
  bool run_vb = true;
  bool run_bma = true;
  bool run_sa = true;
  bool run_agents = true;
  int vb_grid_size = 20;
  double vb_tol = 1e-5;
  int vb_max_iter = 200;
  int vb_warmstart = 200;  // short-chain draws seeding the VB state

  static ExperimentSpec defaults(const std::string& name);
};

struct MethodMetrics {
  std::string method;
  double mse = 0.0;
  bool has_interval = false;
  double cp = 0.0;
  double al = 0.0;
};

struct ReplicationResult {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::vector<MethodMetrics> methods;
  // pooled coverage bookkeeping for the synthesis intervals
  int covered = 0;
  int total = 0;
  Eigen::VectorXd bma_weights;
};

struct MetricsReport {
  std::vector<std::string> methods;
  std::vector<ReplicationResult> replications;
  int n_failed = 0;

  std::vector<double> mse_values(const std::string& method) const;
  double median_mse(const std::string& method) const;
  // empirical deciles 10%..90% of per-replication MSE
  Eigen::VectorXd mse_deciles(const std::string& method) const;
  double mean_cp(const std::string& method) const;
  double mean_al(const std::string& method) const;
  double median_al(const std::string& method) const;
};

// One fresh dataset per replication (seed = base_seed + rep); deterministic
// and independent of the thread count.
MetricsReport run_replications(const ExperimentSpec& spec, int n_reps,
                               std::uint64_t base_seed, int threads);

// Single-replication pipeline, exposed for the acceptance suite.
ReplicationResult run_one_replication(const ExperimentSpec& spec, std::uint64_t seed);

}  // namespace bsps
