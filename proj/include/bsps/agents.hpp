#pragma once

#include <Eigen/Dense>
#include <vector>

namespace bsps {

enum class ForecastKind { Gaussian, Bernoulli };

// Per-site, per-agent predictive distributions: Gaussian mean/variance or
// Bernoulli probability. Rectangular, kind-homogeneous.
class AgentForecastSet {
 public:
  // a, b are n x J; every b entry must be positive and finite.
  static AgentForecastSet gaussian(Eigen::MatrixXd a, Eigen::MatrixXd b);
  // a is n x J with entries in [0,1], clamped to [1e-9, 1-1e-9].
  static AgentForecastSet bernoulli(Eigen::MatrixXd a);

  ForecastKind kind() const { return kind_; }
  int n() const { return static_cast<int>(a_.rows()); }
  int num_agents() const { return static_cast<int>(a_.cols()); }
  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::MatrixXd& b() const { return b_; }

 private:
  AgentForecastSet(ForecastKind kind, Eigen::MatrixXd a, Eigen::MatrixXd b)
      : kind_(kind), a_(std::move(a)), b_(std::move(b)) {}
  ForecastKind kind_;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
};

// Ordinary least squares with the standard frequentist predictive
// distribution N(x'coef, s2 * (1 + x' (X'X)^{-1} x)).
struct OlsFit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd xtx_inv;
  double s2 = 0.0;   // RSS / (n - k)
  double rss = 0.0;  // on the fitting data
  int n_obs = 0;
  int k = 0;  // number of coefficients

  double predict_mean(const Eigen::VectorXd& x) const { return coef.dot(x); }
  double predict_variance(const Eigen::VectorXd& x) const {
    return s2 * (1.0 + x.dot(xtx_inv * x));
  }
};

// Throws RankDeficient when X'X is not invertible or rows < cols + 1.
OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Gaussian profile BIC on the given evaluation data:
// n ln(RSS/n) + (k+1) ln(n), counting the variance as one parameter.
double bic(const OlsFit& fit, const Eigen::MatrixXd& X_eval, const Eigen::VectorXd& y_eval);

// w_j proportional to exp(-(BIC_j - min BIC)/2), normalized to sum 1.
Eigen::VectorXd bma_weights(const std::vector<double>& bics);

struct CombinedForecast {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // mixture variance
};

// Mixture moments under the given weights; Gaussian forecasts only.
CombinedForecast synthesize_bma(const AgentForecastSet& forecasts,
                                const Eigen::VectorXd& weights);

// Equal-weight mean; identical to synthesize_bma with uniform weights.
Eigen::VectorXd synthesize_sa(const AgentForecastSet& forecasts);

// Quadratic regression agent y = b0 + b1 x1 + b2 x1^2 + b3 x2 + b4 x2^2,
// fitted on one region's subsample, predicting at any site.
struct OlsQuadraticAgent {
  OlsFit fit;

  static Eigen::VectorXd design_row(double x1, double x2);
  static OlsQuadraticAgent fit_on(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                                  const Eigen::VectorXd& y);
  // Predictive mean/variance at each row of (x1, x2).
  void predict(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
               Eigen::VectorXd& mean_out, Eigen::VectorXd& var_out) const;
};

}  // namespace bsps
