#include "bsps/agents.hpp"

#include <algorithm>
#include <cmath>

#include "bsps/errors.hpp"

namespace bsps {

AgentForecastSet AgentForecastSet::gaussian(Eigen::MatrixXd a, Eigen::MatrixXd b) {
  if (a.rows() == 0 || a.cols() == 0) throw EmptyData("forecasts: empty");
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw LengthMismatch("forecasts: mean/variance shape mismatch");
  if (!a.allFinite() || !b.allFinite())
    throw SchemaError("forecasts: non-finite entry");
  if ((b.array() <= 0.0).any())
    throw SchemaError("forecasts: non-positive predictive variance");
  return AgentForecastSet(ForecastKind::Gaussian, std::move(a), std::move(b));
}

AgentForecastSet AgentForecastSet::bernoulli(Eigen::MatrixXd a) {
  if (a.rows() == 0 || a.cols() == 0) throw EmptyData("forecasts: empty");
  if (!a.allFinite()) throw SchemaError("forecasts: non-finite entry");
  if ((a.array() < 0.0).any() || (a.array() > 1.0).any())
    throw SchemaError("forecasts: probability outside [0,1]");
  a = a.array().max(1e-9).min(1.0 - 1e-9);
  return AgentForecastSet(ForecastKind::Bernoulli, std::move(a), Eigen::MatrixXd());
}

OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(X.cols());
  if (y.size() != n) throw LengthMismatch("fit_ols: rows(X) != len(y)");
  if (n < k + 1) throw RankDeficient("fit_ols: need at least cols+1 rows");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < k) throw RankDeficient("fit_ols: design not of full column rank");
  OlsFit fit;
  fit.coef = qr.solve(y);
  fit.n_obs = n;
  fit.k = k;
  fit.rss = (y - X * fit.coef).squaredNorm();
  fit.s2 = fit.rss / static_cast<double>(n - k);
  const Eigen::MatrixXd xtx = X.transpose() * X;
  fit.xtx_inv = xtx.llt().solve(Eigen::MatrixXd::Identity(k, k));
  return fit;
}

double bic(const OlsFit& fit, const Eigen::MatrixXd& X_eval, const Eigen::VectorXd& y_eval) {
  if (X_eval.rows() != y_eval.size()) throw LengthMismatch("bic: rows(X) != len(y)");
  const double n = static_cast<double>(y_eval.size());
  const double rss = (y_eval - X_eval * fit.coef).squaredNorm();
  return n * std::log(rss / n) + (fit.k + 1) * std::log(n);
}

Eigen::VectorXd bma_weights(const std::vector<double>& bics) {
  if (bics.empty()) throw EmptyData("bma_weights: no BIC values");
  for (double b : bics)
    if (!std::isfinite(b)) throw SchemaError("bma_weights: non-finite BIC");
  const double lo = *std::min_element(bics.begin(), bics.end());
  Eigen::VectorXd w(bics.size());
  for (int j = 0; j < w.size(); ++j) w(j) = std::exp(-(bics[j] - lo) / 2.0);
  return w / w.sum();
}

CombinedForecast synthesize_bma(const AgentForecastSet& forecasts,
                                const Eigen::VectorXd& weights) {
  if (forecasts.kind() != ForecastKind::Gaussian)
    throw KindMismatch("synthesize_bma: Gaussian forecasts required");
  if (weights.size() != forecasts.num_agents())
    throw LengthMismatch("synthesize_bma: weight count != J");
  CombinedForecast out;
  out.mean = forecasts.a() * weights;
  const Eigen::VectorXd second =
      (forecasts.b() + forecasts.a().cwiseProduct(forecasts.a())) * weights;
  out.variance = second - out.mean.cwiseProduct(out.mean);
  return out;
}

Eigen::VectorXd synthesize_sa(const AgentForecastSet& forecasts) {
  const int J = forecasts.num_agents();
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(J, 1.0 / J);
  return synthesize_bma(forecasts, w).mean;
}

Eigen::VectorXd OlsQuadraticAgent::design_row(double x1, double x2) {
  Eigen::VectorXd row(5);
  row << 1.0, x1, x1 * x1, x2, x2 * x2;
  return row;
}

OlsQuadraticAgent OlsQuadraticAgent::fit_on(const Eigen::VectorXd& x1,
                                            const Eigen::VectorXd& x2,
                                            const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  if (n < 6) throw RankDeficient("OlsQuadraticAgent: need at least 6 observations");
  Eigen::MatrixXd X(n, 5);
  for (int i = 0; i < n; ++i) X.row(i) = design_row(x1(i), x2(i));
  return OlsQuadraticAgent{fit_ols(X, y)};
}

void OlsQuadraticAgent::predict(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                                Eigen::VectorXd& mean_out, Eigen::VectorXd& var_out) const {
  const int n = static_cast<int>(x1.size());
  mean_out.resize(n);
  var_out.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd row = design_row(x1(i), x2(i));
    mean_out(i) = fit.predict_mean(row);
    var_out(i) = fit.predict_variance(row);
  }
}

}  // namespace bsps
