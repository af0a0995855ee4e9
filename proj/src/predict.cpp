#include "bsps/predict.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>
#include <vector>

#include "bsps/errors.hpp"
#include "bsps/mathutil.hpp"
#include "bsps/spatial.hpp"

namespace bsps {

PredictiveDraws predictive_draws(const PosteriorSamples& samples, const SiteSet& train_sites,
                                 const SiteSet& new_sites,
                                 const AgentForecastSet& forecasts_at_new, std::uint64_t seed,
                                 int threads) {
  const int n_draws = static_cast<int>(samples.draws.size());
  if (n_draws == 0) throw EmptyData("predictive_draws: no posterior draws");
  const int n = train_sites.n();
  const int n_new = new_sites.n();
  const int J = samples.draws[0].num_agents();
  if (forecasts_at_new.n() != n_new)
    throw LengthMismatch("predictive_draws: forecasts do not cover the new sites");
  if (forecasts_at_new.num_agents() != J)
    throw ArtifactMismatch("predictive_draws: agent count differs from the fit");
  const bool gaussian = samples.kind == ForecastKind::Gaussian;
  if (gaussian != (forecasts_at_new.kind() == ForecastKind::Gaussian))
    throw KindMismatch("predictive_draws: forecast kind differs from the fit");

  const Eigen::MatrixXd dists = pairwise_distances(train_sites);
  Eigen::MatrixXd cross_dists(n, n_new);
  for (int s = 0; s < n_new; ++s) {
    const Eigen::Vector2d p = new_sites.site(s);
    for (int i = 0; i < n; ++i) cross_dists(i, s) = train_sites.distance_to(i, p);
  }

  // draws grouped by distinct accepted range value, per field; each group's
  // kriging factorization is built once and discarded
  struct Group {
    int field;
    double g;
    std::vector<int> draws;
  };
  std::vector<Group> groups;
  for (int j = 0; j <= J; ++j) {
    std::map<double, int> ids;
    for (int d = 0; d < n_draws; ++d) {
      const double g = samples.draws[d].g(j);
      auto it = ids.find(g);
      if (it == ids.end()) {
        groups.push_back({j, g, {}});
        it = ids.emplace(g, static_cast<int>(groups.size()) - 1).first;
      }
      groups[it->second].draws.push_back(d);
    }
  }

  // kriged mean and sd of each field at every new site, per draw
  std::vector<Eigen::MatrixXd> beta_mean(n_draws, Eigen::MatrixXd(J + 1, n_new));
  std::vector<Eigen::MatrixXd> beta_sd(n_draws, Eigen::MatrixXd(J + 1, n_new));
  auto run_group = [&](const Group& group) {
    const CholFactor chol =
        chol_factor(corr_matrix_from_distances(dists, ExpKernel{group.g}));
    const Eigen::MatrixXd w =
        chol.half_solve_matrix((-cross_dists / group.g).array().exp().matrix());
    const Eigen::VectorXd q = w.colwise().squaredNorm();
    const double bbar = samples.beta_bar(group.field);
    for (int d : group.draws) {
      const SynthesisState& st = samples.draws[d];
      const Eigen::VectorXd u =
          chol.half_solve((st.beta.col(group.field).array() - bbar).matrix());
      beta_mean[d].row(group.field) = (w.transpose() * u).array() + bbar;
      beta_sd[d].row(group.field) =
          (st.tau(group.field) * (1.0 - q.array()).max(0.0)).sqrt();
    }
  };

  PredictiveDraws out;
  out.kind = samples.kind;
  out.values.resize(n_draws, n_new);
  const Rng base(seed);
  auto run_draw = [&](int d) {
    const SynthesisState& st = samples.draws[d];
    Rng rng = base.spawn(static_cast<std::uint64_t>(d));
    const double sigma = gaussian ? std::sqrt(st.sigma2) : 0.0;
    for (int s = 0; s < n_new; ++s) {
      double psi = 0.0;
      Eigen::VectorXd fdraw(J);
      for (int j = 0; j < J; ++j) {
        if (gaussian)
          fdraw(j) = forecasts_at_new.a()(s, j) +
                     std::sqrt(forecasts_at_new.b()(s, j)) * rng.normal();
        else
          fdraw(j) = rng.bernoulli(forecasts_at_new.a()(s, j)) ? 1.0 : 0.0;
      }
      for (int j = 0; j <= J; ++j) {
        const double beta_new = beta_mean[d](j, s) + beta_sd[d](j, s) * rng.normal();
        psi += beta_new * (j == 0 ? 1.0 : fdraw(j - 1));
      }
      out.values(d, s) = gaussian ? psi + sigma * rng.normal() : expit(psi);
    }
  };

  const int n_threads = std::max(1, std::min(threads, n_draws));
  if (n_threads == 1) {
    for (const Group& group : groups) run_group(group);
    for (int d = 0; d < n_draws; ++d) run_draw(d);
  } else {
    const int n_groups = static_cast<int>(groups.size());
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        for (int k = t; k < n_groups; k += n_threads) run_group(groups[k]);
      });
    for (auto& th : pool) th.join();
    pool.clear();
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        for (int d = t; d < n_draws; d += n_threads) run_draw(d);
      });
    for (auto& th : pool) th.join();
  }

  out.beta_at_new = Eigen::MatrixXd::Zero(J + 1, n_new);
  for (int d = 0; d < n_draws; ++d) out.beta_at_new += beta_mean[d];
  out.beta_at_new /= static_cast<double>(n_draws);
  return out;
}

double quantile_type7(const Eigen::VectorXd& values, double prob) {
  std::vector<double> v(values.data(), values.data() + values.size());
  std::sort(v.begin(), v.end());
  const int n = static_cast<int>(v.size());
  if (n == 1) return v[0];
  const double h = (n - 1) * prob;
  const int lo = std::min(static_cast<int>(std::floor(h)), n - 2);
  const double frac = h - lo;
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

PredictiveSummary summarize(const PredictiveDraws& draws, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("summarize: alpha must be in (0,1)");
  if (draws.values.rows() < 2) throw LengthMismatch("summarize: need at least 2 draws");
  const int n_new = static_cast<int>(draws.values.cols());
  PredictiveSummary s;
  s.alpha = alpha;
  s.mean.resize(n_new);
  s.lower.resize(n_new);
  s.upper.resize(n_new);
  for (int i = 0; i < n_new; ++i) {
    const Eigen::VectorXd col = draws.values.col(i);
    s.mean(i) = col.mean();
    s.lower(i) = quantile_type7(col, alpha / 2.0);
    s.upper(i) = quantile_type7(col, 1.0 - alpha / 2.0);
  }
  return s;
}

Eigen::MatrixXd posterior_mean_beta(const PosteriorSamples& samples) {
  if (samples.draws.empty()) throw EmptyData("posterior_mean_beta: no draws");
  Eigen::MatrixXd mean = samples.draws[0].beta;
  for (std::size_t d = 1; d < samples.draws.size(); ++d) mean += samples.draws[d].beta;
  return mean / static_cast<double>(samples.draws.size());
}

Eigen::VectorXd weight_ratio_map(const PosteriorSamples& samples, int agent_j, int agent_k) {
  if (samples.draws.empty()) throw EmptyData("weight_ratio_map: no draws");
  const int J = samples.draws[0].num_agents();
  if (agent_j == agent_k || agent_j < 1 || agent_k < 1 || agent_j > J || agent_k > J)
    throw ConfigError("weight_ratio_map: need distinct agent indices in 1..J");
  const Eigen::MatrixXd mean = posterior_mean_beta(samples);
  const int n = static_cast<int>(mean.rows());
  Eigen::VectorXd ratio(n);
  for (int i = 0; i < n; ++i) {
    const double aj = std::abs(mean(i, agent_j));
    const double ak = std::abs(mean(i, agent_k));
    ratio(i) = (aj == 0.0 && ak == 0.0) ? 0.5 : aj / (aj + ak);
  }
  return ratio;
}

}  // namespace bsps
