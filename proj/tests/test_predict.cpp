#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bsps/errors.hpp"
#include "bsps/mathutil.hpp"
#include "bsps/predict.hpp"
#include "support/helpers.hpp"

using namespace bsps;
using namespace bsps::testing;

namespace {

// Posterior stub with hand-set draws.
PosteriorSamples manual_samples(int n, int num_agents, int n_draws,
                                const Eigen::VectorXd& beta_bar) {
  PosteriorSamples s;
  s.kind = ForecastKind::Gaussian;
  s.beta_bar = beta_bar;
  s.accept_rate = Eigen::VectorXd::Constant(num_agents + 1, 0.4);
  s.draws.resize(n_draws);
  for (auto& d : s.draws) {
    d.f = Eigen::MatrixXd::Zero(n, num_agents);
    d.beta = Eigen::MatrixXd::Zero(n, num_agents + 1);
    d.sigma2 = 1.0;
    d.tau = Eigen::VectorXd::Ones(num_agents + 1);
    d.g = Eigen::VectorXd::Constant(num_agents + 1, 0.5);
  }
  return s;
}

}  // namespace

TEST_CASE("quantile type 7 and summarize") {
  Eigen::VectorXd v(100);
  for (int i = 0; i < 100; ++i) v(i) = i + 1;
  CHECK(quantile_type7(v, 0.025) == doctest::Approx(3.475));
  CHECK(quantile_type7(v, 0.975) == doctest::Approx(97.525));
  CHECK(quantile_type7(v, 0.0) == doctest::Approx(1.0));
  CHECK(quantile_type7(v, 1.0) == doctest::Approx(100.0));

  PredictiveDraws draws;
  draws.kind = ForecastKind::Gaussian;
  draws.values.resize(100, 2);
  draws.values.col(0) = v;
  draws.values.col(1).setConstant(7.0);
  const PredictiveSummary s = summarize(draws, 0.05);
  CHECK(s.mean(0) == doctest::Approx(50.5));
  CHECK(s.lower(0) == doctest::Approx(3.475));
  CHECK(s.upper(0) == doctest::Approx(97.525));
  CHECK(s.mean(1) == doctest::Approx(7.0));
  CHECK(s.lower(1) == doctest::Approx(7.0));
  CHECK(s.upper(1) == doctest::Approx(7.0));
  CHECK(s.lower(0) <= s.upper(0));

  // symmetric draws center near zero
  Eigen::VectorXd sym(4);
  sym << -2, -1, 1, 2;
  PredictiveDraws d2;
  d2.values.resize(4, 1);
  d2.values.col(0) = sym;
  CHECK(summarize(d2, 0.5).mean(0) == doctest::Approx(0.0));

  CHECK_THROWS_AS(summarize(d2, 1.0), ConfigError);
  PredictiveDraws single;
  single.values.resize(1, 1);
  single.values(0, 0) = 1.0;
  CHECK_THROWS_AS(summarize(single, 0.05), LengthMismatch);
}

TEST_CASE("weight ratio map") {
  Eigen::VectorXd bbar(3);
  bbar << 0, 0.5, 0.5;
  PosteriorSamples s = manual_samples(2, 2, 4, bbar);
  // posterior means: site 0 -> (0.3, -0.1); site 1 -> (0, 0)
  for (auto& d : s.draws) {
    d.beta(0, 1) = 0.3;
    d.beta(0, 2) = -0.1;
  }
  const Eigen::VectorXd ratio = weight_ratio_map(s, 1, 2);
  CHECK(ratio(0) == doctest::Approx(0.75));
  CHECK(ratio(1) == doctest::Approx(0.5));  // both exactly zero

  // equal nonzero means give 1/2; zero competitor gives 1
  for (auto& d : s.draws) {
    d.beta(1, 1) = -0.4;
    d.beta(1, 2) = 0.4;
  }
  const Eigen::VectorXd r2 = weight_ratio_map(s, 1, 2);
  CHECK(r2(1) == doctest::Approx(0.5));
  for (auto& d : s.draws) d.beta(1, 2) = 0.0;
  const Eigen::VectorXd r3 = weight_ratio_map(s, 1, 2);
  CHECK(r3(1) == doctest::Approx(1.0));

  CHECK_THROWS_AS(weight_ratio_map(s, 1, 1), ConfigError);
  CHECK_THROWS_AS(weight_ratio_map(s, 0, 1), ConfigError);
}

TEST_CASE("predictive draws: training site with point-mass agents and zero noise") {
  Rng rng(1);
  const int n = 8, J = 1;
  const SiteSet sites = random_sites(n, rng);
  Eigen::VectorXd bbar(2);
  bbar << 0.0, 1.0;
  PosteriorSamples s = manual_samples(n, J, 50, bbar);
  // one fixed state: beta_0 a smooth field, beta_1 = 1, sigma2 ~ 0
  Eigen::VectorXd field(n);
  for (int i = 0; i < n; ++i) field(i) = std::sin(2.0 * sites.coords()(i, 0));
  for (auto& d : s.draws) {
    d.beta.col(0) = field;
    d.beta.col(1).setOnes();
    d.sigma2 = 1e-18;
    d.tau = Eigen::VectorXd::Constant(2, 0.5);
    d.g = Eigen::VectorXd::Constant(2, 0.7);
  }

  // predict at the training sites themselves with near-point-mass agents
  Eigen::MatrixXd a_new(n, J), b_new(n, J);
  for (int i = 0; i < n; ++i) {
    a_new(i, 0) = 2.0 + i;
    b_new(i, 0) = 1e-18;
  }
  const AgentForecastSet fc = AgentForecastSet::gaussian(a_new, b_new);
  const PredictiveDraws draws = predictive_draws(s, sites, sites, fc, 99);
  for (int i = 0; i < n; ++i) {
    const double expected = field(i) + 1.0 * a_new(i, 0);
    for (int d = 0; d < 50; ++d)
      CHECK(draws.values(d, i) == doctest::Approx(expected).epsilon(1e-5));
  }
  // the kriged posterior mean of each field interpolates at training sites
  for (int i = 0; i < n; ++i) {
    CHECK(draws.beta_at_new(0, i) == doctest::Approx(field(i)).epsilon(1e-6));
    CHECK(draws.beta_at_new(1, i) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("intercept-only prediction matches the conjugate GP predictive") {
  Rng rng(2);
  const int n = 10, J = 1;
  const SiteSet sites = random_sites(n, rng);
  const double tau = 1.2, g = 0.6, sigma2 = 0.25;

  // a single posterior state with fixed hyperparameters and a fixed field;
  // agents pinned to zero so only the intercept drives the prediction
  Eigen::VectorXd bbar(2);
  bbar << 0.0, 0.0;
  PosteriorSamples s = manual_samples(n, J, 4000, bbar);
  Eigen::VectorXd field(n);
  for (int i = 0; i < n; ++i) field(i) = rng.normal();
  for (auto& d : s.draws) {
    d.beta.col(0) = field;
    d.beta.col(1).setZero();
    d.sigma2 = sigma2;
    d.tau = Eigen::VectorXd::Constant(2, tau);
    d.g = Eigen::VectorXd::Constant(2, g);
  }

  Rng site_rng(3);
  const SiteSet new_sites = random_sites(4, site_rng);
  Eigen::MatrixXd a_new = Eigen::MatrixXd::Zero(4, J);
  Eigen::MatrixXd b_new = Eigen::MatrixXd::Constant(4, J, 1e-12);
  const AgentForecastSet fc = AgentForecastSet::gaussian(a_new, b_new);
  const PredictiveDraws draws = predictive_draws(s, sites, new_sites, fc, 7);

  const CholFactor chol = chol_factor(corr_matrix(sites, ExpKernel{g}));
  for (int snew = 0; snew < 4; ++snew) {
    const GpConditional cond =
        gp_conditional(new_sites.site(snew), sites, field, 0.0, tau, ExpKernel{g}, chol);
    const Eigen::VectorXd col = draws.values.col(snew);
    const double mc_mean = col.mean();
    const double mc_var = (col.array() - mc_mean).square().sum() / (col.size() - 1);
    const double se = std::sqrt((cond.variance + sigma2) / col.size());
    CHECK(std::abs(mc_mean - cond.mean) < 4.0 * se);
    CHECK(mc_var == doctest::Approx(cond.variance + sigma2).epsilon(0.15));
  }
}

TEST_CASE("binary predictive probabilities stay in [0,1] and match expit") {
  Rng rng(4);
  const int n = 6, J = 1;
  const SiteSet sites = random_sites(n, rng);
  Eigen::VectorXd bbar(2);
  bbar << 0.0, 0.5;
  PosteriorSamples s = manual_samples(n, J, 30, bbar);
  s.kind = ForecastKind::Bernoulli;
  for (auto& d : s.draws) {
    d.beta.col(0).setConstant(0.4);
    d.beta.col(1).setConstant(2.0);
    d.tau = Eigen::VectorXd::Constant(2, 1e-16);  // point-mass kriging
  }
  Eigen::MatrixXd probs(3, J);
  probs << 0.0, 0.5, 1.0;
  const AgentForecastSet fc = AgentForecastSet::bernoulli(probs);
  Rng site_rng(5);
  const SiteSet new_sites = random_sites(3, site_rng);
  const PredictiveDraws draws = predictive_draws(s, sites, new_sites, fc, 11);
  CHECK(draws.values.minCoeff() >= 0.0);
  CHECK(draws.values.maxCoeff() <= 1.0);
  // with tau ~ 0 the kriged fields equal bbar + kriged offset; at a = 0 the
  // factor is 0 whp and the probability is expit(beta_0(new))
  for (int d = 0; d < 30; ++d) {
    const double v = draws.values(d, 0);
    CHECK((v == doctest::Approx(expit(draws.beta_at_new(0, 0))).epsilon(1e-6) ||
           v == doctest::Approx(expit(draws.beta_at_new(0, 0) + draws.beta_at_new(1, 0)))
                    .epsilon(1e-6)));
  }
}

TEST_CASE("prediction is deterministic and thread-count independent") {
  Rng rng(6);
  const int n = 12, J = 2;
  GaussianFixture fx = make_fixture(n, J, rng);
  PriorConfig priors = PriorConfig::defaults(J, fx.sites.max_pairwise_distance());
  ChainConfig cfg;
  cfg.n_burn = 100;
  cfg.n_keep = 200;
  cfg.seed = 13;
  const PosteriorSamples samples = run_chain(fx.sites, fx.y, fx.forecasts, priors, cfg);

  Rng site_rng(7);
  const SiteSet new_sites = random_sites(5, site_rng);
  Eigen::MatrixXd a_new(5, J), b_new(5, J);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < J; ++j) {
      a_new(i, j) = site_rng.normal();
      b_new(i, j) = 0.3;
    }
  const AgentForecastSet fc = AgentForecastSet::gaussian(a_new, b_new);

  const PredictiveDraws one = predictive_draws(samples, fx.sites, new_sites, fc, 17, 1);
  const PredictiveDraws four = predictive_draws(samples, fx.sites, new_sites, fc, 17, 4);
  CHECK(one.values == four.values);
  CHECK(one.beta_at_new == four.beta_at_new);

  // draw-count mismatch guards
  CHECK_THROWS_AS(predictive_draws(samples, fx.sites, new_sites,
                                   AgentForecastSet::gaussian(a_new.leftCols(1),
                                                              b_new.leftCols(1)),
                                   17),
                  ArtifactMismatch);
}

TEST_CASE("fit then predict at the training sites reproduces in-sample means") {
  // point-mass agents keep the latent factors pinned at the forecast means,
  // so the in-sample fitted values and the round-trip predictions estimate
  // the same quantity; they differ only by the predictive noise draws
  Rng rng(21);
  const int n = 50, J = 1;
  const SiteSet sites = random_sites(n, rng);
  Eigen::MatrixXd a(n, J), b(n, J);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    a(i, 0) = rng.normal();
    b(i, 0) = 1e-10;
    y(i) = 0.5 + 0.8 * a(i, 0) + 0.4 * rng.normal();
  }
  const AgentForecastSet forecasts = AgentForecastSet::gaussian(a, b);
  PriorConfig priors = PriorConfig::defaults(J, sites.max_pairwise_distance());
  ChainConfig cfg;
  cfg.n_burn = 500;
  cfg.n_keep = 600;
  cfg.seed = 3;
  const PosteriorSamples samples = run_chain(sites, y, forecasts, priors, cfg);

  const int n_draws = static_cast<int>(samples.draws.size());
  Eigen::MatrixXd psi(n_draws, n);
  Eigen::VectorXd sigma2s(n_draws);
  for (int d = 0; d < n_draws; ++d) {
    psi.row(d) = samples.draws[d].linear_predictor();
    sigma2s(d) = samples.draws[d].sigma2;
  }
  const Eigen::VectorXd fitted = psi.colwise().mean();
  const double mean_sigma2 = sigma2s.mean();

  const PredictiveDraws draws = predictive_draws(samples, sites, sites, forecasts, 5);
  const PredictiveSummary summary = summarize(draws, 0.05);
  // only the per-draw noise injections separate the two estimates
  const double noise_se = std::sqrt(mean_sigma2 / static_cast<double>(n_draws));
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(summary.mean(i) - fitted(i)) < 5.0 * noise_se + 1e-6);

  // draws at a training site concentrate: with point-mass agents each draw is
  // psi_i plus noise, so the variance decomposes exactly into the fitted
  // value's posterior variance plus the mean noise variance - no kriging or
  // prior (tau-scale) inflation may appear
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd col = draws.values.col(i);
    const double var = (col.array() - col.mean()).square().sum() / (col.size() - 1);
    const double psi_var =
        (psi.col(i).array() - fitted(i)).square().sum() / (n_draws - 1);
    const double target = psi_var + mean_sigma2;
    const double var_se = target * std::sqrt(2.0 / (col.size() - 1.0));
    CHECK(var <= target + 4.0 * var_se);
    CHECK(var >= target - 4.0 * var_se);
  }
}

TEST_CASE("interval width shrinks with more training data (statistical trend)") {
  // small observation noise makes parameter uncertainty the dominant width
  // component; widths are compared pairwise on shared replications
  int narrower = 0;
  const int reps = 12;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(900 + rep);
    const int n_large = 60, n_small = 20, n_new = 8, J = 1;
    const SiteSet all = random_sites(n_large + n_new, rng);
    Eigen::MatrixXd a(n_large + n_new, J), b(n_large + n_new, J);
    Eigen::VectorXd y(n_large + n_new);
    for (int i = 0; i < n_large + n_new; ++i) {
      a(i, 0) = rng.normal();
      b(i, 0) = 0.05;
      y(i) = 0.3 + 0.9 * a(i, 0) + 0.1 * rng.normal();
    }
    const SiteSet new_sites = SiteSet::make(all.coords().bottomRows(n_new));
    Eigen::MatrixXd a_new = a.bottomRows(n_new), b_new = b.bottomRows(n_new);
    const AgentForecastSet fc_new = AgentForecastSet::gaussian(a_new, b_new);

    auto width_with = [&](int m) {
      const SiteSet train = SiteSet::make(all.coords().topRows(m));
      const AgentForecastSet fc =
          AgentForecastSet::gaussian(a.topRows(m), b.topRows(m));
      PriorConfig priors = PriorConfig::defaults(J, train.max_pairwise_distance());
      ChainConfig cfg;
      cfg.n_burn = 300;
      cfg.n_keep = 600;
      cfg.seed = 77 + rep;
      const PosteriorSamples s = run_chain(train, y.head(m), fc, priors, cfg);
      const PredictiveSummary sum =
          summarize(predictive_draws(s, train, new_sites, fc_new, 11 + rep), 0.05);
      return (sum.upper - sum.lower).mean();
    };
    if (width_with(n_large) < width_with(n_small)) ++narrower;
  }
  CHECK(narrower >= reps * 2 / 3);
}
