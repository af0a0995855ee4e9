#include "bsps/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "bsps/errors.hpp"
#include "bsps/mathutil.hpp"
#include "bsps/spatial.hpp"
#include "bsps/vb.hpp"

namespace bsps {

namespace {

Eigen::MatrixX2d uniform_sites(int n, double lo, double hi, Rng& rng) {
  Eigen::MatrixX2d c(n, 2);
  for (int i = 0; i < n; ++i) {
    c(i, 0) = rng.uniform(lo, hi);
    c(i, 1) = rng.uniform(lo, hi);
  }
  return c;
}

// x1 = z1, x2 = r z1 + sqrt(1-r^2) z2 with z_k ~ GP(0, exp(-d/0.5)).
void correlated_covariates(const SiteSet& all, Rng& rng, Eigen::VectorXd& x1,
                           Eigen::VectorXd& x2) {
  const double r = 0.2;
  const Eigen::VectorXd z1 = sample_gp(all, 1.0, ExpKernel{0.5}, rng);
  const Eigen::VectorXd z2 = sample_gp(all, 1.0, ExpKernel{0.5}, rng);
  x1 = z1;
  x2 = r * z1 + std::sqrt(1.0 - r * r) * z2;
}

}  // namespace

ToyDataset simulate_toy(std::uint64_t seed) {
  Rng rng(mix64(seed));
  const int n_all = ToyDataset::kTrain + ToyDataset::kTest;
  const SiteSet all = SiteSet::make_jittered(uniform_sites(n_all, -1.0, 1.0, rng), rng);

  Eigen::VectorXd x1, x2;
  correlated_covariates(all, rng, x1, x2);
  const Eigen::VectorXd w = sample_gp(all, 0.3, ExpKernel{0.3}, rng);

  Eigen::VectorXd y(n_all);
  for (int i = 0; i < n_all; ++i) {
    const double eps = rng.normal();
    if (all.coords()(i, 0) <= 0.0)
      y(i) = w(i) + x1(i) - 0.5 * x2(i) * x2(i) + eps;
    else
      y(i) = w(i) + x1(i) * x1(i) + x2(i) * x2(i) + eps;
  }

  ToyDataset ds{SiteSet::make(all.coords().topRows(ToyDataset::kTrain)),
                SiteSet::make(all.coords().bottomRows(ToyDataset::kTest)),
                {}, {}, {}, {}, {}, {}, {}, {}};
  const int nt = ToyDataset::kTrain, ns = ToyDataset::kTest;
  ds.x_train.resize(nt, 2);
  ds.x_train.col(0) = x1.head(nt);
  ds.x_train.col(1) = x2.head(nt);
  ds.x_test.resize(ns, 2);
  ds.x_test.col(0) = x1.tail(ns);
  ds.x_test.col(1) = x2.tail(ns);
  ds.y_train = y.head(nt);
  ds.y_test = y.tail(ns);
  ds.w_train = w.head(nt);
  ds.w_test = w.tail(ns);
  ds.region1_train.resize(nt);
  ds.region1_test.resize(ns);
  for (int i = 0; i < nt; ++i) ds.region1_train[i] = ds.train_sites.coords()(i, 0) <= 0.0;
  for (int i = 0; i < ns; ++i) ds.region1_test[i] = ds.test_sites.coords()(i, 0) <= 0.0;
  return ds;
}

ScenarioDataset simulate_scenario(int which, int p, std::uint64_t seed) {
  if (which != 1 && which != 2) throw UnknownExperiment("simulate_scenario: which must be 1 or 2");
  if (p < 5) throw ConfigError("simulate_scenario: p must be >= 5");
  Rng rng(mix64(seed ^ 0xabcdefULL));
  const int n_all = ScenarioDataset::kTrain + ScenarioDataset::kTest;
  const SiteSet all = SiteSet::make_jittered(uniform_sites(n_all, 0.0, 1.0, rng), rng);

  Eigen::MatrixXd x(n_all, p);
  {
    Eigen::VectorXd x1, x2;
    correlated_covariates(all, rng, x1, x2);
    x.col(0) = x1;
    x.col(1) = x2;
  }
  for (int k = 2; k < p; ++k)
    for (int i = 0; i < n_all; ++i) x(i, k) = rng.normal();
  const Eigen::VectorXd w = sample_gp(all, 0.3, ExpKernel{0.3}, rng);

  Eigen::VectorXd y(n_all);
  for (int i = 0; i < n_all; ++i) {
    const double eps = 0.7 * rng.normal();
    const double s1 = all.coords()(i, 0), s2 = all.coords()(i, 1);
    if (which == 1) {
      y(i) = w(i) + x(i, 2) * x(i, 2) * std::exp(-0.3 * (s1 * s1 + s2 * s2)) +
             s2 * std::sin(2.0 * x(i, 1)) + eps;
    } else {
      y(i) = 2.0 * w(i) + 0.5 * std::sin(M_PI * x(i, 0) * x(i, 1)) +
             (x(i, 2) - 0.5) * (x(i, 2) - 0.5) + 0.5 * x(i, 3) + 0.25 * x(i, 4) + eps;
    }
  }

  ScenarioDataset ds{which,
                     p,
                     SiteSet::make(all.coords().topRows(ScenarioDataset::kTrain)),
                     SiteSet::make(all.coords().bottomRows(ScenarioDataset::kTest)),
                     {}, {}, {}, {}, {}, {}};
  const int nt = ScenarioDataset::kTrain, ns = ScenarioDataset::kTest;
  ds.x_train = x.topRows(nt);
  ds.x_test = x.bottomRows(ns);
  ds.y_train = y.head(nt);
  ds.y_test = y.tail(ns);
  ds.w_train = w.head(nt);
  ds.w_test = w.tail(ns);
  return ds;
}

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size() || pred.size() == 0)
    throw LengthMismatch("mse: length mismatch or empty");
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

CoverageLength coverage_and_length(const PredictiveSummary& summary,
                                   const Eigen::VectorXd& truth) {
  const int n = static_cast<int>(truth.size());
  if (summary.lower.size() != n) throw LengthMismatch("coverage_and_length: length mismatch");
  int covered = 0;
  double total_len = 0.0;
  for (int i = 0; i < n; ++i) {
    if (truth(i) >= summary.lower(i) && truth(i) <= summary.upper(i)) ++covered;
    total_len += summary.upper(i) - summary.lower(i);
  }
  return {100.0 * covered / n, total_len / n};
}

double roc_auc(const Eigen::VectorXd& probs, const Eigen::VectorXd& labels) {
  if (probs.size() != labels.size()) throw LengthMismatch("roc_auc: length mismatch");
  const int n = static_cast<int>(probs.size());
  int n_pos = 0;
  for (int i = 0; i < n; ++i) n_pos += labels(i) == 1.0 ? 1 : 0;
  const int n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw SingleClass("roc_auc: labels contain one class only");

  // mid-ranks of the scores
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return probs(a) < probs(b); });
  std::vector<double> rank(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && probs(idx[j + 1]) == probs(idx[i])) ++j;
    const double mid = 0.5 * (i + j) + 1.0;
    for (int k = i; k <= j; ++k) rank[idx[k]] = mid;
    i = j + 1;
  }
  double rank_sum_pos = 0.0;
  for (int k = 0; k < n; ++k)
    if (labels(k) == 1.0) rank_sum_pos += rank[k];
  return (rank_sum_pos - 0.5 * n_pos * (n_pos + 1.0)) / (static_cast<double>(n_pos) * n_neg);
}

// ---------------------------------------------------------------------------

ExperimentSpec ExperimentSpec::defaults(const std::string& name) {
  if (name != "toy" && name != "scenario1" && name != "scenario2")
    throw UnknownExperiment("unknown experiment: " + name);
  ExperimentSpec spec;
  spec.name = name;
  spec.chain.backend = BackendKind::Nngp;
  spec.chain.m = 10;
  spec.chain.n_burn = 1000;
  spec.chain.n_keep = 1000;
  spec.chain.thin = 1;
  return spec;
}

namespace {

struct AgentPredictions {
  Eigen::MatrixXd a_train, b_train;  // n x J
  Eigen::MatrixXd a_test, b_test;
  std::vector<std::string> names;
  std::vector<double> bics;  // on the full training set
};

// Two quadratic agents fitted on the sub-regions, predicting everywhere.
AgentPredictions toy_agents(const ToyDataset& ds) {
  std::vector<int> idx1, idx2;
  for (int i = 0; i < ToyDataset::kTrain; ++i)
    (ds.region1_train[i] ? idx1 : idx2).push_back(i);

  auto subset = [&](const std::vector<int>& idx, int col) {
    Eigen::VectorXd v(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) v(k) = ds.x_train(idx[k], col);
    return v;
  };
  auto subset_y = [&](const std::vector<int>& idx) {
    Eigen::VectorXd v(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) v(k) = ds.y_train(idx[k]);
    return v;
  };

  AgentPredictions out;
  out.names = {"QR1", "QR2"};
  const int nt = ToyDataset::kTrain, ns = ToyDataset::kTest;
  out.a_train.resize(nt, 2);
  out.b_train.resize(nt, 2);
  out.a_test.resize(ns, 2);
  out.b_test.resize(ns, 2);

  Eigen::MatrixXd full_design(nt, 5);
  for (int i = 0; i < nt; ++i)
    full_design.row(i) = OlsQuadraticAgent::design_row(ds.x_train(i, 0), ds.x_train(i, 1));

  const std::vector<int>* groups[2] = {&idx1, &idx2};
  for (int jj = 0; jj < 2; ++jj) {
    const auto& idx = *groups[jj];
    const OlsQuadraticAgent agent =
        OlsQuadraticAgent::fit_on(subset(idx, 0), subset(idx, 1), subset_y(idx));
    Eigen::VectorXd mean, var;
    agent.predict(ds.x_train.col(0), ds.x_train.col(1), mean, var);
    out.a_train.col(jj) = mean;
    out.b_train.col(jj) = var;
    agent.predict(ds.x_test.col(0), ds.x_test.col(1), mean, var);
    out.a_test.col(jj) = mean;
    out.b_test.col(jj) = var;
    out.bics.push_back(bic(agent.fit, full_design, ds.y_train));
  }
  return out;
}

// Built-in scenario agents: a linear model, a quadratic model, and a linear
// model with a spatial trend surface.
AgentPredictions scenario_agents(const ScenarioDataset& ds) {
  const int nt = ScenarioDataset::kTrain, ns = ScenarioDataset::kTest;
  const int p = ds.p;

  auto linear_design = [&](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd d(x.rows(), p + 1);
    d.col(0).setOnes();
    d.rightCols(p) = x;
    return d;
  };
  auto quad_design = [&](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd d(x.rows(), 2 * p + 1);
    d.col(0).setOnes();
    d.middleCols(1, p) = x;
    d.rightCols(p) = x.array().square();
    return d;
  };
  auto spatial_design = [&](const Eigen::MatrixXd& x, const SiteSet& sites) {
    Eigen::MatrixXd d(x.rows(), p + 6);
    d.col(0).setOnes();
    d.middleCols(1, p) = x;
    const auto& c = sites.coords();
    d.col(p + 1) = c.col(0);
    d.col(p + 2) = c.col(1);
    d.col(p + 3) = c.col(0).array().square();
    d.col(p + 4) = c.col(1).array().square();
    d.col(p + 5) = c.col(0).array() * c.col(1).array();
    return d;
  };

  const Eigen::MatrixXd designs_train[3] = {linear_design(ds.x_train), quad_design(ds.x_train),
                                            spatial_design(ds.x_train, ds.train_sites)};
  const Eigen::MatrixXd designs_test[3] = {linear_design(ds.x_test), quad_design(ds.x_test),
                                           spatial_design(ds.x_test, ds.test_sites)};

  AgentPredictions out;
  out.names = {"LIN", "QUAD", "SPLIN"};
  out.a_train.resize(nt, 3);
  out.b_train.resize(nt, 3);
  out.a_test.resize(ns, 3);
  out.b_test.resize(ns, 3);
  for (int jj = 0; jj < 3; ++jj) {
    const OlsFit fit = fit_ols(designs_train[jj], ds.y_train);
    for (int i = 0; i < nt; ++i) {
      out.a_train(i, jj) = fit.predict_mean(designs_train[jj].row(i));
      out.b_train(i, jj) = fit.predict_variance(designs_train[jj].row(i));
    }
    for (int i = 0; i < ns; ++i) {
      out.a_test(i, jj) = fit.predict_mean(designs_test[jj].row(i));
      out.b_test(i, jj) = fit.predict_variance(designs_test[jj].row(i));
    }
    out.bics.push_back(bic(fit, designs_train[jj], ds.y_train));
  }
  return out;
}

MethodMetrics interval_metrics(const std::string& name, const Eigen::VectorXd& mean,
                               const PredictiveSummary& summary,
                               const Eigen::VectorXd& truth) {
  MethodMetrics mm;
  mm.method = name;
  mm.mse = mse(mean, truth);
  mm.has_interval = true;
  const CoverageLength cl = coverage_and_length(summary, truth);
  mm.cp = cl.cp;
  mm.al = cl.al;
  return mm;
}

}  // namespace

ReplicationResult run_one_replication(const ExperimentSpec& spec, std::uint64_t seed) {
  ReplicationResult rep;
  rep.seed = seed;
  try {
    SiteSet train_sites = SiteSet::make(Eigen::MatrixX2d::Zero(1, 2));
    SiteSet test_sites = train_sites;
    Eigen::VectorXd y_train, y_test;
    AgentPredictions agents;
    if (spec.name == "toy") {
      const ToyDataset ds = simulate_toy(seed);
      agents = toy_agents(ds);
      train_sites = ds.train_sites;
      test_sites = ds.test_sites;
      y_train = ds.y_train;
      y_test = ds.y_test;
    } else if (spec.name == "scenario1" || spec.name == "scenario2") {
      const ScenarioDataset ds = simulate_scenario(spec.name == "scenario1" ? 1 : 2, spec.p, seed);
      agents = scenario_agents(ds);
      train_sites = ds.train_sites;
      test_sites = ds.test_sites;
      y_train = ds.y_train;
      y_test = ds.y_test;
    } else {
      throw UnknownExperiment("unknown experiment: " + spec.name);
    }

    const int J = static_cast<int>(agents.names.size());
    const AgentForecastSet train_fc = AgentForecastSet::gaussian(agents.a_train, agents.b_train);
    const AgentForecastSet test_fc = AgentForecastSet::gaussian(agents.a_test, agents.b_test);

    PriorConfig priors = PriorConfig::defaults(J, train_sites.max_pairwise_distance());
    priors.a_sigma = spec.a_sigma;
    priors.b_sigma = spec.b_sigma;
    priors.a_tau = spec.a_tau;
    priors.b_tau = spec.b_tau;

    const double z = inv_norm_cdf(1.0 - spec.alpha / 2.0);

    if (spec.run_mcmc) {
      ChainConfig chain = spec.chain;
      chain.seed = mix64(seed ^ 0xc4a1ULL);
      const PosteriorSamples samples = run_chain(train_sites, y_train, train_fc, priors, chain);
      const PredictiveDraws draws =
          predictive_draws(samples, train_sites, test_sites, test_fc, mix64(seed ^ 0x9d2cULL));
      const PredictiveSummary summary = summarize(draws, spec.alpha);
      rep.methods.push_back(interval_metrics("BSPS", summary.mean, summary, y_test));
      for (int i = 0; i < y_test.size(); ++i) {
        rep.total += 1;
        if (y_test(i) >= summary.lower(i) && y_test(i) <= summary.upper(i)) rep.covered += 1;
      }
    }

    if (spec.run_vb) {
      const RangeGrid grid = RangeGrid::log_spaced(priors.g_lo, priors.g_hi, spec.vb_grid_size);
      VbResult vb;
      if (spec.vb_warmstart > 0) {
        ChainConfig warm = spec.chain;
        warm.n_burn = spec.vb_warmstart;
        warm.n_keep = spec.vb_warmstart;
        warm.thin = 1;
        warm.seed = mix64(seed ^ 0x3b9aULL);
        const PosteriorSamples warm_samples =
            run_chain(train_sites, y_train, train_fc, priors, warm);
        const VariationalState init = vb_warmstart_state(warm_samples, priors, grid);
        vb = run_vb(train_sites, y_train, train_fc, priors, grid, spec.vb_tol,
                    spec.vb_max_iter, &init);
      } else {
        vb = run_vb(train_sites, y_train, train_fc, priors, grid, spec.vb_tol,
                    spec.vb_max_iter);
      }
      const VbWorkspace ws = vb_precompute(train_sites, grid);
      const Eigen::VectorXd pred =
          vb_point_predict(vb.state, train_sites, test_sites, test_fc, grid, priors, ws);
      MethodMetrics mm;
      mm.method = "BSPS-VB";
      mm.mse = mse(pred, y_test);
      rep.methods.push_back(mm);
    }

    if (spec.run_bma) {
      rep.bma_weights = bma_weights(agents.bics);
      const CombinedForecast combined = synthesize_bma(test_fc, rep.bma_weights);
      MethodMetrics mm;
      mm.method = "BMA";
      mm.mse = mse(combined.mean, y_test);
      rep.methods.push_back(mm);
    }

    if (spec.run_sa) {
      MethodMetrics mm;
      mm.method = "SA";
      mm.mse = mse(synthesize_sa(test_fc), y_test);
      rep.methods.push_back(mm);
    }

    if (spec.run_agents) {
      for (int j = 0; j < J; ++j) {
        PredictiveSummary s;
        s.alpha = spec.alpha;
        s.mean = agents.a_test.col(j);
        const Eigen::VectorXd half = z * agents.b_test.col(j).array().sqrt();
        s.lower = s.mean - half;
        s.upper = s.mean + half;
        rep.methods.push_back(interval_metrics(agents.names[j], s.mean, s, y_test));
      }
    }
  } catch (const std::exception& e) {
    rep.failed = true;
    rep.error = e.what();
  }
  return rep;
}

MetricsReport run_replications(const ExperimentSpec& spec, int n_reps,
                               std::uint64_t base_seed, int threads) {
  if (n_reps < 1) throw ConfigError("run_replications: n_reps must be >= 1");
  MetricsReport report;
  report.replications.resize(n_reps);

  const int n_threads = std::max(1, std::min(threads, n_reps));
  if (n_threads == 1) {
    for (int r = 0; r < n_reps; ++r)
      report.replications[r] = run_one_replication(spec, base_seed + r);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        for (int r = t; r < n_reps; r += n_threads)
          report.replications[r] = run_one_replication(spec, base_seed + r);
      });
    for (auto& th : pool) th.join();
  }

  for (const auto& rep : report.replications) {
    if (rep.failed) {
      ++report.n_failed;
      continue;
    }
    for (const auto& mm : rep.methods)
      if (std::find(report.methods.begin(), report.methods.end(), mm.method) ==
          report.methods.end())
        report.methods.push_back(mm.method);
  }
  return report;
}

std::vector<double> MetricsReport::mse_values(const std::string& method) const {
  std::vector<double> v;
  for (const auto& rep : replications) {
    if (rep.failed) continue;
    for (const auto& mm : rep.methods)
      if (mm.method == method) v.push_back(mm.mse);
  }
  return v;
}

double MetricsReport::median_mse(const std::string& method) const {
  std::vector<double> v = mse_values(method);
  if (v.empty()) throw EmptyData("median_mse: no successful replications for " + method);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Eigen::VectorXd MetricsReport::mse_deciles(const std::string& method) const {
  const std::vector<double> v = mse_values(method);
  if (v.empty()) throw EmptyData("mse_deciles: no successful replications for " + method);
  Eigen::VectorXd values = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  Eigen::VectorXd deciles(9);
  for (int k = 1; k <= 9; ++k) deciles(k - 1) = quantile_type7(values, k / 10.0);
  return deciles;
}

namespace {

double mean_metric(const MetricsReport& report, const std::string& method, bool want_cp) {
  double sum = 0.0;
  int count = 0;
  for (const auto& rep : report.replications) {
    if (rep.failed) continue;
    for (const auto& mm : rep.methods)
      if (mm.method == method && mm.has_interval) {
        sum += want_cp ? mm.cp : mm.al;
        ++count;
      }
  }
  if (count == 0) throw EmptyData("no interval metrics for " + method);
  return sum / count;
}

}  // namespace

double MetricsReport::mean_cp(const std::string& method) const {
  return mean_metric(*this, method, true);
}

double MetricsReport::mean_al(const std::string& method) const {
  return mean_metric(*this, method, false);
}

double MetricsReport::median_al(const std::string& method) const {
  std::vector<double> v;
  for (const auto& rep : replications) {
    if (rep.failed) continue;
    for (const auto& mm : rep.methods)
      if (mm.method == method && mm.has_interval) v.push_back(mm.al);
  }
  if (v.empty()) throw EmptyData("median_al: no interval metrics for " + method);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace bsps
