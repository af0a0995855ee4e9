#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "bsps/artifact.hpp"
#include "bsps/config.hpp"
#include "bsps/csv.hpp"
#include "bsps/errors.hpp"
#include "bsps/experiments.hpp"
#include "bsps/logistic.hpp"
#include "bsps/mathutil.hpp"
#include "bsps/predict.hpp"
#include "bsps/vb.hpp"

namespace {

using namespace bsps;

struct CommonFlags {
  std::string config_path;
  long long seed = -1;
  int threads = 0;
  std::string backend;
  int m = -1;
  int burn = -1;
  int keep = -1;
  int thin = -1;
  std::string method;
  double alpha = -1.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value config file");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--threads", threads, "worker threads (env BSPS_THREADS as fallback)");
    cmd->add_option("--backend", backend, "full | nngp")
        ->check(CLI::IsMember({"full", "nngp"}));
    cmd->add_option("--m", m, "NNGP neighbor count");
    cmd->add_option("--burn", burn, "burn-in iterations");
    cmd->add_option("--keep", keep, "retained draws");
    cmd->add_option("--thin", thin, "thinning interval");
    cmd->add_option("--method", method, "mcmc | vb")->check(CLI::IsMember({"mcmc", "vb"}));
    cmd->add_option("--alpha", alpha, "prediction interval level");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg.apply_file(config_path);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (threads > 0) cfg.threads = threads;
    else cfg.threads = resolve_threads(cfg.threads > 1 ? cfg.threads : 0);
    if (!backend.empty())
      cfg.backend = backend == "full" ? BackendKind::FullGp : BackendKind::Nngp;
    if (m > 0) cfg.m = m;
    if (burn >= 0) cfg.n_burn = burn;
    if (keep > 0) cfg.n_keep = keep;
    if (thin > 0) cfg.thin = thin;
    if (!method.empty()) cfg.method = method;
    if (alpha >= 0) cfg.alpha = alpha;
    cfg.validate();
    return cfg;
  }
};

SiteSet sites_from(const Eigen::MatrixX2d& coords, std::uint64_t seed) {
  Rng rng(mix64(seed ^ 0x5174e5ULL));
  return SiteSet::make_jittered(coords, rng);
}

int cmd_fit(const CommonFlags& flags, const std::string& input, const std::string& output) {
  RunConfig cfg = flags.resolve();
  const DatasetCsv data = read_dataset_csv(input, /*expect_y=*/true);
  cfg.apply_kind_defaults(data.kind);
  const SiteSet sites = sites_from(data.coords, cfg.seed);
  const AgentForecastSet forecasts = data.forecasts();
  const PriorConfig priors = cfg.priors(data.num_agents(), sites.max_pairwise_distance());

  if (cfg.method == "vb") {
    if (data.kind != ForecastKind::Gaussian)
      throw KindMismatch("fit: the VB path supports Gaussian forecasts only");
    const RangeGrid grid = RangeGrid::log_spaced(priors.g_lo, priors.g_hi, cfg.vb_grid);
    VbResult result;
    const int warmstart = cfg.vb_warmstart.value_or(0);
    if (warmstart > 0) {
      ChainConfig warm = cfg.chain_config();
      warm.n_burn = warmstart;
      warm.n_keep = warmstart;
      warm.thin = 1;
      const PosteriorSamples samples = run_chain(sites, data.y, forecasts, priors, warm);
      const VariationalState init = vb_warmstart_state(samples, priors, grid);
      result = run_vb(sites, data.y, forecasts, priors, grid, cfg.vb_tol, cfg.vb_max_iter,
                      &init);
    } else {
      result = run_vb(sites, data.y, forecasts, priors, grid, cfg.vb_tol, cfg.vb_max_iter);
    }
    VbArtifact artifact;
    artifact.train_coords = sites.coords();
    artifact.beta_bar = priors.beta_bar;
    artifact.grid_eta = grid.eta;
    artifact.p = result.state.p;
    artifact.mu = result.state.mu;
    artifact.sigma_diag.resize(result.state.mu.size());
    for (std::size_t j = 0; j < result.state.mu.size(); ++j)
      artifact.sigma_diag[j] = result.state.Sigma[j].diagonal();
    artifact.m = result.state.m;
    artifact.s2 = result.state.s2;
    artifact.a_tau = result.state.a_tau;
    artifact.b_tau = result.state.b_tau;
    artifact.a_sigma = result.state.a_sigma;
    artifact.b_sigma = result.state.b_sigma;
    artifact.converged = result.converged;
    artifact.iterations = result.iterations;
    artifact.config_echo = cfg.echo();
    write_vb_file(output, artifact);
    std::cout << "vb: " << (result.converged ? "converged" : "NOT converged") << " after "
              << result.iterations << " sweeps, final elbo "
              << format_double(result.elbo_trace.back()) << "\n";
    return 0;
  }

  ChainConfig chain = cfg.chain_config();
  PosteriorSamples samples;
  if (data.kind == ForecastKind::Gaussian)
    samples = run_chain(sites, data.y, forecasts, priors, chain);
  else
    samples = run_chain_binary(sites, data.y, forecasts, priors, chain);

  PosteriorArtifact artifact;
  artifact.samples = std::move(samples);
  artifact.train_coords = sites.coords();
  artifact.config_echo = cfg.echo();
  write_posterior_file(output, artifact);
  std::cout << "mcmc: " << artifact.samples.draws.size() << " draws";
  std::cout << ", range acceptance:";
  for (int j = 0; j < artifact.samples.accept_rate.size(); ++j)
    std::cout << " " << format_double(artifact.samples.accept_rate(j));
  std::cout << "\n";
  return 0;
}

int cmd_predict(const CommonFlags& flags, const std::string& artifact_path,
                const std::string& input, const std::string& output) {
  RunConfig cfg = flags.resolve();
  const DatasetCsv data = read_dataset_csv(input, /*expect_y=*/false);
  const ArtifactKind kind = sniff_artifact(artifact_path);

  std::vector<std::string> header = {"s1", "s2", "mean", "lower", "upper"};
  std::vector<std::vector<std::string>> rows;

  if (kind == ArtifactKind::Posterior) {
    const PosteriorArtifact artifact = read_posterior_file(artifact_path);
    const int J = artifact.samples.draws[0].num_agents();
    if (J != data.num_agents())
      throw ArtifactMismatch("predict: artifact has " + std::to_string(J) +
                             " agents, input has " + std::to_string(data.num_agents()));
    const bool artifact_gaussian = artifact.samples.kind == ForecastKind::Gaussian;
    if (artifact_gaussian != (data.kind == ForecastKind::Gaussian))
      throw ArtifactMismatch("predict: artifact and input forecast kinds differ");
    const SiteSet train = SiteSet::make(artifact.train_coords);
    const SiteSet new_sites = sites_from(data.coords, cfg.seed ^ 0x7e57ULL);
    const PredictiveDraws draws = predictive_draws(artifact.samples, train, new_sites,
                                                   data.forecasts(), cfg.seed, cfg.threads);
    const PredictiveSummary summary = summarize(draws, cfg.alpha);

    for (int j = 1; j <= J; ++j) header.push_back("weight_" + std::to_string(j));
    for (int j = 1; j <= J; ++j)
      for (int k = j + 1; k <= J; ++k)
        header.push_back("ratio_" + std::to_string(j) + "_" + std::to_string(k));
    for (int i = 0; i < new_sites.n(); ++i) {
      std::vector<std::string> row = {format_double(data.coords(i, 0)),
                                      format_double(data.coords(i, 1)),
                                      format_double(summary.mean(i)),
                                      format_double(summary.lower(i)),
                                      format_double(summary.upper(i))};
      for (int j = 1; j <= J; ++j) row.push_back(format_double(draws.beta_at_new(j, i)));
      for (int j = 1; j <= J; ++j)
        for (int k = j + 1; k <= J; ++k) {
          const double aj = std::abs(draws.beta_at_new(j, i));
          const double ak = std::abs(draws.beta_at_new(k, i));
          row.push_back(format_double(aj == 0.0 && ak == 0.0 ? 0.5 : aj / (aj + ak)));
        }
      rows.push_back(std::move(row));
    }
  } else {
    const VbArtifact artifact = read_vb_file(artifact_path);
    const int J = static_cast<int>(artifact.mu.size()) - 1;
    if (J != data.num_agents())
      throw ArtifactMismatch("predict: artifact has " + std::to_string(J) +
                             " agents, input has " + std::to_string(data.num_agents()));
    if (data.kind != ForecastKind::Gaussian)
      throw ArtifactMismatch("predict: VB artifacts require Gaussian forecasts");
    const SiteSet train = SiteSet::make(artifact.train_coords);
    const SiteSet new_sites = sites_from(data.coords, cfg.seed ^ 0x7e57ULL);
    RangeGrid grid;
    grid.eta = artifact.grid_eta;
    const VbWorkspace ws = vb_precompute(train, grid);
    const Eigen::MatrixXd kriged = vb_kriged_coefficients(
        artifact.mu, artifact.p, artifact.beta_bar, train, new_sites, grid, ws);

    for (int j = 1; j <= J; ++j) header.push_back("weight_" + std::to_string(j));
    for (int j = 1; j <= J; ++j)
      for (int k = j + 1; k <= J; ++k)
        header.push_back("ratio_" + std::to_string(j) + "_" + std::to_string(k));
    for (int i = 0; i < new_sites.n(); ++i) {
      double mean = kriged(0, i);
      for (int j = 1; j <= J; ++j) mean += kriged(j, i) * data.a(i, j - 1);
      // VB is a point-prediction path; no interval is produced
      std::vector<std::string> row = {format_double(data.coords(i, 0)),
                                      format_double(data.coords(i, 1)), format_double(mean),
                                      "nan", "nan"};
      for (int j = 1; j <= J; ++j) row.push_back(format_double(kriged(j, i)));
      for (int j = 1; j <= J; ++j)
        for (int k = j + 1; k <= J; ++k) {
          const double aj = std::abs(kriged(j, i));
          const double ak = std::abs(kriged(k, i));
          row.push_back(format_double(aj == 0.0 && ak == 0.0 ? 0.5 : aj / (aj + ak)));
        }
      rows.push_back(std::move(row));
    }
  }
  write_csv(output, header, rows);
  std::cout << "predict: wrote " << rows.size() << " rows to " << output << "\n";
  return 0;
}

int cmd_simulate(const CommonFlags& flags, const std::string& experiment, int p,
                 const std::string& output_prefix) {
  const RunConfig cfg = flags.resolve();
  auto write_raw = [&](const std::string& path, const SiteSet& sites,
                       const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w) {
    std::vector<std::string> header = {"s1", "s2", "y"};
    for (int k = 1; k <= x.cols(); ++k) header.push_back("x_" + std::to_string(k));
    header.push_back("w");
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < sites.n(); ++i) {
      std::vector<std::string> row = {format_double(sites.coords()(i, 0)),
                                      format_double(sites.coords()(i, 1)),
                                      format_double(y(i))};
      for (int k = 0; k < x.cols(); ++k) row.push_back(format_double(x(i, k)));
      row.push_back(format_double(w(i)));
      rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
  };

  if (experiment == "toy") {
    const ToyDataset ds = simulate_toy(cfg.seed);
    write_raw(output_prefix + "_train.csv", ds.train_sites, ds.x_train, ds.y_train, ds.w_train);
    write_raw(output_prefix + "_test.csv", ds.test_sites, ds.x_test, ds.y_test, ds.w_test);
  } else if (experiment == "scenario1" || experiment == "scenario2") {
    const ScenarioDataset ds =
        simulate_scenario(experiment == "scenario1" ? 1 : 2, p, cfg.seed);
    write_raw(output_prefix + "_train.csv", ds.train_sites, ds.x_train, ds.y_train, ds.w_train);
    write_raw(output_prefix + "_test.csv", ds.test_sites, ds.x_test, ds.y_test, ds.w_test);
  } else {
    throw UnknownExperiment("unknown experiment: " + experiment);
  }
  std::cout << "simulate: wrote " << output_prefix << "_{train,test}.csv\n";
  return 0;
}

int cmd_bench(const CommonFlags& flags, const std::string& experiment, int p, int reps,
              const std::string& output) {
  RunConfig cfg = flags.resolve();
  ExperimentSpec spec = ExperimentSpec::defaults(experiment);
  spec.p = p;
  spec.alpha = cfg.alpha;
  spec.a_sigma = cfg.a_sigma;
  spec.b_sigma = cfg.b_sigma;
  spec.a_tau = cfg.a_tau;
  spec.b_tau = cfg.b_tau;
  ChainConfig chain = cfg.chain_config();
  chain.seed = 0;  // per-replication seeds are derived inside the runner
  spec.chain = chain;
  spec.vb_grid_size = cfg.vb_grid;
  spec.vb_tol = cfg.vb_tol;
  spec.vb_max_iter = cfg.vb_max_iter;
  spec.vb_warmstart = cfg.vb_warmstart.value_or(spec.vb_warmstart);

  const MetricsReport report = run_replications(spec, reps, cfg.seed, cfg.threads);

  std::vector<std::string> header = {"method", "metric", "value"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& method : report.methods) {
    const Eigen::VectorXd deciles = report.mse_deciles(method);
    for (int k = 0; k < 9; ++k)
      rows.push_back({method, "mse_q" + std::to_string((k + 1) * 10),
                      format_double(deciles(k))});
    rows.push_back({method, "mse_median", format_double(report.median_mse(method))});
    bool has_interval = false;
    for (const auto& rep : report.replications) {
      if (rep.failed) continue;
      for (const auto& mm : rep.methods)
        if (mm.method == method && mm.has_interval) has_interval = true;
    }
    if (has_interval) {
      rows.push_back({method, "cp_mean", format_double(report.mean_cp(method))});
      rows.push_back({method, "al_mean", format_double(report.mean_al(method))});
    }
  }
  rows.push_back({"all", "replications", std::to_string(reps)});
  rows.push_back({"all", "failures", std::to_string(report.n_failed)});
  write_csv(output, header, rows);
  std::cout << "bench: " << reps << " replications, " << report.n_failed
            << " failures, wrote " << output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spatial predictive synthesis"};
  app.require_subcommand(1);

  CommonFlags fit_flags, predict_flags, sim_flags, bench_flags;
  std::string fit_input, fit_output;
  std::string predict_artifact, predict_input, predict_output;
  std::string sim_experiment = "toy", sim_prefix = "sim";
  std::string bench_experiment = "toy", bench_output = "bench.csv";
  int sim_p = 5, bench_p = 5, bench_reps = 20;

  CLI::App* fit = app.add_subcommand("fit", "fit the synthesis model to a CSV dataset");
  fit->add_option("--input", fit_input, "training CSV (s1,s2,y,a_1,b_1,...)")->required();
  fit->add_option("--output", fit_output, "artifact output path")->required();
  fit_flags.add_to(fit);

  CLI::App* predict = app.add_subcommand("predict", "predict at new sites from an artifact");
  predict->add_option("--artifact", predict_artifact, "fit artifact")->required();
  predict->add_option("--input", predict_input, "new-site CSV (s1,s2,a_1,...)")->required();
  predict->add_option("--output", predict_output, "predictions CSV")->required();
  predict_flags.add_to(predict);

  CLI::App* simulate = app.add_subcommand("simulate", "write a synthetic dataset");
  simulate->add_option("--experiment", sim_experiment, "toy | scenario1 | scenario2");
  simulate->add_option("--p", sim_p, "scenario covariate count");
  simulate->add_option("--output", sim_prefix, "output path prefix")->required();
  sim_flags.add_to(simulate);

  CLI::App* bench = app.add_subcommand("bench", "replicate an experiment and write metrics");
  bench->add_option("--experiment", bench_experiment, "toy | scenario1 | scenario2");
  bench->add_option("--p", bench_p, "scenario covariate count");
  bench->add_option("--reps", bench_reps, "replication count");
  bench->add_option("--output", bench_output, "metrics CSV path")->required();
  bench_flags.add_to(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_fit(fit_flags, fit_input, fit_output);
    if (predict->parsed())
      return cmd_predict(predict_flags, predict_artifact, predict_input, predict_output);
    if (simulate->parsed()) return cmd_simulate(sim_flags, sim_experiment, sim_p, sim_prefix);
    if (bench->parsed()) return cmd_bench(bench_flags, bench_experiment, bench_p, bench_reps,
                                          bench_output);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const RankDeficient& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const SamplerStall& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
