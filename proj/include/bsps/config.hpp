#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "bsps/gibbs.hpp"

namespace bsps {

// Resolved run configuration: config-file values overridden by flags.
// Every numeric field is validated at parse time; unknown keys are rejected.
struct RunConfig {
  std::string method = "mcmc";  // mcmc | vb
  std::uint64_t seed = 1;
  int threads = 1;
  double alpha = 0.05;

  double a_sigma = 0.1, b_sigma = 0.1, a_tau = 0.1, b_tau = 0.1;
  std::optional<double> g_lo, g_hi;  // default derived from the data

  BackendKind backend = BackendKind::Nngp;
  int m = 10;
  int n_burn = -1;  // <0: kind-dependent default (1000 Gaussian, 3000 binary)
  int n_keep = -1;  // <0: 1000 Gaussian, 7000 binary
  int thin = 1;
  double mh_step = -1.0;
  bool adapt_mh = true;

  int vb_grid = 20;
  double vb_tol = 1e-5;
  int vb_max_iter = 200;
  std::optional<int> vb_warmstart;  // MCMC draws seeding VB (unset: command default)

  void apply_kind_defaults(ForecastKind kind);
  PriorConfig priors(int num_agents, double d_max) const;
  ChainConfig chain_config() const;
  void validate() const;

  // flat `key = value` lines, '#' comments; throws ConfigError on unknown keys
  void apply_file(const std::string& path);
  void apply_entry(const std::string& key, const std::string& value);

  // canonical echo embedded in artifacts
  std::string echo() const;
};

int resolve_threads(int flag_value);  // BSPS_THREADS fallback, then 1

}  // namespace bsps
