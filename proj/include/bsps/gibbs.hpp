#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>
#include <vector>

#include "bsps/agents.hpp"
#include "bsps/rng.hpp"
#include "bsps/spatial.hpp"

namespace bsps {

struct PriorConfig {
  double a_sigma = 0.1, b_sigma = 0.1;
  double a_tau = 0.1, b_tau = 0.1;
  double g_lo = 0.0, g_hi = 0.0;
  Eigen::VectorXd beta_bar;  // length J+1; default 0 for intercept, 1/J otherwise

  // g range [0.01 d_max, d_max]; beta_bar = (0, 1/J, ..., 1/J).
  static PriorConfig defaults(int num_agents, double d_max);
  void validate(int num_agents) const;
};

struct SynthesisState {
  Eigen::MatrixXd f;     // n x J latent factors
  Eigen::MatrixXd beta;  // n x (J+1), column 0 = intercept
  double sigma2 = 1.0;
  Eigen::VectorXd tau;  // J+1
  Eigen::VectorXd g;    // J+1

  int n() const { return static_cast<int>(beta.rows()); }
  int num_agents() const { return static_cast<int>(f.cols()); }
  // Linear predictor beta_0i + sum_j beta_ji f_ji.
  Eigen::VectorXd linear_predictor() const;
};

enum class BackendKind { FullGp, Nngp };

struct ChainConfig {
  int n_burn = 1000;
  int n_keep = 1000;
  int thin = 1;
  BackendKind backend = BackendKind::FullGp;
  int m = 10;              // NNGP neighbor count
  double mh_step = -1.0;   // <0 -> 0.1 (g_hi - g_lo)
  bool adapt_mh = true;    // Robbins-Monro toward 0.35 acceptance during burn-in
  std::uint64_t seed = 1;

  void validate() const;
};

struct PosteriorSamples {
  std::vector<SynthesisState> draws;
  Eigen::VectorXd accept_rate;  // per field, post burn-in
  Eigen::VectorXd beta_bar;     // echo for prediction
  ForecastKind kind = ForecastKind::Gaussian;
};

// ---------------------------------------------------------------------------
// Coefficient-field backends. Both cache whatever the current g_j requires;
// set_range(j, g) refreshes field j after an accepted proposal.

struct FullGpBackend {
  struct Field {
    double g = 0.0;
    CholFactor chol;           // of G(g)
    Eigen::MatrixXd corr_inv;  // G(g)^{-1}
    Eigen::VectorXd inv_one;   // G(g)^{-1} 1
    double logdet = 0.0;
  };
  Eigen::MatrixXd dists;
  std::vector<Field> fields;

  static FullGpBackend build(const SiteSet& sites, const Eigen::VectorXd& g);
  static Field make_field(const Eigen::MatrixXd& dists, double g);
  void set_range(int j, double g) { fields[j] = make_field(dists, g); }
};

struct NngpBackend {
  NeighborIndex index;
  NeighborDistances geo;
  std::vector<double> g;
  std::vector<NngpCoeffs> coeffs;

  static NngpBackend build(const SiteSet& sites, int m, const Eigen::VectorXd& g);
  void set_range(int j, double gj) {
    g[j] = gj;
    coeffs[j] = nngp_coefficients(index, geo, ExpKernel{gj});
  }
};

using Backend = std::variant<FullGpBackend, NngpBackend>;

Backend build_backend(const SiteSet& sites, const ChainConfig& cfg, const Eigen::VectorXd& g);

// ---------------------------------------------------------------------------
// Full conditionals. The coefficient and likelihood updates are parametrized
// by per-site precision weights w_i and targets t_i so the Gaussian chain
// (w = 1/sigma2, t = y) and the Polya-gamma chain (w = omega, t = y*/omega)
// share one implementation.

SynthesisState init_state(const Eigen::VectorXd& y, const AgentForecastSet& forecasts,
                          const PriorConfig& priors);

// Cell conditional for one latent factor; resid excludes agent j's term.
struct ScalarConditional {
  double mean;
  double variance;
};
inline ScalarConditional factor_conditional(double beta_ji, double sigma2, double a_ji,
                                            double b_ji, double resid) {
  const double prec = beta_ji * beta_ji / sigma2 + 1.0 / b_ji;
  const double lin = beta_ji / sigma2 * resid + a_ji / b_ji;
  return {lin / prec, 1.0 / prec};
}

void update_factors(SynthesisState& state, const Eigen::VectorXd& y,
                    const AgentForecastSet& forecasts, Rng& rng);

// N(mean, P^{-1}) with P factored in prec_chol.
struct GaussianConditional {
  Eigen::VectorXd mean;
  CholFactor prec_chol;
};

// Field-j conditional under the dense backend; design has J+1 columns with
// column 0 identically 1.
GaussianConditional beta_conditional_full(int j, const Eigen::MatrixXd& beta,
                                          const Eigen::MatrixXd& design,
                                          const Eigen::VectorXd& w, const Eigen::VectorXd& t,
                                          double tau_j, double beta_bar_j,
                                          const FullGpBackend::Field& field);

// Site-i joint conditional of the (J+1)-vector under the NNGP backend.
GaussianConditional beta_conditional_nngp_site(int i, const Eigen::MatrixXd& beta,
                                               const Eigen::MatrixXd& design,
                                               const Eigen::VectorXd& w,
                                               const Eigen::VectorXd& t,
                                               const Eigen::VectorXd& tau,
                                               const Eigen::VectorXd& beta_bar,
                                               const NngpBackend& backend);

Eigen::VectorXd draw_gaussian(const GaussianConditional& cond, Rng& rng);

void draw_coefficients_full(Eigen::MatrixXd& beta, const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& w, const Eigen::VectorXd& t,
                            const Eigen::VectorXd& tau, const Eigen::VectorXd& beta_bar,
                            const FullGpBackend& backend, Rng& rng);
void draw_coefficients_nngp(Eigen::MatrixXd& beta, const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& w, const Eigen::VectorXd& t,
                            const Eigen::VectorXd& tau, const Eigen::VectorXd& beta_bar,
                            const NngpBackend& backend, Rng& rng);

void update_beta_full(SynthesisState& state, const Eigen::VectorXd& y,
                      const PriorConfig& priors, const FullGpBackend& backend, Rng& rng);
void update_beta_nngp(SynthesisState& state, const Eigen::VectorXd& y,
                      const PriorConfig& priors, const NngpBackend& backend, Rng& rng);

struct IgParams {
  double shape;
  double rate;
};

// Prior quadratic form (beta_j - bbar 1)' G^{-1} (beta_j - bbar 1), through
// the dense factorization or the NNGP sparse one.
double field_quadratic_form(int j, const Eigen::MatrixXd& beta, double beta_bar_j,
                            const Backend& backend);

IgParams tau_conditional(int j, const Eigen::MatrixXd& beta, const PriorConfig& priors,
                         const Backend& backend);
void update_tau(Eigen::VectorXd& tau, const Eigen::MatrixXd& beta, const PriorConfig& priors,
                const Backend& backend, Rng& rng);

// One reflected random-walk proposal for g_j; refreshes the backend cache on
// acceptance. A NotPositiveDefinite proposal counts as a rejection.
bool update_range_mh(int j, const Eigen::MatrixXd& beta, Eigen::VectorXd& g,
                     const Eigen::VectorXd& tau, const PriorConfig& priors, Backend& backend,
                     double mh_step, Rng& rng);
void update_g_mh(SynthesisState& state, const PriorConfig& priors, Backend& backend,
                 const Eigen::VectorXd& mh_steps, Rng& rng,
                 Eigen::Array<bool, Eigen::Dynamic, 1>& accepted);

IgParams sigma2_conditional(const SynthesisState& state, const Eigen::VectorXd& y,
                            const PriorConfig& priors);
void update_sigma2(SynthesisState& state, const Eigen::VectorXd& y, const PriorConfig& priors,
                   Rng& rng);

PosteriorSamples run_chain(const SiteSet& sites, const Eigen::VectorXd& y,
                           const AgentForecastSet& forecasts, const PriorConfig& priors,
                           const ChainConfig& cfg);

// The tau/range update entry points shared verbatim with the binary chain.
using TauUpdateFn = void (*)(Eigen::VectorXd&, const Eigen::MatrixXd&, const PriorConfig&,
                             const Backend&, Rng&);
using RangeUpdateFn = bool (*)(int, const Eigen::MatrixXd&, Eigen::VectorXd&,
                               const Eigen::VectorXd&, const PriorConfig&, Backend&, double,
                               Rng&);

}  // namespace bsps
