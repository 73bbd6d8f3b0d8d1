#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "resilience/model.hpp"

namespace resilience {

struct McmcConfig {
  int n_chains = 4;
  int n_warmup = 2000;
  int n_draws = 5000;
  std::uint64_t seed = 1;
  double target_accept = 0.234;
  double rhat_warn_limit = 1.1;
  bool force = false;  // waive the minimum-rows refusal
};

/// Row-major draw storage: draws x parameters.
struct DrawMatrix {
  std::size_t n_draws = 0;
  std::size_t n_params = 0;
  std::vector<double> data;

  double at(std::size_t draw, std::size_t param) const {
    return data[draw * n_params + param];
  }
  std::span<const double> row(std::size_t draw) const {
    return {data.data() + draw * n_params, n_params};
  }
};

/// Generic log-density target over R^dim for the random-walk sampler.
struct TargetDensity {
  std::size_t dim = 0;
  std::vector<std::string> names;
  std::function<double(std::span<const double>)> log_density;
  std::vector<double> init_center;  // chain start = center + jitter * z
  std::vector<double> init_jitter;
  std::vector<double> init_scales;  // initial proposal sds
};

struct ChainRun {
  DrawMatrix draws;          // post-warmup only
  double acceptance = 0.0;   // post-warmup acceptance rate
  std::vector<double> proposal_scales;  // frozen after warmup
  double log_step = 0.0;
  double final_log_density = 0.0;
};

/// One adaptive random-walk Metropolis chain. The diagonal proposal is
/// adapted only during warmup: a global log step follows Robbins-Monro
/// toward `target_accept` and per-coordinate scales track the running sd of
/// the chain. Both freeze at the end of warmup.
ChainRun run_chain(const TargetDensity& target, int n_warmup, int n_draws,
                   double target_accept, std::uint64_t chain_seed);

/// Throws ConvergenceError with a diagnostics dump when any chain accepted
/// nothing after warmup.
void check_chains_alive(const std::vector<ChainRun>& runs);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double rhat = 1.0;
  double ess = 0.0;
};

struct PosteriorResult {
  std::string model_id;
  std::vector<std::string> param_names;  // model parameters, then "sigma"
  std::vector<DrawMatrix> chains;        // sigma stored on its natural scale
  std::vector<ParamSummary> summaries;
  std::vector<double> chain_acceptance;
  double acceptance_rate = 0.0;
  bool convergence_warning = false;
  double sigma_scale = 1.0;  // resolved Half-Normal scale
  std::size_t n_data_rows = 0;
  ClampStats clamps;
  // Filled by the model-selection stage when evidence is computed.
  double log_marginal_likelihood = std::numeric_limits<double>::quiet_NaN();
  double lml_mc_error = std::numeric_limits<double>::quiet_NaN();

  std::size_t n_total_draws() const;
  /// Posterior-mean model parameters (sigma excluded).
  std::vector<double> mean_params() const;
  const ParamSummary& summary(std::string_view name) const;
};

/// Fits the model by adaptive random-walk Metropolis. Chains run
/// independently (parallel), each on its own stream derived from
/// (seed, chain index); results are reproducible for a fixed seed. Fewer
/// than 10 data rows is refused unless config.force. A chain that accepts
/// nothing after warmup is fatal; R-hat above the warn limit only sets
/// convergence_warning.
PosteriorResult run_mcmc(const ModelSpec& spec, const FeatureTable& table,
                         const McmcConfig& config);

/// As run_mcmc but on pre-extracted rows (also used for zero-row
/// prior-only targets in tests).
PosteriorResult run_mcmc_on_data(const ModelSpec& spec, const RegressionData& data,
                                 const McmcConfig& config);

struct PredictiveBand {
  std::vector<std::vector<double>> points;  // feature vectors
  std::vector<double> mean;
  std::vector<double> median;
  std::vector<double> lo95;
  std::vector<double> hi95;
};

/// Pushes every posterior draw through the model and adds Gaussian noise
/// with that draw's sigma; the band is the empirical mean and 2.5/97.5%
/// quantiles per point. Deterministic for a fixed seed.
PredictiveBand posterior_predictive(const PosteriorResult& result,
                                    const ModelSpec& spec,
                                    const std::vector<std::vector<double>>& grid,
                                    std::uint64_t seed);

/// Split-chain potential scale reduction (R-hat) for one parameter.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Effective sample size via chain-averaged autocorrelations with Geyer's
/// initial-monotone-sequence truncation.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

/// Linear-interpolation empirical quantile, p in [0, 1].
double quantile(std::vector<double> values, double p);

}  // namespace resilience
