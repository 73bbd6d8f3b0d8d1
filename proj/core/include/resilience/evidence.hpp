#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "resilience/mcmc.hpp"
#include "resilience/model.hpp"

namespace resilience {

struct SteppingStoneConfig {
  int n_rungs = 32;        // ratio estimates between prior and posterior
  int rung_warmup = 500;
  int rung_draws = 1000;
  int rung_chains = 2;
  double beta_min = 1e-4;  // smallest nonzero rung; ladder is geometric
  // Catastrophe gate: flags rung chains that landed in different regions.
  // Ordinary slow mixing is already priced into the batch-means error.
  double rhat_limit = 1.5;
  std::uint64_t seed = 1;
};

/// Prior/likelihood split of a sampling target, as the power-posterior
/// ladder needs them separately. log_prior must integrate to 1 over the
/// sampling space (include the Jacobian when the space is transformed).
struct EvidenceTarget {
  std::size_t dim = 0;
  std::vector<std::string> names;
  std::function<double(std::span<const double>)> log_prior;
  std::function<double(std::span<const double>)> log_likelihood;
  std::vector<double> init_center;
  std::vector<double> init_jitter;
  std::vector<double> init_scales;
};

struct EvidenceResult {
  double log_ml = 0.0;
  double mc_error = 0.0;
  std::vector<double> betas;            // ladder incl. 0 and 1
  std::vector<double> rung_log_ratios;  // one per sampled rung
  std::vector<double> rung_mc_errors;
};

/// Stepping-stone estimate of the log marginal likelihood: MCMC at each
/// power posterior prior * likelihood^beta on a geometric ladder, each rung
/// estimating log E_beta[L^(beta_next - beta)] with a batch-means Monte
/// Carlo error; the rung estimates combine in log space. Rungs run
/// independently (parallel). A rung whose chains disagree (R-hat over the
/// limit) or go dead aborts the estimate naming the rung.
EvidenceResult log_marginal_likelihood(const EvidenceTarget& target,
                                       const SteppingStoneConfig& config);

/// The regression model as an evidence target (same transformed space and
/// priors as run_mcmc).
EvidenceTarget make_model_target(const ModelSpec& spec, const RegressionData& data);

enum class Evidence {
  kDecisiveModel1,
  kStrongModel1,
  kSubstantialModel1,
  kInconclusive,
  kSubstantialModel2,
  kStrongModel2,
  kDecisiveModel2,
};

std::string to_string(Evidence e);

struct ModelComparison {
  std::string model_1;
  std::string model_2;
  double log_ml_1 = 0.0;
  double log_ml_2 = 0.0;
  double log_bf_12 = 0.0;
  double bf_12 = 1.0;
  double mc_error = 0.0;  // combined from both estimates
  Evidence interpretation = Evidence::kInconclusive;
};

/// log BF12 = log ml1 - log ml2; interpretation bands at BF 3, 10 and 100
/// (and their reciprocals), inconclusive between 1/3 and 3.
ModelComparison bayes_factor(const std::string& model_1, double log_ml_1,
                             double mc_error_1, const std::string& model_2,
                             double log_ml_2, double mc_error_2);

Evidence interpret_bayes_factor(double log_bf_12);

}  // namespace resilience
