#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resilience/events.hpp"
#include "resilience/mcmc.hpp"
#include "resilience/model.hpp"

namespace resilience {

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  bool stratified = false;
  std::string warning;  // set when stratification was requested but disabled
};

/// Allocates integer counts to fractional targets: floors first, then the
/// largest remainders get the leftover units (ties to the lower index).
std::vector<std::size_t> largest_remainder(const std::vector<double>& targets);

/// Deterministic seeded split. The test set is held out first (test_frac),
/// the remainder splits into train/validation (val_frac_of_rest). With a
/// stratify column the allocation runs per stratum so each split sees both
/// strata when possible; a stratum under 3 rows disables stratification
/// with a warning. Index lists come back sorted.
SplitIndices split_data(const FeatureTable& table, std::uint64_t seed,
                        double test_frac = 0.20, double val_frac_of_rest = 0.20,
                        const std::string& stratify_column = "precip_flag");

struct EvalReport {
  std::string model_id;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  double rmse_val = 0.0;
  double mae_val = 0.0;
  double rmse_test = 0.0;
  double mae_test = 0.0;
};

double rmse(const std::vector<double>& residuals);
double mae(const std::vector<double>& residuals);

/// Residuals of the posterior point predictions on one split (transformed
/// response scale). Default point prediction uses posterior-mean
/// parameters; `predictive_mean` averages predictions over the draws
/// instead. Empty splits are fatal.
std::vector<double> prediction_residuals(const ModelSpec& spec,
                                         const PosteriorResult& posterior,
                                         const FeatureTable& split,
                                         bool predictive_mean = false);

EvalReport evaluate(const ModelSpec& spec, const PosteriorResult& posterior,
                    std::size_t n_train, const FeatureTable& val,
                    const FeatureTable& test, bool predictive_mean = false);

}  // namespace resilience
