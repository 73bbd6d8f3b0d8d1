#include "resilience/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "resilience/csv.hpp"
#include "resilience/errors.hpp"
#include "resilience/rng.hpp"

namespace resilience {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct RungEstimate {
  double log_ratio = 0.0;
  double mc_error = 0.0;
  double rhat = 1.0;
};

/// log mean_i exp(values[i]) without overflow.
double log_mean_exp(std::span<const double> values) {
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (const double v : values) s += std::exp(v - m);
  return m + std::log(s / static_cast<double>(values.size()));
}

RungEstimate estimate_rung(const EvidenceTarget& target, double beta,
                           double delta_beta, const SteppingStoneConfig& config,
                           std::uint64_t rung_seed) {
  TargetDensity power;
  power.dim = target.dim;
  power.names = target.names;
  power.init_center = target.init_center;
  power.init_jitter = target.init_jitter;
  power.init_scales = target.init_scales;
  power.log_density = [&target, beta](std::span<const double> theta) {
    const double lp = target.log_prior(theta);
    if (!std::isfinite(lp)) return kNegInf;
    if (beta == 0.0) return lp;  // prior rung needs no likelihood evals
    const double ll = target.log_likelihood(theta);
    if (!std::isfinite(ll)) return kNegInf;
    return lp + beta * ll;
  };

  std::vector<ChainRun> runs;
  std::vector<std::vector<double>> weighted;  // delta_beta * loglik per chain
  for (int c = 0; c < config.rung_chains; ++c) {
    const auto chain_seed = derive_seed(rung_seed, "rung-chain",
                                        static_cast<std::uint64_t>(c));
    runs.push_back(run_chain(power, config.rung_warmup, config.rung_draws,
                             0.234, chain_seed));
    const auto& draws = runs.back().draws;
    std::vector<double> w(draws.n_draws);
    for (std::size_t i = 0; i < draws.n_draws; ++i) {
      w[i] = delta_beta * target.log_likelihood(draws.row(i));
    }
    weighted.push_back(std::move(w));
  }

  RungEstimate est;
  for (std::size_t c = 0; c < runs.size(); ++c) {
    if (runs[c].acceptance == 0.0) {
      est.rhat = std::numeric_limits<double>::infinity();
      return est;
    }
  }
  // Convergence check on the weighted log-likelihood series itself (the
  // quantity the rung estimate integrates).
  if (weighted.size() >= 2 && delta_beta > 0.0) {
    est.rhat = split_rhat(weighted);
  }

  std::vector<double> all;
  for (const auto& w : weighted) all.insert(all.end(), w.begin(), w.end());
  est.log_ratio = log_mean_exp(all);

  // Batch means per chain; the spread of batch estimates gives the error.
  std::vector<double> batch_means;
  const int batches_per_chain = 10;
  for (const auto& w : weighted) {
    const std::size_t batch = w.size() / batches_per_chain;
    if (batch == 0) continue;
    for (int b = 0; b < batches_per_chain; ++b) {
      std::span<const double> slice(w.data() + b * batch, batch);
      batch_means.push_back(std::exp(log_mean_exp(slice) - est.log_ratio));
    }
  }
  if (batch_means.size() >= 2) {
    const double bm = [&] {
      double s = 0.0;
      for (const double v : batch_means) s += v;
      return s / static_cast<double>(batch_means.size());
    }();
    double var = 0.0;
    for (const double v : batch_means) var += (v - bm) * (v - bm);
    var /= static_cast<double>(batch_means.size() - 1);
    // se(log r) ~= se(r)/r; batch means are already normalized by r.
    est.mc_error = std::sqrt(var / static_cast<double>(batch_means.size()));
  }
  return est;
}

}  // namespace

EvidenceResult log_marginal_likelihood(const EvidenceTarget& target,
                                       const SteppingStoneConfig& config) {
  if (config.n_rungs < 2) throw ConfigError("need at least 2 rungs");
  const int k_rungs = config.n_rungs;

  EvidenceResult result;
  result.betas.resize(static_cast<std::size_t>(k_rungs) + 1);
  result.betas[0] = 0.0;
  for (int k = 1; k <= k_rungs; ++k) {
    const double frac =
        static_cast<double>(k_rungs - k) / static_cast<double>(k_rungs - 1);
    result.betas[static_cast<std::size_t>(k)] = std::pow(config.beta_min, frac);
  }
  result.betas.back() = 1.0;

  std::vector<std::future<RungEstimate>> futures;
  futures.reserve(static_cast<std::size_t>(k_rungs));
  for (int k = 0; k < k_rungs; ++k) {
    const double beta = result.betas[static_cast<std::size_t>(k)];
    const double delta = result.betas[static_cast<std::size_t>(k) + 1] - beta;
    const auto rung_seed =
        derive_seed(config.seed, "rung", static_cast<std::uint64_t>(k));
    futures.push_back(
        std::async(std::launch::async, [&target, &config, beta, delta,
                                        rung_seed]() {
          return estimate_rung(target, beta, delta, config, rung_seed);
        }));
  }

  double total = 0.0;
  double var = 0.0;
  for (int k = 0; k < k_rungs; ++k) {
    const RungEstimate est = futures[static_cast<std::size_t>(k)].get();
    if (!std::isfinite(est.rhat) || est.rhat > config.rhat_limit) {
      throw ConvergenceError(
          "stepping-stone rung " + std::to_string(k) + " (beta=" +
          format_double(result.betas[static_cast<std::size_t>(k)]) +
          ") failed convergence (R-hat " + format_double(est.rhat) + ")");
    }
    result.rung_log_ratios.push_back(est.log_ratio);
    result.rung_mc_errors.push_back(est.mc_error);
    total += est.log_ratio;
    var += est.mc_error * est.mc_error;
  }
  result.log_ml = total;
  result.mc_error = std::sqrt(var);
  return result;
}

EvidenceTarget make_model_target(const ModelSpec& spec,
                                 const RegressionData& data) {
  spec.validate();
  const std::size_t p = spec.n_params();
  const double sigma_scale = resolve_sigma_scale(spec, data);

  EvidenceTarget target;
  target.dim = p + 1;
  target.names = spec.param_names;
  target.names.push_back("log_sigma");
  // Same (centered params, log sigma) space as run_mcmc; the prior carries
  // the Jacobian terms so it stays normalized and the evidence integral is
  // untouched by the change of variables.
  const SamplingTransform transform = SamplingTransform::for_model(spec, data);
  target.log_prior = [spec, transform, sigma_scale,
                      p](std::span<const double> phi) {
    const double log_sigma = phi[p];
    if (log_sigma > 700.0) return kNegInf;
    const double sigma = std::exp(log_sigma);
    const auto theta = transform.to_natural(phi.first(p));
    return log_prior(spec, theta) + log_half_normal(sigma, sigma_scale) +
           log_sigma + transform.log_jacobian(phi.first(p));
  };
  target.log_likelihood = [spec, data, transform,
                           p](std::span<const double> phi) {
    const double sigma = std::exp(phi[p]);
    const auto theta = transform.to_natural(phi.first(p));
    return log_likelihood(spec, theta, sigma, data);
  };
  const auto start_natural = coarse_fit(spec, data, sigma_scale);
  const auto start = transform.to_sampling(std::span(start_natural).first(p));
  for (std::size_t j = 0; j < p; ++j) {
    const double spread =
        std::max(0.05 * std::abs(start[j]), 0.01 * spec.priors[j].sd);
    target.init_center.push_back(start[j]);
    target.init_jitter.push_back(spread);
    target.init_scales.push_back(spread);
  }
  target.init_center.push_back(std::log(start_natural[p]));
  target.init_jitter.push_back(0.1);
  target.init_scales.push_back(0.2);
  return target;
}

std::string to_string(Evidence e) {
  switch (e) {
    case Evidence::kDecisiveModel1: return "decisive evidence for Model 1";
    case Evidence::kStrongModel1: return "strong evidence for Model 1";
    case Evidence::kSubstantialModel1: return "substantial evidence for Model 1";
    case Evidence::kInconclusive: return "inconclusive";
    case Evidence::kSubstantialModel2: return "substantial evidence for Model 2";
    case Evidence::kStrongModel2: return "strong evidence for Model 2";
    case Evidence::kDecisiveModel2: return "decisive evidence for Model 2";
  }
  return "unknown";
}

Evidence interpret_bayes_factor(double log_bf_12) {
  const double mag = std::abs(log_bf_12);
  const bool favors_1 = log_bf_12 > 0.0;
  if (mag < std::log(3.0)) return Evidence::kInconclusive;
  if (mag < std::log(10.0)) {
    return favors_1 ? Evidence::kSubstantialModel1 : Evidence::kSubstantialModel2;
  }
  if (mag < std::log(100.0)) {
    return favors_1 ? Evidence::kStrongModel1 : Evidence::kStrongModel2;
  }
  return favors_1 ? Evidence::kDecisiveModel1 : Evidence::kDecisiveModel2;
}

ModelComparison bayes_factor(const std::string& model_1, double log_ml_1,
                             double mc_error_1, const std::string& model_2,
                             double log_ml_2, double mc_error_2) {
  ModelComparison cmp;
  cmp.model_1 = model_1;
  cmp.model_2 = model_2;
  cmp.log_ml_1 = log_ml_1;
  cmp.log_ml_2 = log_ml_2;
  cmp.log_bf_12 = log_ml_1 - log_ml_2;
  cmp.bf_12 = std::exp(cmp.log_bf_12);
  cmp.mc_error = std::sqrt(mc_error_1 * mc_error_1 + mc_error_2 * mc_error_2);
  cmp.interpretation = interpret_bayes_factor(cmp.log_bf_12);
  return cmp;
}

}  // namespace resilience
