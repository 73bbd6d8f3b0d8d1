#include "resilience/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>
#include <stdexcept>

#include "resilience/csv.hpp"
#include "resilience/errors.hpp"
#include "resilience/rng.hpp"

namespace resilience {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double variance(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

double mean_of(const std::vector<double>& v) {
  double m = 0.0;
  for (const double x : v) m += x;
  return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

/// Autocovariance at lag t with 1/n normalization.
double autocov(const std::vector<double>& x, double mean, std::size_t lag) {
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i) {
    s += (x[i] - mean) * (x[i + lag] - mean);
  }
  return s / static_cast<double>(n);
}

}  // namespace

ChainRun run_chain(const TargetDensity& target, int n_warmup, int n_draws,
                   double target_accept, std::uint64_t chain_seed) {
  const std::size_t d = target.dim;
  Rng rng(chain_seed);

  std::vector<double> theta(d);
  double lp = kNegInf;
  for (int attempt = 0; attempt < 100 && !std::isfinite(lp); ++attempt) {
    for (std::size_t j = 0; j < d; ++j) {
      theta[j] = target.init_center[j] + target.init_jitter[j] * rng.normal();
    }
    lp = target.log_density(theta);
  }
  if (!std::isfinite(lp)) {
    throw ConvergenceError(
        "could not find a finite-density starting point after 100 attempts");
  }

  std::vector<double> scales = target.init_scales;
  double log_step = 0.0;

  // Warmup runs in two phases. Phase A sweeps one coordinate at a time with
  // per-coordinate Robbins-Monro step tuning, which self-corrects even when
  // the initial scales are off by orders of magnitude. Phase B switches to
  // the joint diagonal proposal: the global log step follows Robbins-Monro
  // toward target_accept while the per-coordinate scales track the running
  // sd of the chain (accumulators reset at the phase boundary and at half of
  // warmup so the transit does not contaminate them). Everything freezes at
  // the end of warmup.
  const int phase_a_end = n_warmup / 4;
  const int reset_2 = n_warmup / 2;
  std::vector<double> run_mean(theta), run_m2(d, 0.0);
  std::size_t run_n = 1;

  ChainRun result;
  result.draws.n_params = d;
  result.draws.n_draws = static_cast<std::size_t>(n_draws);
  result.draws.data.reserve(static_cast<std::size_t>(n_draws) * d);

  std::vector<double> proposal(d);
  std::size_t accepted_post = 0;
  const int total = n_warmup + n_draws;
  for (int t = 0; t < total; ++t) {
    const bool warming = t < n_warmup;
    const double gamma = std::pow(static_cast<double>(t + 1), -0.6);

    if (warming && t < phase_a_end) {
      proposal = theta;
      for (std::size_t j = 0; j < d; ++j) {
        proposal[j] = theta[j] + scales[j] * rng.normal();
        const double lp_prop = target.log_density(proposal);
        double alpha = 0.0;
        if (std::isfinite(lp_prop)) {
          alpha = lp_prop >= lp ? 1.0 : std::exp(lp_prop - lp);
        }
        if (rng.uniform() < alpha) {
          theta[j] = proposal[j];
          lp = lp_prop;
        } else {
          proposal[j] = theta[j];
        }
        // 0.44 is the standard single-coordinate acceptance target.
        scales[j] *= std::exp(gamma * (alpha - 0.44));
        scales[j] = std::clamp(scales[j], 1e-300, 1e300);
      }
    } else {
      const double step = std::exp(log_step);
      for (std::size_t j = 0; j < d; ++j) {
        proposal[j] = theta[j] + step * scales[j] * rng.normal();
      }
      const double lp_prop = target.log_density(proposal);
      double alpha = 0.0;
      if (std::isfinite(lp_prop)) {
        alpha = lp_prop >= lp ? 1.0 : std::exp(lp_prop - lp);
      }
      if (rng.uniform() < alpha) {
        theta = proposal;
        lp = lp_prop;
        if (!warming) ++accepted_post;
      }
      if (warming) {
        log_step += gamma * (alpha - target_accept);
        log_step = std::clamp(log_step, -20.0, 20.0);
      }
    }

    if (warming) {
      if (t == phase_a_end || t == reset_2) {
        run_mean = theta;
        std::fill(run_m2.begin(), run_m2.end(), 0.0);
        run_n = 1;
      }
      ++run_n;
      for (std::size_t j = 0; j < d; ++j) {
        const double delta = theta[j] - run_mean[j];
        run_mean[j] += delta / static_cast<double>(run_n);
        run_m2[j] += delta * (theta[j] - run_mean[j]);
      }
      if (t >= phase_a_end && run_n >= 50) {
        for (std::size_t j = 0; j < d; ++j) {
          const double var = run_m2[j] / static_cast<double>(run_n - 1);
          if (var > 0.0) scales[j] = std::sqrt(var);
        }
      }
    } else {
      result.draws.data.insert(result.draws.data.end(), theta.begin(),
                               theta.end());
    }
  }

  result.acceptance =
      n_draws > 0 ? static_cast<double>(accepted_post) / n_draws : 0.0;
  result.proposal_scales = std::move(scales);
  result.log_step = log_step;
  result.final_log_density = lp;
  return result;
}

void check_chains_alive(const std::vector<ChainRun>& runs) {
  std::ostringstream dead;
  for (std::size_t c = 0; c < runs.size(); ++c) {
    if (runs[c].draws.n_draws > 0 && runs[c].acceptance == 0.0) {
      dead << "chain " << c << ": acceptance 0, log step "
           << format_double(runs[c].log_step) << ", final log density "
           << format_double(runs[c].final_log_density) << "; ";
    }
  }
  if (!dead.str().empty()) {
    throw ConvergenceError("all proposals rejected: " + dead.str());
  }
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& chain : chains) {
    const std::size_t half = chain.size() / 2;
    if (half < 2) continue;
    halves.emplace_back(chain.begin(), chain.begin() + half);
    halves.emplace_back(chain.begin() + half, chain.begin() + 2 * half);
  }
  if (halves.size() < 2) return 1.0;
  const auto n = static_cast<double>(halves.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    const double m = mean_of(h);
    means.push_back(m);
    w += variance(h, m);
  }
  w /= static_cast<double>(halves.size());
  const double b_over_n = variance(means, mean_of(means));
  if (w <= 0.0) return b_over_n > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m == 0) return 0.0;
  const std::size_t n = chains.front().size();
  if (n < 4) return static_cast<double>(m * n);

  std::vector<double> means(m);
  double w = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    w += autocov(chains[c], means[c], 0);
  }
  w /= static_cast<double>(m);
  double var_plus = w * static_cast<double>(n - 1) / static_cast<double>(n);
  if (m > 1) var_plus += variance(means, mean_of(means));
  if (var_plus <= 0.0) return static_cast<double>(m * n);

  const auto rho_at = [&](std::size_t lag) {
    double g = 0.0;
    for (std::size_t c = 0; c < m; ++c) g += autocov(chains[c], means[c], lag);
    g /= static_cast<double>(m);
    return 1.0 - (w - g) / var_plus;
  };

  // Geyer initial monotone sequence over paired autocorrelations.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho_at(2 * k) + rho_at(2 * k + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
    if (tau > 10.0 * static_cast<double>(n)) break;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(10 * m * n));
  const double ess = static_cast<double>(m * n) / tau;
  return std::min(ess, static_cast<double>(m * n));
}

std::size_t PosteriorResult::n_total_draws() const {
  std::size_t total = 0;
  for (const auto& c : chains) total += c.n_draws;
  return total;
}

std::vector<double> PosteriorResult::mean_params() const {
  std::vector<double> params;
  for (const auto& s : summaries) {
    if (s.name != "sigma") params.push_back(s.mean);
  }
  return params;
}

const ParamSummary& PosteriorResult::summary(std::string_view name) const {
  for (const auto& s : summaries) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("no parameter '" + std::string(name) + "'");
}

PosteriorResult run_mcmc_on_data(const ModelSpec& spec, const RegressionData& data,
                                 const McmcConfig& config) {
  spec.validate();
  if (config.n_chains < 2) throw ConfigError("n_chains must be at least 2");
  if (data.n_rows() < 10 && !config.force) {
    throw DataError("model '" + spec.id + "': only " +
                    std::to_string(data.n_rows()) +
                    " rows; at least 10 required (use --force to override)");
  }

  const std::size_t p = spec.n_params();
  const double sigma_scale = resolve_sigma_scale(spec, data);

  // Sample in (centered params, log sigma) space; the Jacobians keep both
  // the Normal priors and the Half-Normal noise prior exact on the natural
  // scale.
  const SamplingTransform transform = SamplingTransform::for_model(spec, data);
  TargetDensity target;
  target.dim = p + 1;
  target.names = spec.param_names;
  target.names.push_back("log_sigma");
  target.log_density = [&spec, &data, &transform, sigma_scale,
                        p](std::span<const double> phi) {
    const double log_sigma = phi[p];
    if (log_sigma > 700.0) return kNegInf;
    auto theta = transform.to_natural(phi.first(p));
    theta.push_back(std::exp(log_sigma));
    return log_posterior(spec, theta, sigma_scale, data) + log_sigma +
           transform.log_jacobian(phi.first(p));
  };
  // Center the chains on a deterministic coarse fit (prior means when there
  // is no data); per-chain jitter keeps the starts distinct.
  const auto start_natural = coarse_fit(spec, data, sigma_scale);
  const auto start =
      transform.to_sampling(std::span(start_natural).first(p));
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

  std::vector<std::future<ChainRun>> futures;
  futures.reserve(static_cast<std::size_t>(config.n_chains));
  for (int c = 0; c < config.n_chains; ++c) {
    const std::uint64_t chain_seed =
        derive_seed(config.seed, "mcmc-chain", static_cast<std::uint64_t>(c));
    futures.push_back(std::async(std::launch::async, [&target, &config,
                                                      chain_seed]() {
      return run_chain(target, config.n_warmup, config.n_draws,
                       config.target_accept, chain_seed);
    }));
  }

  PosteriorResult result;
  result.model_id = spec.id;
  result.param_names = spec.param_names;
  result.param_names.push_back("sigma");
  result.sigma_scale = sigma_scale;
  result.n_data_rows = data.n_rows();

  std::vector<ChainRun> runs;
  runs.reserve(futures.size());
  for (auto& f : futures) runs.push_back(f.get());
  check_chains_alive(runs);

  for (auto& run : runs) {
    // Map draws back to the natural parameterization for storage, summaries
    // and diagnostics.
    DrawMatrix draws;
    draws.n_draws = run.draws.n_draws;
    draws.n_params = run.draws.n_params;
    draws.data.reserve(run.draws.data.size());
    for (std::size_t i = 0; i < draws.n_draws; ++i) {
      const auto row = run.draws.row(i);
      const auto theta = transform.to_natural(row.first(p));
      draws.data.insert(draws.data.end(), theta.begin(), theta.end());
      draws.data.push_back(std::exp(row[p]));
    }
    result.chains.push_back(std::move(draws));
    result.chain_acceptance.push_back(run.acceptance);
  }
  result.acceptance_rate = mean_of(result.chain_acceptance);

  for (std::size_t j = 0; j <= p; ++j) {
    std::vector<std::vector<double>> per_chain;
    std::vector<double> all;
    for (const auto& chain : result.chains) {
      std::vector<double> series(chain.n_draws);
      for (std::size_t i = 0; i < chain.n_draws; ++i) series[i] = chain.at(i, j);
      all.insert(all.end(), series.begin(), series.end());
      per_chain.push_back(std::move(series));
    }
    ParamSummary s;
    s.name = result.param_names[j];
    s.mean = mean_of(all);
    s.sd = std::sqrt(variance(all, s.mean));
    s.q025 = quantile(all, 0.025);
    s.q975 = quantile(all, 0.975);
    s.rhat = split_rhat(per_chain);
    s.ess = effective_sample_size(per_chain);
    if (s.rhat > config.rhat_warn_limit) result.convergence_warning = true;
    result.summaries.push_back(std::move(s));
  }

  // Count exponent clamps once over the kept draws.
  ClampStats clamps;
  if (data.n_rows() > 0) {
    for (const auto& chain : result.chains) {
      for (std::size_t i = 0; i < chain.n_draws; ++i) {
        const auto theta = chain.row(i);
        log_likelihood(spec, theta.first(p), theta[p], data, &clamps);
      }
    }
  }
  result.clamps = clamps;
  return result;
}

PosteriorResult run_mcmc(const ModelSpec& spec, const FeatureTable& table,
                         const McmcConfig& config) {
  const RegressionData data = make_regression_data(spec, table);
  return run_mcmc_on_data(spec, data, config);
}

PredictiveBand posterior_predictive(const PosteriorResult& result,
                                    const ModelSpec& spec,
                                    const std::vector<std::vector<double>>& grid,
                                    std::uint64_t seed) {
  const std::size_t p = spec.n_params();
  Rng rng(derive_seed(seed, "posterior-predictive"));
  PredictiveBand band;
  band.points = grid;
  const std::size_t total_draws = result.n_total_draws();
  std::vector<double> samples;
  samples.reserve(total_draws);
  for (const auto& point : grid) {
    samples.clear();
    for (const auto& chain : result.chains) {
      for (std::size_t i = 0; i < chain.n_draws; ++i) {
        const auto theta = chain.row(i);
        const double pred = model_predict(spec, theta.first(p), point);
        const double sigma = theta[p];
        samples.push_back(pred + sigma * rng.normal());
      }
    }
    band.mean.push_back(mean_of(samples));
    band.median.push_back(quantile(samples, 0.5));
    band.lo95.push_back(quantile(samples, 0.025));
    band.hi95.push_back(quantile(samples, 0.975));
  }
  return band;
}

}  // namespace resilience
