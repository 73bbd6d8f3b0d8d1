#include <benchmark/benchmark.h>

#include <cmath>

#include "resilience/mcmc.hpp"
#include "resilience/model.hpp"
#include "resilience/rng.hpp"

namespace {

using namespace resilience;

RegressionData synthetic_rows(std::size_t n) {
  Rng rng(5);
  RegressionData data;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = rng.uniform() * 60.0;
    data.x.push_back({w});
    data.y.push_back(0.02 * std::exp(0.07 * w) + 0.002 * rng.normal());
  }
  return data;
}

void BM_LogPosterior(benchmark::State& state) {
  const auto data = synthetic_rows(static_cast<std::size_t>(state.range(0)));
  auto spec = ModelSpec::single_exp("w", "r");
  const std::vector<double> theta{0.02, 0.07, 0.0, 0.002};
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_posterior(spec, theta, 0.01, data));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogPosterior)->Arg(50)->Arg(200)->Arg(1000);

void BM_AdaptiveChain(benchmark::State& state) {
  const auto data = synthetic_rows(200);
  auto spec = ModelSpec::single_exp("w", "r");
  spec.sigma_scale = 0.01;

  TargetDensity target;
  target.dim = 4;
  target.log_density = [&](std::span<const double> phi) {
    std::vector<double> theta(phi.begin(), phi.end());
    const double log_sigma = theta[3];
    theta[3] = std::exp(log_sigma);
    return log_posterior(spec, theta, 0.01, data) + log_sigma;
  };
  target.init_center = {0.0, 0.0, 0.0, std::log(0.01)};
  target.init_jitter = {0.1, 0.1, 0.1, 0.2};
  target.init_scales = {1.0, 0.1, 1.0, 0.2};

  const int iterations = static_cast<int>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto run = run_chain(target, iterations / 2, iterations / 2, 0.234, seed++);
    benchmark::DoNotOptimize(run);
  }
  state.SetItemsProcessed(state.iterations() * iterations);
}
BENCHMARK(BM_AdaptiveChain)->Arg(1000)->Arg(4000);

}  // namespace
