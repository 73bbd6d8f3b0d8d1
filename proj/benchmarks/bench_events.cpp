#include <benchmark/benchmark.h>

#include <vector>

#include "resilience/correlation.hpp"
#include "resilience/events.hpp"
#include "resilience/rng.hpp"
#include "resilience/timegrid.hpp"

namespace {

using namespace resilience;

TimeGrid synthetic_outage_grid(std::size_t bins) {
  GridSpec spec;
  spec.start = Timestamp{1514764800};  // 2018-01-01
  spec.step_secs = 900;
  spec.length = bins;
  TimeGrid grid(spec);
  Rng rng(7);
  std::vector<double> values(bins, 0.0);
  std::size_t k = 0;
  while (k < bins) {
    const std::size_t len = 1 + rng.uniform_int(24);
    const double level =
        rng.uniform() < 0.5 ? 0.0 : std::floor(rng.uniform() * 400.0);
    for (std::size_t i = 0; i < len && k < bins; ++i, ++k) values[k] = level;
  }
  grid.set_series("customers_out", std::move(values),
                  std::vector<std::uint8_t>(bins, 0));
  return grid;
}

void BM_EventExtraction(benchmark::State& state) {
  const auto grid = synthetic_outage_grid(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto events = filter_significant(grid, group_pre_events(grid), 50);
    benchmark::DoNotOptimize(events);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EventExtraction)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);

void BM_ResampleOutages(benchmark::State& state) {
  const auto bins = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<OutageRecord> records;
  Timestamp t{1514764800};
  for (std::size_t i = 0; i < bins; ++i) {
    if (rng.uniform() < 0.8) {
      records.push_back({t, "Illinois", "Cook",
                         static_cast<long long>(rng.uniform_int(1000))});
    }
    t = t + 900;
  }
  GridSpec spec;
  spec.start = Timestamp{1514764800};
  spec.step_secs = 900;
  spec.length = bins;
  for (auto _ : state) {
    TimeGrid grid(spec);
    resample_outages(records, grid, 3);
    benchmark::DoNotOptimize(grid);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ResampleOutages)->Arg(1 << 12)->Arg(1 << 16);

void BM_PearsonMatrix(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  Rng rng(11);
  const std::vector<std::string> names{"a", "b", "c", "d", "e"};
  FeatureTable table(names);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> row;
    for (std::size_t c = 0; c < names.size(); ++c) row.push_back(rng.normal());
    table.add_row(row);
  }
  for (auto _ : state) {
    auto matrix = pearson_matrix(table, names);
    benchmark::DoNotOptimize(matrix);
  }
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_PearsonMatrix)->Arg(100)->Arg(10000);

}  // namespace
