#include "resilience/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "resilience/errors.hpp"
#include "resilience/rng.hpp"

namespace resilience {

std::vector<std::size_t> largest_remainder(const std::vector<double>& targets) {
  double total = 0.0;
  for (const double t : targets) total += t;
  const auto want = static_cast<std::size_t>(std::llround(total));

  std::vector<std::size_t> counts(targets.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t allocated = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    counts[i] = static_cast<std::size_t>(std::floor(targets[i]));
    allocated += counts[i];
    remainders.emplace_back(targets[i] - std::floor(targets[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; allocated < want && i < remainders.size(); ++i) {
    ++counts[remainders[i].second];
    ++allocated;
  }
  return counts;
}

namespace {

/// Splits one shuffled index pool: test first, then train/val on the rest.
void split_pool(std::vector<std::size_t> pool, double test_frac,
                double val_frac_of_rest, SplitIndices& out) {
  const auto n = static_cast<double>(pool.size());
  const auto test_counts =
      largest_remainder({n * (1.0 - test_frac), n * test_frac});
  const std::size_t n_rest = test_counts[0];
  const auto rest = static_cast<double>(n_rest);
  const auto tv_counts = largest_remainder(
      {rest * (1.0 - val_frac_of_rest), rest * val_frac_of_rest});

  std::size_t i = 0;
  for (std::size_t k = 0; k < tv_counts[0]; ++k) out.train.push_back(pool[i++]);
  for (std::size_t k = 0; k < tv_counts[1]; ++k) out.val.push_back(pool[i++]);
  while (i < pool.size()) out.test.push_back(pool[i++]);
}

}  // namespace

SplitIndices split_data(const FeatureTable& table, std::uint64_t seed,
                        double test_frac, double val_frac_of_rest,
                        const std::string& stratify_column) {
  const std::size_t n = table.n_rows();
  if (n < 10) {
    throw DataError("split needs at least 10 rows, got " + std::to_string(n));
  }
  if (!(test_frac > 0.0 && test_frac < 1.0) ||
      !(val_frac_of_rest > 0.0 && val_frac_of_rest < 1.0)) {
    throw ConfigError("split fractions must lie in (0, 1)");
  }

  SplitIndices out;
  std::map<long long, std::vector<std::size_t>> strata;
  if (table.index_of(stratify_column)) {
    const auto& col = table.column(stratify_column);
    for (std::size_t r = 0; r < n; ++r) {
      strata[static_cast<long long>(std::llround(col[r]))].push_back(r);
    }
  } else {
    strata[0].resize(n);
    std::iota(strata[0].begin(), strata[0].end(), std::size_t{0});
  }

  bool stratify = strata.size() > 1;
  for (const auto& [label, rows] : strata) {
    if (rows.size() < 3) {
      stratify = false;
      out.warning = "stratum " + std::to_string(label) + " has only " +
                    std::to_string(rows.size()) +
                    " rows; stratification disabled";
    }
  }
  if (!stratify && strata.size() > 1) {
    std::vector<std::size_t> all;
    all.reserve(n);
    for (auto& [label, rows] : strata) {
      all.insert(all.end(), rows.begin(), rows.end());
    }
    std::sort(all.begin(), all.end());
    strata.clear();
    strata[0] = std::move(all);
  }
  out.stratified = stratify;

  Rng rng(derive_seed(seed, "split"));
  for (auto& [label, rows] : strata) {
    rng.shuffle(rows);
    split_pool(std::move(rows), test_frac, val_frac_of_rest, out);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

double rmse(const std::vector<double>& residuals) {
  if (residuals.empty()) throw DataError("RMSE of an empty split");
  double ss = 0.0;
  for (const double r : residuals) ss += r * r;
  return std::sqrt(ss / static_cast<double>(residuals.size()));
}

double mae(const std::vector<double>& residuals) {
  if (residuals.empty()) throw DataError("MAE of an empty split");
  double s = 0.0;
  for (const double r : residuals) s += std::abs(r);
  return s / static_cast<double>(residuals.size());
}

std::vector<double> prediction_residuals(const ModelSpec& spec,
                                         const PosteriorResult& posterior,
                                         const FeatureTable& split,
                                         bool predictive_mean) {
  if (split.n_rows() == 0) {
    throw DataError("model '" + spec.id + "': evaluation split is empty");
  }
  const RegressionData data = make_regression_data(spec, split);
  const std::size_t p = spec.n_params();
  std::vector<double> residuals(data.n_rows());
  if (!predictive_mean) {
    const auto params = posterior.mean_params();
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
      residuals[r] = data.y[r] - model_predict(spec, params, data.x[r]);
    }
  } else {
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& chain : posterior.chains) {
        for (std::size_t i = 0; i < chain.n_draws; ++i) {
          sum += model_predict(spec, chain.row(i).first(p), data.x[r]);
          ++count;
        }
      }
      residuals[r] = data.y[r] - sum / static_cast<double>(count);
    }
  }
  return residuals;
}

EvalReport evaluate(const ModelSpec& spec, const PosteriorResult& posterior,
                    std::size_t n_train, const FeatureTable& val,
                    const FeatureTable& test, bool predictive_mean) {
  const auto val_residuals =
      prediction_residuals(spec, posterior, val, predictive_mean);
  const auto test_residuals =
      prediction_residuals(spec, posterior, test, predictive_mean);
  EvalReport report;
  report.model_id = spec.id;
  report.n_train = n_train;
  report.n_val = val.n_rows();
  report.n_test = test.n_rows();
  report.rmse_val = rmse(val_residuals);
  report.mae_val = mae(val_residuals);
  report.rmse_test = rmse(test_residuals);
  report.mae_test = mae(test_residuals);
  return report;
}

}  // namespace resilience
