#include "resilience/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "resilience/csv.hpp"
#include "resilience/errors.hpp"

namespace resilience {

double CorrelationMatrix::at(std::string_view row, std::string_view col) const {
  const auto find = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    throw std::out_of_range("no variable '" + std::string(name) + "'");
  };
  return values[find(row)][find(col)];
}

void CorrelationMatrix::write_csv(std::ostream& out) const {
  out << "variable";
  for (const auto& name : names) out << ',' << csv_escape(name);
  out << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << csv_escape(names[i]);
    for (std::size_t j = 0; j < names.size(); ++j) {
      out << ',' << format_double(values[i][j]);
    }
    out << '\n';
  }
}

CorrelationMatrix pearson_matrix(const FeatureTable& table,
                                 const std::vector<std::string>& columns) {
  const std::size_t n = table.n_rows();
  if (n < 3) {
    throw DataError("Pearson correlation needs at least 3 events, got " +
                    std::to_string(n));
  }
  const std::size_t p = columns.size();

  std::vector<std::vector<double>> centered(p);
  std::vector<double> sumsq(p, 0.0);
  CorrelationMatrix matrix;
  matrix.names = columns;
  matrix.n_events = n;
  for (std::size_t c = 0; c < p; ++c) {
    const auto& raw = table.column(columns[c]);
    double mean = 0.0;
    for (const double v : raw) mean += v;
    mean /= static_cast<double>(n);
    centered[c].resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      centered[c][r] = raw[r] - mean;
      sumsq[c] += centered[c][r] * centered[c][r];
    }
    if (sumsq[c] == 0.0) matrix.constant_columns.push_back(columns[c]);
  }

  matrix.values.assign(p, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    matrix.values[i][i] = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      double r = 0.0;
      if (sumsq[i] > 0.0 && sumsq[j] > 0.0) {
        double cross = 0.0;
        for (std::size_t k = 0; k < n; ++k) cross += centered[i][k] * centered[j][k];
        r = cross / std::sqrt(sumsq[i] * sumsq[j]);
        r = std::clamp(r, -1.0, 1.0);
      }
      matrix.values[i][j] = r;
      matrix.values[j][i] = r;
    }
  }
  return matrix;
}

DominantPredictors dominant_predictors(const CorrelationMatrix& matrix,
                                       const std::vector<std::string>& metric_names,
                                       std::size_t k) {
  const auto is_metric = [&](const std::string& name) {
    return std::find(metric_names.begin(), metric_names.end(), name) !=
           metric_names.end();
  };
  std::vector<std::size_t> metric_idx;
  for (std::size_t i = 0; i < matrix.names.size(); ++i) {
    if (is_metric(matrix.names[i])) metric_idx.push_back(i);
  }
  if (metric_idx.size() != metric_names.size()) {
    throw DataError("correlation matrix is missing a requested metric");
  }

  DominantPredictors result;
  for (std::size_t i = 0; i < matrix.names.size(); ++i) {
    if (is_metric(matrix.names[i])) continue;
    PredictorRank rank;
    rank.name = matrix.names[i];
    for (const std::size_t m : metric_idx) {
      const double r = matrix.values[i][m];
      if (std::abs(r) > rank.max_abs_r) {
        rank.max_abs_r = std::abs(r);
        rank.r = r;
        rank.against_metric = matrix.names[m];
      }
    }
    if (rank.against_metric.empty() && !metric_idx.empty()) {
      rank.against_metric = matrix.names[metric_idx.front()];
    }
    result.ranking.push_back(std::move(rank));
  }

  result.degenerate = std::all_of(
      result.ranking.begin(), result.ranking.end(),
      [](const PredictorRank& r) { return r.max_abs_r == 0.0; });

  // Stable: ties keep matrix column order.
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [](const PredictorRank& a, const PredictorRank& b) {
                     return a.max_abs_r > b.max_abs_r;
                   });
  if (result.ranking.size() > k) result.ranking.resize(k);
  return result;
}

}  // namespace resilience
