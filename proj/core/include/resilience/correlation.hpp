#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "resilience/events.hpp"

namespace resilience {

struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // symmetric, unit diagonal
  std::size_t n_events = 0;
  std::vector<std::string> constant_columns;  // zero-variance columns, r forced to 0

  double at(std::size_t i, std::size_t j) const { return values[i][j]; }
  double at(std::string_view row, std::string_view col) const;

  /// CSV with a leading `variable` column and one column per variable.
  void write_csv(std::ostream& out) const;
};

/// Pearson product-moment correlations over the selected numeric columns.
/// Fewer than 3 rows is fatal. Constant columns correlate 0 with everything
/// (flagged in constant_columns) instead of producing NaN.
CorrelationMatrix pearson_matrix(const FeatureTable& table,
                                 const std::vector<std::string>& columns);

struct PredictorRank {
  std::string name;
  double max_abs_r = 0.0;
  double r = 0.0;                // signed value attaining max |r|
  std::string against_metric;   // metric of that value
};

struct DominantPredictors {
  std::vector<PredictorRank> ranking;
  bool degenerate = false;  // every candidate tied at |r| = 0, input order kept
};

/// Ranks non-metric variables by their strongest |r| against any metric,
/// descending; ties keep matrix column order. k larger than the candidate
/// count returns all candidates.
DominantPredictors dominant_predictors(const CorrelationMatrix& matrix,
                                       const std::vector<std::string>& metric_names,
                                       std::size_t k);

}  // namespace resilience
