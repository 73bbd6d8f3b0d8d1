#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resilience/time.hpp"
#include "resilience/timegrid.hpp"

namespace resilience {

/// One significant outage event. The curve covers the grid bins from the
/// first above-threshold bin through the last one (interior dips included
/// when excursions merge); `end` is the timestamp of the first bin after the
/// curve, i.e. where the count is back below threshold.
struct OutageEvent {
  Timestamp start;
  Timestamp end;
  std::size_t first_bin = 0;
  std::size_t last_bin = 0;
  std::vector<double> curve;
  bool censored = false;  // series ended while still above threshold

  double auc_customer_hours = 0.0;
  long long peak_customers_out = 0;
  double norm_customers_out = 0.0;
  double cum_customers_out = 0.0;  // sum of positive jumps, optional metric

  double peak_wind_gust = 0.0;
  double peak_air_temp = 0.0;
  double min_air_temp = 0.0;
  int precip_flag = 0;
};

/// Inclusive bin-index span.
struct BinSpan {
  std::size_t first = 0;
  std::size_t last = 0;
};

/// Groups bins with nonzero outage activity into pre-events: consecutive
/// nonzero bins whose timestamps differ by less than `gap_secs` stay
/// together; a gap of `gap_secs` or more starts a new span.
std::vector<BinSpan> group_pre_events(const TimeGrid& grid,
                                      std::int64_t gap_secs = 3 * kSecondsPerHour);

/// Filters pre-events to significant events. Above-threshold means strictly
/// greater than `magnitude_threshold`; a count equal to the threshold is
/// below. Excursions inside a pre-event merge into one event unless
/// separated by `gap_secs` or more below the threshold. Returns events with
/// boundaries and curves set; metrics and weather features still empty.
std::vector<OutageEvent> filter_significant(const TimeGrid& grid,
                                            const std::vector<BinSpan>& spans,
                                            long long magnitude_threshold = 50,
                                            std::int64_t gap_secs = 3 *
                                                                    kSecondsPerHour);

enum class CustomerOutMode { kPeak, kCumulative };

/// Fills auc_customer_hours (left-step integration, exact under
/// sample-and-hold), peak and normalized customer-out.
void compute_metrics(OutageEvent& event, long long county_total_customers,
                     std::int64_t step_secs,
                     CustomerOutMode mode = CustomerOutMode::kPeak);

/// Fills peak weather values and the precipitation flag from the aligned
/// grid. The grid must cover every event bin.
void attach_weather_features(OutageEvent& event, const TimeGrid& weather_grid);

/// Named-column numeric table; the regression dataset and the contract file
/// between the extraction half and the inference half of the pipeline.
class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t n_rows() const { return data_.empty() ? 0 : data_[0].size(); }
  std::optional<std::size_t> index_of(std::string_view column) const;

  void add_row(std::span<const double> values);
  double at(std::size_t row, std::size_t col) const { return data_[col][row]; }
  const std::vector<double>& column(std::string_view name) const;

  FeatureTable select_rows(const std::vector<std::size_t>& rows) const;

  void write_csv(std::ostream& out) const;
  /// Strict read: the header must list exactly the expected column names
  /// when `expected` is non-empty.
  static FeatureTable read_csv(std::istream& in,
                               const std::vector<std::string>& expected = {});

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> data_;  // column-major
};

/// Canonical event feature columns, in contract order.
const std::vector<std::string>& event_feature_columns();

/// One row per event: event_id, peak_wind_gust, peak_air_temp, precip_flag,
/// auc_customer_hours, norm_customers_out. Ids are 1-based in event order.
/// With `include_min_temp` an extra min_air_temp column is appended.
FeatureTable build_feature_table(const std::vector<OutageEvent>& events,
                                 bool include_min_temp = false);

}  // namespace resilience
