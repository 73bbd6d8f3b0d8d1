#include "resilience/events.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "resilience/csv.hpp"
#include "resilience/errors.hpp"

namespace resilience {

std::vector<BinSpan> group_pre_events(const TimeGrid& grid,
                                      std::int64_t gap_secs) {
  const auto values = grid.values("customers_out");
  std::vector<BinSpan> spans;
  std::optional<std::size_t> prev_nonzero;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] <= 0.0) continue;
    if (prev_nonzero &&
        grid.time_at(k) - grid.time_at(*prev_nonzero) < gap_secs) {
      spans.back().last = k;
    } else {
      spans.push_back({k, k});
    }
    prev_nonzero = k;
  }
  return spans;
}

std::vector<OutageEvent> filter_significant(const TimeGrid& grid,
                                            const std::vector<BinSpan>& spans,
                                            long long magnitude_threshold,
                                            std::int64_t gap_secs) {
  const auto values = grid.values("customers_out");
  const double threshold = static_cast<double>(magnitude_threshold);
  std::vector<OutageEvent> events;

  for (const auto& span : spans) {
    // Above-threshold bins inside the pre-event, grouped by the same gap
    // rule applied to below-threshold stretches.
    std::optional<std::size_t> group_first;
    std::size_t group_last = 0;
    const auto close_group = [&]() {
      if (!group_first) return;
      OutageEvent event;
      event.first_bin = *group_first;
      event.last_bin = group_last;
      event.start = grid.time_at(event.first_bin);
      event.end = grid.time_at(event.last_bin) + grid.step_secs();
      event.curve.assign(values.begin() + static_cast<std::ptrdiff_t>(event.first_bin),
                         values.begin() + static_cast<std::ptrdiff_t>(event.last_bin) + 1);
      event.censored = event.last_bin + 1 == grid.length();
      events.push_back(std::move(event));
      group_first.reset();
    };

    for (std::size_t k = span.first; k <= span.last; ++k) {
      if (values[k] <= threshold) continue;
      if (group_first &&
          grid.time_at(k) - grid.time_at(group_last) >= gap_secs) {
        close_group();
      }
      if (!group_first) group_first = k;
      group_last = k;
    }
    close_group();
  }
  return events;
}

void compute_metrics(OutageEvent& event, long long county_total_customers,
                     std::int64_t step_secs, CustomerOutMode mode) {
  if (county_total_customers <= 0) {
    throw ConfigError("county_total_customers must be positive");
  }
  const double step_hours = static_cast<double>(step_secs) / 3600.0;
  double sum = 0.0;
  double peak = 0.0;
  double cum = event.curve.empty() ? 0.0 : event.curve.front();
  for (std::size_t i = 0; i < event.curve.size(); ++i) {
    sum += event.curve[i];
    peak = std::max(peak, event.curve[i]);
    if (i > 0 && event.curve[i] > event.curve[i - 1]) {
      cum += event.curve[i] - event.curve[i - 1];
    }
  }
  event.auc_customer_hours = sum * step_hours;
  event.peak_customers_out = static_cast<long long>(std::llround(peak));
  event.cum_customers_out = cum;
  const double numerator = mode == CustomerOutMode::kPeak ? peak : cum;
  event.norm_customers_out =
      numerator / static_cast<double>(county_total_customers);
}

void attach_weather_features(OutageEvent& event, const TimeGrid& weather_grid) {
  if (!weather_grid.has_series("wind_gust")) {
    throw DataError("weather grid has no aligned series");
  }
  // Re-resolve the event bins on the weather grid; it need not be the grid
  // the event was extracted from.
  const auto first = weather_grid.bin_of(event.start);
  const auto last = weather_grid.bin_of(event.end - weather_grid.step_secs());
  if (!first || !last || *last < *first) {
    throw DataError("weather grid does not cover event window " +
                    format_timestamp(event.start) + " .. " +
                    format_timestamp(event.end));
  }
  const auto gust = weather_grid.values("wind_gust");
  const auto temp = weather_grid.values("air_temp");
  const auto precip = weather_grid.values("precip_occ");
  double peak_gust = gust[*first];
  double peak_temp = temp[*first];
  double min_temp = temp[*first];
  int flag = 0;
  for (std::size_t k = *first; k <= *last; ++k) {
    peak_gust = std::max(peak_gust, gust[k]);
    peak_temp = std::max(peak_temp, temp[k]);
    min_temp = std::min(min_temp, temp[k]);
    if (precip[k] > 0.0) flag = 1;
  }
  event.peak_wind_gust = peak_gust;
  event.peak_air_temp = peak_temp;
  event.min_air_temp = min_temp;
  event.precip_flag = flag;
}

FeatureTable::FeatureTable(std::vector<std::string> columns)
    : columns_(std::move(columns)), data_(columns_.size()) {}

std::optional<std::size_t> FeatureTable::index_of(std::string_view column) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == column) return i;
  }
  return std::nullopt;
}

void FeatureTable::add_row(std::span<const double> values) {
  if (values.size() != columns_.size()) {
    throw std::invalid_argument("row width does not match column count");
  }
  for (std::size_t i = 0; i < values.size(); ++i) data_[i].push_back(values[i]);
}

const std::vector<double>& FeatureTable::column(std::string_view name) const {
  const auto idx = index_of(name);
  if (!idx) throw std::out_of_range("no column '" + std::string(name) + "'");
  return data_[*idx];
}

FeatureTable FeatureTable::select_rows(const std::vector<std::size_t>& rows) const {
  FeatureTable out(columns_);
  std::vector<double> row(columns_.size());
  for (const std::size_t r : rows) {
    for (std::size_t c = 0; c < columns_.size(); ++c) row[c] = data_[c][r];
    out.add_row(row);
  }
  return out;
}

void FeatureTable::write_csv(std::ostream& out) const {
  out << csv_join(columns_) << '\n';
  for (std::size_t r = 0; r < n_rows(); ++r) {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (c > 0) out << ',';
      out << format_double(data_[c][r]);
    }
    out << '\n';
  }
}

FeatureTable FeatureTable::read_csv(std::istream& in,
                                    const std::vector<std::string>& expected) {
  CsvReader reader(in);
  const auto header = reader.next();
  if (!header) throw DataError("feature table is empty");
  std::vector<std::string> columns;
  for (const auto& field : header->fields) {
    columns.emplace_back(trim(field));
  }
  if (!expected.empty() && columns != expected) {
    throw DataError("feature table header does not match expected columns");
  }
  FeatureTable table(columns);
  std::vector<double> row(columns.size());
  while (auto csv_row = reader.next()) {
    if (csv_row->fields.size() != columns.size()) {
      throw DataError("feature table row " + std::to_string(csv_row->line_number) +
                      " has wrong column count");
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto v = parse_double(csv_row->fields[c]);
      if (!v) {
        throw DataError("feature table row " +
                        std::to_string(csv_row->line_number) +
                        " has non-numeric cell in '" + columns[c] + "'");
      }
      row[c] = *v;
    }
    table.add_row(row);
  }
  return table;
}

const std::vector<std::string>& event_feature_columns() {
  static const std::vector<std::string> columns{
      "event_id",     "peak_wind_gust",     "peak_air_temp",
      "precip_flag", "auc_customer_hours", "norm_customers_out"};
  return columns;
}

FeatureTable build_feature_table(const std::vector<OutageEvent>& events,
                                 bool include_min_temp) {
  auto columns = event_feature_columns();
  if (include_min_temp) columns.push_back("min_air_temp");
  FeatureTable table(columns);
  std::vector<double> row;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    row = {static_cast<double>(i + 1), e.peak_wind_gust, e.peak_air_temp,
           static_cast<double>(e.precip_flag), e.auc_customer_hours,
           e.norm_customers_out};
    if (include_min_temp) row.push_back(e.min_air_temp);
    table.add_row(row);
  }
  return table;
}

}  // namespace resilience
