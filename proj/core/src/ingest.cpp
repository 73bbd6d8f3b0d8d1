#include "resilience/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "resilience/csv.hpp"
#include "resilience/errors.hpp"

namespace resilience {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return lower(trim(a)) == lower(trim(b));
}

/// Header name -> field index, case-insensitive and trimmed.
class HeaderIndex {
 public:
  explicit HeaderIndex(const CsvRow& header) {
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
      indices_.emplace(lower(std::string(trim(header.fields[i]))), i);
    }
  }

  std::size_t require(const std::string& name, const char* which_file) const {
    const auto it = indices_.find(lower(trim(name)));
    if (it == indices_.end()) {
      throw DataError(std::string(which_file) + " header has no column '" + name +
                      "'");
    }
    return it->second;
  }

 private:
  std::map<std::string, std::size_t> indices_;
};

bool is_missing(std::string_view field, const ParseOptions& opts) {
  const auto t = trim(field);
  for (const auto& sentinel : opts.missing_values) {
    if (iequals(t, sentinel)) return true;
  }
  return false;
}

std::optional<Timestamp> parse_row_time(std::string_view field,
                                        const ParseOptions& opts) {
  auto ts = parse_timestamp(field);
  if (!ts) return std::nullopt;
  // Normalize source-local time to UTC.
  return *ts - static_cast<std::int64_t>(opts.source_utc_offset_minutes) *
                   kSecondsPerMinute;
}

bool in_window(Timestamp t, const ParseOptions& opts) {
  if (opts.window_start && t < *opts.window_start) return false;
  if (opts.window_end && t >= *opts.window_end) return false;
  return true;
}

}  // namespace

void RejectsReport::add(std::size_t line, std::string reason, std::string raw) {
  entries.push_back({line, std::move(reason), std::move(raw)});
}

void RejectsReport::write_csv(std::ostream& out) const {
  out << "line_number,reason,raw_line\n";
  for (const auto& e : entries) {
    out << e.line_number << ',' << csv_escape(e.reason) << ','
        << csv_escape(e.raw_line) << '\n';
  }
}

OutageParseResult parse_outages(std::istream& in, const std::string& county_filter,
                                const std::string& state_filter,
                                const OutageColumns& columns,
                                const ParseOptions& options) {
  OutageParseResult result;
  CsvReader reader(in);

  const auto header = reader.next();
  if (!header) {
    throw DataError("outage file is empty; no rows match county='" +
                    county_filter + "', state='" + state_filter + "'");
  }
  const HeaderIndex index(*header);
  const std::size_t ts_col = index.require(columns.timestamp, "outage");
  const std::size_t state_col = index.require(columns.state, "outage");
  const std::size_t county_col = index.require(columns.county, "outage");
  const std::size_t count_col = index.require(columns.customers_out, "outage");
  const std::size_t max_col =
      std::max({ts_col, state_col, county_col, count_col});

  while (auto row = reader.next()) {
    ++result.stats.data_rows;
    if (row->fields.size() <= max_col) {
      ++result.stats.rejected;
      result.rejects.add(row->line_number, "too few columns", row->raw);
      continue;
    }
    if (!iequals(row->fields[state_col], state_filter) ||
        !iequals(row->fields[county_col], county_filter)) {
      ++result.stats.filtered_out;
      continue;
    }
    const auto ts = parse_row_time(row->fields[ts_col], options);
    if (!ts) {
      ++result.stats.rejected;
      result.rejects.add(row->line_number,
                         "unparseable timestamp '" +
                             std::string(trim(row->fields[ts_col])) + "'",
                         row->raw);
      continue;
    }
    if (!in_window(*ts, options)) {
      ++result.stats.filtered_out;
      continue;
    }
    long long count = 0;
    if (const auto as_int = parse_int(row->fields[count_col])) {
      count = *as_int;
    } else if (const auto as_double = parse_double(row->fields[count_col]);
               as_double && std::floor(*as_double) == *as_double &&
               std::abs(*as_double) < 9.0e15) {
      count = static_cast<long long>(*as_double);
    } else {
      ++result.stats.rejected;
      result.rejects.add(row->line_number,
                         "customers_out not an integer '" +
                             std::string(trim(row->fields[count_col])) + "'",
                         row->raw);
      continue;
    }
    if (count < 0) {
      ++result.stats.rejected;
      result.rejects.add(row->line_number, "customers_out negative", row->raw);
      continue;
    }
    ++result.stats.accepted;
    result.records.push_back({*ts, std::string(trim(row->fields[state_col])),
                              std::string(trim(row->fields[county_col])), count});
  }

  if (result.records.empty()) {
    throw DataError("no outage rows match county='" + county_filter +
                    "', state='" + state_filter + "'");
  }

  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const OutageRecord& a, const OutageRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  // Duplicate timestamps collapse to the max count.
  std::vector<OutageRecord> deduped;
  deduped.reserve(result.records.size());
  for (auto& rec : result.records) {
    if (!deduped.empty() && deduped.back().timestamp == rec.timestamp) {
      deduped.back().customers_out =
          std::max(deduped.back().customers_out, rec.customers_out);
      ++result.stats.duplicates_collapsed;
    } else {
      deduped.push_back(std::move(rec));
    }
  }
  result.records = std::move(deduped);
  return result;
}

WeatherParseResult parse_weather(std::istream& in, const WeatherColumns& columns,
                                 const ParseOptions& options) {
  WeatherParseResult result;
  CsvReader reader(in);

  const auto header = reader.next();
  if (!header) return result;  // empty file -> empty sequence
  const HeaderIndex index(*header);
  const std::size_t station_col = index.require(columns.station, "weather");
  const std::size_t ts_col = index.require(columns.timestamp, "weather");
  const std::size_t speed_col = index.require(columns.wind_speed, "weather");
  const std::size_t gust_col = index.require(columns.wind_gust, "weather");
  const std::size_t temp_col = index.require(columns.air_temp, "weather");
  const std::size_t precip_col = index.require(columns.precip_depth, "weather");
  const std::size_t max_col = std::max(
      {station_col, ts_col, speed_col, gust_col, temp_col, precip_col});

  while (auto row = reader.next()) {
    ++result.stats.data_rows;
    if (row->fields.size() <= max_col) {
      ++result.stats.rejected;
      result.rejects.add(row->line_number, "too few columns", row->raw);
      continue;
    }

    WeatherObservation obs;
    obs.station_id = std::string(trim(row->fields[station_col]));
    if (obs.station_id.empty()) {
      ++result.stats.rejected;
      result.rejects.add(row->line_number, "empty station id", row->raw);
      continue;
    }
    const auto ts = parse_row_time(row->fields[ts_col], options);
    if (!ts) {
      ++result.stats.rejected;
      result.rejects.add(row->line_number,
                         "unparseable timestamp '" +
                             std::string(trim(row->fields[ts_col])) + "'",
                         row->raw);
      continue;
    }
    obs.timestamp = *ts;
    if (!in_window(*ts, options)) {
      ++result.stats.filtered_out;
      continue;
    }

    bool bad = false;
    const auto numeric_field = [&](std::size_t col, const char* name,
                                   bool is_precip) -> std::optional<double> {
      if (bad) return std::nullopt;  // one reject entry per row
      const auto& field = row->fields[col];
      if (is_missing(field, options)) return std::nullopt;
      if (is_precip && iequals(trim(field), options.trace_sentinel)) {
        return options.trace_depth;
      }
      const auto v = parse_double(field);
      if (!v || !std::isfinite(*v)) {
        result.rejects.add(row->line_number,
                           std::string(name) + " not numeric '" +
                               std::string(trim(field)) + "'",
                           row->raw);
        bad = true;
        return std::nullopt;
      }
      return v;
    };

    obs.wind_speed = numeric_field(speed_col, "wind_speed", false);
    obs.wind_gust = numeric_field(gust_col, "wind_gust", false);
    obs.air_temp = numeric_field(temp_col, "air_temp", false);
    obs.precip_depth = numeric_field(precip_col, "precip_depth", true);
    if (!bad) {
      if (obs.wind_speed && *obs.wind_speed < 0) {
        result.rejects.add(row->line_number, "wind_speed negative", row->raw);
        bad = true;
      } else if (obs.wind_gust && *obs.wind_gust < 0) {
        result.rejects.add(row->line_number, "wind_gust negative", row->raw);
        bad = true;
      } else if (obs.precip_depth && *obs.precip_depth < 0) {
        result.rejects.add(row->line_number, "precip_depth negative", row->raw);
        bad = true;
      }
    }
    if (bad) {
      ++result.stats.rejected;
      continue;
    }
    ++result.stats.accepted;
    result.observations.push_back(std::move(obs));
  }
  return result;
}

}  // namespace resilience
