#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "resilience/time.hpp"

namespace resilience {

/// One county-level outage report.
struct OutageRecord {
  Timestamp timestamp;
  std::string state;
  std::string county;
  long long customers_out = 0;
};

/// One raw station observation. Fields keep their source units; absent or
/// sentinel-coded values stay missing here, never zero-filled.
struct WeatherObservation {
  std::string station_id;
  Timestamp timestamp;
  std::optional<double> wind_speed;
  std::optional<double> wind_gust;
  std::optional<double> air_temp;
  std::optional<double> precip_depth;
};

/// Column-name mapping for the outage CSV. Defaults follow EAGLE-I exports;
/// override from the run configuration for other vintages.
struct OutageColumns {
  std::string timestamp = "run_start_time";
  std::string state = "state";
  std::string county = "county";
  std::string customers_out = "sum";
};

/// Column-name mapping for the weather CSV. Defaults follow IEM ASOS/AWOS
/// exports (sknt/gust in knots, tmpf in Fahrenheit, p01i in inches).
struct WeatherColumns {
  std::string station = "station";
  std::string timestamp = "valid";
  std::string wind_speed = "sknt";
  std::string wind_gust = "gust";
  std::string air_temp = "tmpf";
  std::string precip_depth = "p01i";
};

struct ParseOptions {
  std::vector<std::string> missing_values{"", "M", "NA"};
  std::string trace_sentinel = "T";  // IEM trace precipitation marker
  double trace_depth = 0.005;
  int source_utc_offset_minutes = 0;  // source local time = UTC + offset
  std::optional<Timestamp> window_start;  // inclusive
  std::optional<Timestamp> window_end;    // exclusive
};

struct RejectEntry {
  std::size_t line_number = 0;
  std::string reason;
  std::string raw_line;
};

struct RejectsReport {
  std::vector<RejectEntry> entries;

  void add(std::size_t line, std::string reason, std::string raw);
  /// CSV with header line_number,reason,raw_line.
  void write_csv(std::ostream& out) const;
};

/// Row accounting. Every data row lands in exactly one of rejected /
/// filtered_out / accepted; deduplication then folds accepted rows, so
/// emitted records = accepted - duplicates_collapsed.
struct ParseStats {
  std::size_t data_rows = 0;
  std::size_t rejected = 0;
  std::size_t filtered_out = 0;
  std::size_t accepted = 0;
  std::size_t duplicates_collapsed = 0;
};

struct OutageParseResult {
  std::vector<OutageRecord> records;  // strictly increasing timestamps
  ParseStats stats;
  RejectsReport rejects;
};

struct WeatherParseResult {
  std::vector<WeatherObservation> observations;
  ParseStats stats;
  RejectsReport rejects;
};

/// Parses an outage CSV, keeping rows matching both filters
/// (case-insensitive). Malformed rows go to the rejects report and parsing
/// continues; a bad header or zero matching rows is fatal (DataError).
/// Duplicate timestamps collapse to the maximum customers_out.
OutageParseResult parse_outages(std::istream& in, const std::string& county_filter,
                                const std::string& state_filter,
                                const OutageColumns& columns,
                                const ParseOptions& options);

/// Parses a weather CSV. One observation per surviving row; missing fields
/// stay missing. An empty stream yields an empty result; a header missing a
/// mapped column is fatal (DataError).
WeatherParseResult parse_weather(std::istream& in, const WeatherColumns& columns,
                                 const ParseOptions& options);

}  // namespace resilience
