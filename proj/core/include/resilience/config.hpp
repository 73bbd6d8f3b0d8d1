#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "resilience/ingest.hpp"
#include "resilience/model.hpp"
#include "resilience/time.hpp"

namespace resilience {

struct ThresholdConfig {
  double gap_hours = 3.0;
  long long magnitude = 50;
  int forward_fill_limit = 3;
};

struct McmcSettings {
  int n_chains = 4;
  int n_warmup = 2000;
  int n_draws = 5000;
};

struct EvidenceSettings {
  int n_rungs = 32;
  int rung_warmup = 500;
  int rung_draws = 1000;
  int rung_chains = 2;
  double beta_min = 1e-4;
};

struct ContourSettings {
  int n_points = 100;
  std::optional<double> w1_min, w1_max;  // air temperature axis
  std::optional<double> w2_min, w2_max;  // wind gust axis
};

struct LinearConversion {
  double scale = 1.0;
  double offset = 0.0;
};

/// Declarative run configuration. Defaults mirror the processing constants
/// used throughout (3 h gap, 50-customer magnitude, 3-bin forward fill,
/// 15-minute grid); everything is overridable from the JSON file and the
/// echoed metadata materializes every effective value.
struct RunConfig {
  // inputs and filters
  std::string outage_csv;
  std::vector<std::string> weather_csvs;
  std::string out_dir = "out";
  std::string county;
  std::string state;
  long long county_total_customers = 0;
  Timestamp window_start{};
  Timestamp window_end{};

  // processing
  ThresholdConfig thresholds;
  int step_minutes = 15;
  OutageColumns outage_columns;
  WeatherColumns weather_columns;
  std::vector<std::string> missing_values{"", "M", "NA"};
  std::string trace_sentinel = "T";
  double trace_depth = 0.005;
  int source_utc_offset_minutes = 0;
  std::map<std::string, std::string> units;  // free-form notes, echoed
  std::map<std::string, LinearConversion> unit_conversions;
  bool dump_aligned_grid = false;

  // event features
  std::string customer_out_mode = "peak";  // or "cumulative"
  bool include_min_temp = false;
  std::string auc_transform = "log1p";  // or "none"

  // inference
  McmcSettings mcmc;
  EvidenceSettings evidence;
  std::map<std::string, NormalPrior> prior_overrides;  // by parameter name
  std::optional<double> sigma_scale;
  bool predictive_mean_eval = false;

  // selection
  double test_fraction = 0.20;
  double val_fraction = 0.20;  // of the non-test remainder

  // contour export
  ContourSettings contour;

  std::uint64_t seed = 1;
  bool force = false;

  /// Loads and validates a JSON config file. Relative input paths resolve
  /// against the config file's directory.
  static RunConfig load(const std::string& path);

  /// Parses config from a JSON string (paths taken as-is).
  static RunConfig from_json_string(const std::string& text);

  void validate() const;

  std::int64_t step_secs() const { return step_minutes * kSecondsPerMinute; }
  std::int64_t gap_secs() const {
    return static_cast<std::int64_t>(thresholds.gap_hours * kSecondsPerHour);
  }
  ParseOptions parse_options() const;
};

}  // namespace resilience
