#pragma once

#include <string>
#include <vector>

#include "resilience/config.hpp"
#include "resilience/correlation.hpp"
#include "resilience/events.hpp"
#include "resilience/evidence.hpp"
#include "resilience/mcmc.hpp"
#include "resilience/timegrid.hpp"

namespace resilience {

struct IngestResult {
  OutageParseResult outages;
  std::vector<WeatherParseResult> weather;  // one per input file
  TimeGrid grid;
};

/// Parses both sources, applies configured unit conversions, and builds the
/// aligned 15-minute grid for the study window.
IngestResult ingest_and_align(const RunConfig& config);

/// Full event extraction: pre-event grouping, significance filtering,
/// metrics and weather features.
std::vector<OutageEvent> extract_events(const RunConfig& config,
                                        const TimeGrid& grid);

/// Posterior-mean prediction surface over a W1 x W2 grid for one
/// precipitation regime.
struct ContourGrid {
  std::vector<double> w1_axis;             // air temperature, strictly increasing
  std::vector<double> w2_axis;             // wind gust, strictly increasing
  std::vector<std::vector<double>> z;      // z[i][j] at (w1_axis[j], w2_axis[i])
  int precip_flag = 0;
  std::string model_id;
};

ContourGrid emit_contour(const PosteriorResult& posterior, const ModelSpec& spec,
                         double w1_min, double w1_max, double w2_min,
                         double w2_max, int n_points, int precip_flag);

/// Reads back a contour CSV written by the pipeline (round-trip check).
ContourGrid read_contour_csv(const std::string& path);

enum class Stage { kIngest, kEvents, kCorrelate, kFit, kCompare, kContour };

std::string to_string(Stage stage);

/// Runs one stage standalone; later stages read the event table contract
/// file from the output directory.
void run_stage(const RunConfig& config, Stage stage);

/// Runs the whole pipeline in stage order and writes the artifact bundle
/// plus run_metadata.json. A fatal error leaves a ".partial" marker naming
/// the failed stage.
void run_pipeline(const RunConfig& config);

}  // namespace resilience
