#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resilience/ingest.hpp"
#include "resilience/time.hpp"

namespace resilience {

struct GridSpec {
  Timestamp start;
  std::int64_t step_secs = 900;
  std::size_t length = 0;
};

/// Uniform time axis carrying named value series plus per-series imputation
/// masks (true = bin value was not directly observed). After construction by
/// the resample/align operations no series has an unfilled entry.
class TimeGrid {
 public:
  explicit TimeGrid(GridSpec spec);

  const GridSpec& spec() const { return spec_; }
  std::size_t length() const { return spec_.length; }
  std::int64_t step_secs() const { return spec_.step_secs; }
  Timestamp time_at(std::size_t bin) const {
    return spec_.start + static_cast<std::int64_t>(bin) * spec_.step_secs;
  }
  /// Bin containing t under half-open membership [start+k*step, start+(k+1)*step).
  std::optional<std::size_t> bin_of(Timestamp t) const;

  bool has_series(const std::string& name) const;
  std::vector<std::string> series_names() const;

  std::span<const double> values(const std::string& name) const;
  std::span<const std::uint8_t> mask(const std::string& name) const;

  void set_series(const std::string& name, std::vector<double> values,
                  std::vector<std::uint8_t> mask);

 private:
  GridSpec spec_;
  std::map<std::string, std::vector<double>> values_;
  std::map<std::string, std::vector<std::uint8_t>> masks_;
};

/// Grid covering [start, end) at the given step.
GridSpec make_grid_spec(Timestamp start, Timestamp end, std::int64_t step_secs = 900);

/// Sample-and-hold resampling of outage records onto the grid as series
/// "customers_out". Each bin takes the last record at or before the bin
/// timestamp. Bins with no record of their own count as missing: runs of up
/// to `forward_fill_limit` missing bins keep the held value; every missing
/// bin beyond that (and any bin before the first record) is set to 0 with
/// the mask flagging it as imputed.
void resample_outages(const std::vector<OutageRecord>& records, TimeGrid& grid,
                      int forward_fill_limit = 3);

/// Aligns multi-station observations onto the grid as series wind_speed,
/// wind_gust, air_temp and precip_occ. Per bin each variable keeps the max
/// across stations; empty wind_speed/air_temp bins copy the temporally
/// nearest filled bin (ties to the earlier side); empty gust bins copy the
/// bin's wind_speed; precip_occ is 1 iff any positive depth fell in the bin.
/// A variable with no usable observation in the whole window is fatal.
void align_weather(const std::vector<WeatherObservation>& observations,
                   TimeGrid& grid);

/// Debug dump: timestamp, then value and imputed-mask columns per series.
void write_grid_csv(const TimeGrid& grid, std::ostream& out);

}  // namespace resilience
