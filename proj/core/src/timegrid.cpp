#include "resilience/timegrid.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "resilience/csv.hpp"
#include "resilience/errors.hpp"

namespace resilience {

TimeGrid::TimeGrid(GridSpec spec) : spec_(spec) {
  if (spec_.step_secs <= 0) throw ConfigError("grid step must be positive");
}

std::optional<std::size_t> TimeGrid::bin_of(Timestamp t) const {
  const std::int64_t offset = t - spec_.start;
  if (offset < 0) return std::nullopt;
  const auto bin = static_cast<std::size_t>(offset / spec_.step_secs);
  if (bin >= spec_.length) return std::nullopt;
  return bin;
}

bool TimeGrid::has_series(const std::string& name) const {
  return values_.count(name) > 0;
}

std::vector<std::string> TimeGrid::series_names() const {
  std::vector<std::string> names;
  names.reserve(values_.size());
  for (const auto& [name, _] : values_) names.push_back(name);
  return names;
}

std::span<const double> TimeGrid::values(const std::string& name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("no series '" + name + "'");
  return it->second;
}

std::span<const std::uint8_t> TimeGrid::mask(const std::string& name) const {
  const auto it = masks_.find(name);
  if (it == masks_.end()) throw std::out_of_range("no series '" + name + "'");
  return it->second;
}

void TimeGrid::set_series(const std::string& name, std::vector<double> values,
                          std::vector<std::uint8_t> mask) {
  if (values.size() != spec_.length || mask.size() != spec_.length) {
    throw std::invalid_argument("series '" + name + "' length mismatch");
  }
  values_[name] = std::move(values);
  masks_[name] = std::move(mask);
}

GridSpec make_grid_spec(Timestamp start, Timestamp end, std::int64_t step_secs) {
  if (end <= start) throw ConfigError("grid window end must be after start");
  GridSpec spec;
  spec.start = start;
  spec.step_secs = step_secs;
  spec.length = static_cast<std::size_t>((end - start + step_secs - 1) / step_secs);
  return spec;
}

void resample_outages(const std::vector<OutageRecord>& records, TimeGrid& grid,
                      int forward_fill_limit) {
  const std::size_t n = grid.length();
  std::vector<double> values(n, 0.0);
  std::vector<std::uint8_t> imputed(n, 0);

  // held[k]: last record value at or before the bin timestamp.
  // observed[k]: a record of its own fell in (t_k - step, t_k].
  std::vector<double> held(n, 0.0);
  std::vector<std::uint8_t> observed(n, 0);
  std::vector<std::uint8_t> have_held(n, 0);
  std::size_t r = 0;
  double last_value = 0.0;
  bool have_value = false;
  for (std::size_t k = 0; k < n; ++k) {
    const Timestamp bin_time = grid.time_at(k);
    bool fresh = false;
    while (r < records.size() && records[r].timestamp <= bin_time) {
      last_value = static_cast<double>(records[r].customers_out);
      have_value = true;
      if (bin_time - records[r].timestamp < grid.step_secs()) fresh = true;
      ++r;
    }
    held[k] = last_value;
    have_held[k] = have_value ? 1 : 0;
    observed[k] = fresh ? 1 : 0;
  }

  int missing_run = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (observed[k]) {
      missing_run = 0;
      values[k] = held[k];
    } else {
      ++missing_run;
      if (have_held[k] && missing_run <= forward_fill_limit) {
        values[k] = held[k];  // forward fill within the limit
      } else {
        values[k] = 0.0;
        imputed[k] = 1;
      }
    }
  }
  grid.set_series("customers_out", std::move(values), std::move(imputed));
}

namespace {

/// Nearest-neighbor fill over bins; ties break toward the earlier bin.
void nearest_fill(std::vector<double>& values, const std::vector<std::uint8_t>& has,
                  const std::string& variable) {
  const std::size_t n = values.size();
  constexpr std::ptrdiff_t kFar = std::numeric_limits<std::ptrdiff_t>::max() / 4;

  std::vector<std::ptrdiff_t> prev_dist(n, kFar), next_dist(n, kFar);
  std::vector<std::size_t> prev_idx(n, 0), next_idx(n, 0);
  bool any = false;
  std::ptrdiff_t since = kFar;
  std::size_t last = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (has[k]) {
      since = 0;
      last = k;
      any = true;
    } else if (since < kFar) {
      ++since;
    }
    prev_dist[k] = since;
    prev_idx[k] = last;
  }
  if (!any) {
    throw DataError("weather variable '" + variable +
                    "' has no observations in the study window");
  }
  since = kFar;
  for (std::size_t k = n; k-- > 0;) {
    if (has[k]) {
      since = 0;
      last = k;
    } else if (since < kFar) {
      ++since;
    }
    next_dist[k] = since;
    next_idx[k] = last;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (has[k]) continue;
    values[k] = prev_dist[k] <= next_dist[k] ? values[prev_idx[k]]
                                             : values[next_idx[k]];
  }
}

}  // namespace

void align_weather(const std::vector<WeatherObservation>& observations,
                   TimeGrid& grid) {
  const std::size_t n = grid.length();
  struct VarState {
    std::vector<double> values;
    std::vector<std::uint8_t> has;
    VarState(std::size_t n) : values(n, 0.0), has(n, 0) {}
    void take_max(std::size_t k, double v) {
      if (!has[k] || v > values[k]) values[k] = v;
      has[k] = 1;
    }
  };
  VarState speed(n), gust(n), temp(n);
  std::vector<double> precip(n, 0.0);
  std::vector<std::uint8_t> precip_has(n, 0);

  for (const auto& obs : observations) {
    const auto bin = grid.bin_of(obs.timestamp);
    if (!bin) continue;
    const std::size_t k = *bin;
    if (obs.wind_speed) speed.take_max(k, *obs.wind_speed);
    if (obs.wind_gust) gust.take_max(k, *obs.wind_gust);
    if (obs.air_temp) temp.take_max(k, *obs.air_temp);
    if (obs.precip_depth) {
      precip_has[k] = 1;
      if (*obs.precip_depth > 0.0) precip[k] = 1.0;
    }
  }

  const auto invert = [](const std::vector<std::uint8_t>& has) {
    std::vector<std::uint8_t> mask(has.size());
    for (std::size_t i = 0; i < has.size(); ++i) mask[i] = has[i] ? 0 : 1;
    return mask;
  };

  nearest_fill(speed.values, speed.has, "wind_speed");
  nearest_fill(temp.values, temp.has, "air_temp");
  // A bin without a gust report means no gust: it takes the bin's wind speed.
  for (std::size_t k = 0; k < n; ++k) {
    if (!gust.has[k]) gust.values[k] = speed.values[k];
  }

  grid.set_series("wind_speed", std::move(speed.values), invert(speed.has));
  grid.set_series("wind_gust", std::move(gust.values), invert(gust.has));
  grid.set_series("air_temp", std::move(temp.values), invert(temp.has));
  grid.set_series("precip_occ", std::move(precip), invert(precip_has));
}

void write_grid_csv(const TimeGrid& grid, std::ostream& out) {
  const auto names = grid.series_names();
  out << "timestamp";
  for (const auto& name : names) out << ',' << name << ',' << name << "_imputed";
  out << '\n';
  for (std::size_t k = 0; k < grid.length(); ++k) {
    out << format_timestamp(grid.time_at(k));
    for (const auto& name : names) {
      out << ',' << format_double(grid.values(name)[k]) << ','
          << static_cast<int>(grid.mask(name)[k]);
    }
    out << '\n';
  }
}

}  // namespace resilience
