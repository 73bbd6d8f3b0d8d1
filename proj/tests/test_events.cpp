#include <doctest.h>

#include <sstream>

#include "resilience/errors.hpp"
#include "resilience/events.hpp"
#include "resilience/rng.hpp"
#include "test_support.hpp"

using namespace resilience;
using test_support::outage_grid;
using test_support::ts;

namespace {

/// Literal one-pass scan: above-threshold bins grouped while consecutive
/// above bins are less than gap_secs apart. Independent of the two-stage
/// pre-event/excursion implementation it checks.
std::vector<std::pair<std::size_t, std::size_t>> brute_force_events(
    const TimeGrid& grid, double threshold, std::int64_t gap_secs) {
  const auto v = grid.values("customers_out");
  std::vector<std::pair<std::size_t, std::size_t>> events;
  bool open = false;
  std::size_t last_above = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] <= threshold) continue;
    if (open && grid.time_at(k) - grid.time_at(last_above) < gap_secs) {
      events.back().second = k;
    } else {
      events.emplace_back(k, k);
      open = true;
    }
    last_above = k;
  }
  return events;
}

std::vector<OutageEvent> extract(const TimeGrid& grid, long long threshold = 50) {
  return filter_significant(grid, group_pre_events(grid), threshold);
}

/// Trapezoid integration of the stepped performance curve: each bin value v
/// becomes the two corners (t, v), (t+step, v), so the trapezoid areas equal
/// the left-step rectangles exactly.
double trapezoid_step_auc(const std::vector<double>& curve, double step_hours) {
  double total = 0.0;
  for (const double v : curve) total += 0.5 * (v + v) * step_hours;
  return total;
}

}  // namespace

TEST_CASE("nonzero bins closer than three hours form one pre-event") {
  // nonzero at t=0 and t=2.5h with zeros between
  std::vector<double> v(12, 0.0);
  v[0] = 5;
  v[10] = 7;  // 2.5 h later
  const auto spans = group_pre_events(outage_grid(v));
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].first == 0);
  CHECK(spans[0].last == 10);
}

TEST_CASE("a three-hour-or-wider zero gap splits pre-events") {
  std::vector<double> v(20, 0.0);
  v[0] = 5;
  v[16] = 7;  // 4 h later
  const auto spans = group_pre_events(outage_grid(v));
  REQUIRE(spans.size() == 2);

  std::vector<double> exact(13, 0.0);
  exact[0] = 5;
  exact[12] = 7;  // exactly 3 h: still split
  CHECK(group_pre_events(outage_grid(exact)).size() == 2);
}

TEST_CASE("an all-zero series yields no pre-events") {
  CHECK(group_pre_events(outage_grid(std::vector<double>(10, 0.0))).empty());
}

TEST_CASE("a pre-event never exceeding the threshold is dropped") {
  std::vector<double> v{0, 20, 45, 30, 0};
  CHECK(extract(outage_grid(v)).empty());
}

TEST_CASE("an event spans exactly the above-threshold bins") {
  const auto grid = outage_grid({0, 60, 200, 60, 0});
  const auto events = extract(grid);
  REQUIRE(events.size() == 1);
  CHECK(events[0].first_bin == 1);
  CHECK(events[0].last_bin == 3);
  CHECK(events[0].curve == std::vector<double>{60, 200, 60});
  CHECK(events[0].start == grid.time_at(1));
  CHECK(events[0].end == grid.time_at(4));
  CHECK_FALSE(events[0].censored);
}

TEST_CASE("a count equal to the threshold is below threshold") {
  CHECK(extract(outage_grid({0, 50, 50, 0})).empty());
  const auto events = extract(outage_grid({0, 50, 51, 50, 0}));
  REQUIRE(events.size() == 1);
  CHECK(events[0].curve == std::vector<double>{51});
}

TEST_CASE("a series ending above threshold is censored at series end") {
  const auto grid = outage_grid({0, 30, 80, 120});
  const auto events = extract(grid);
  REQUIRE(events.size() == 1);
  CHECK(events[0].censored);
  CHECK(events[0].last_bin == 3);
  CHECK(events[0].end == grid.time_at(3) + grid.step_secs());
}

TEST_CASE("excursions separated by under three hours merge into one event") {
  // above bins at 0..1 and 8..9 (gap 1.75 h between above bins), bridged by
  // below-threshold activity
  std::vector<double> v{60, 70, 20, 20, 20, 20, 20, 20, 90, 80, 0, 0};
  const auto events = extract(outage_grid(v));
  REQUIRE(events.size() == 1);
  CHECK(events[0].first_bin == 0);
  CHECK(events[0].last_bin == 9);
  CHECK(events[0].curve.size() == 10);  // interior dip stays in the curve
}

TEST_CASE("excursions separated by three hours or more stay separate events") {
  std::vector<double> v(16, 10.0);  // continuous low activity (one pre-event)
  v[0] = 60;
  v[13] = 90;  // 3.25 h after the first above bin
  v[15] = 0;
  const auto events = extract(outage_grid(v));
  REQUIRE(events.size() == 2);
  CHECK(events[0].first_bin == 0);
  CHECK(events[0].last_bin == 0);
  CHECK(events[1].first_bin == 13);
  CHECK(events[1].last_bin == 13);
}

TEST_CASE("boundaries match a literal brute-force scan on random series") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 50 + rng.uniform_int(450);
    std::vector<double> v(n, 0.0);
    // blocky random walk with quiet stretches, so thresholds get crossed
    std::size_t k = 0;
    while (k < n) {
      const std::size_t len = 1 + rng.uniform_int(20);
      const double level = rng.uniform() < 0.4
                               ? 0.0
                               : std::floor(rng.uniform() * 120.0);
      for (std::size_t i = 0; i < len && k < n; ++i, ++k) v[k] = level;
    }
    const auto grid = outage_grid(v);
    const auto expected = brute_force_events(grid, 50.0, 3 * kSecondsPerHour);
    const auto actual = extract(grid);
    REQUIRE(actual.size() == expected.size());
    for (std::size_t i = 0; i < actual.size(); ++i) {
      CHECK(actual[i].first_bin == expected[i].first);
      CHECK(actual[i].last_bin == expected[i].second);
    }
  }
}

TEST_CASE("removing a below-threshold pre-event leaves events unchanged") {
  std::vector<double> with{0, 70, 90, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 30, 40, 0};
  std::vector<double> without{0, 70, 90, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  const auto a = extract(outage_grid(with));
  const auto b = extract(outage_grid(without));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first_bin == b[i].first_bin);
    CHECK(a[i].last_bin == b[i].last_bin);
  }
}

TEST_CASE("AUC is the left-step integral of the curve") {
  OutageEvent event;
  event.curve = {100, 100, 100, 100};
  compute_metrics(event, 2000000, 900);
  CHECK(event.auc_customer_hours == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(event.auc_customer_hours ==
        doctest::Approx(trapezoid_step_auc(event.curve, 0.25)).epsilon(1e-12));
  CHECK(event.peak_customers_out == 100);
}

TEST_CASE("degenerate curves have zero metrics") {
  OutageEvent event;
  event.curve = {0};
  compute_metrics(event, 1000, 900);
  CHECK(event.auc_customer_hours == 0.0);
  CHECK(event.peak_customers_out == 0);
  CHECK(event.norm_customers_out == 0.0);
}

TEST_CASE("normalized customer-out divides by the county total") {
  OutageEvent event;
  event.curve = {50000};
  compute_metrics(event, 2000000, 900);
  CHECK(event.norm_customers_out == doctest::Approx(0.025).epsilon(1e-15));
  CHECK_THROWS_AS(compute_metrics(event, 0, 900), ConfigError);
  CHECK_THROWS_AS(compute_metrics(event, -5, 900), ConfigError);
}

TEST_CASE("cumulative customer-out sums positive jumps") {
  OutageEvent event;
  event.curve = {100, 250, 180, 300, 50};
  compute_metrics(event, 1000, 900, CustomerOutMode::kCumulative);
  // 100 + 150 + 120 = 370
  CHECK(event.cum_customers_out == 370);
  CHECK(event.norm_customers_out == doctest::Approx(0.370));
}

TEST_CASE("AUC equals the bin-by-bin oracle on random events") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    OutageEvent event;
    const std::size_t len = 1 + rng.uniform_int(96);
    for (std::size_t i = 0; i < len; ++i) {
      event.curve.push_back(std::floor(rng.uniform() * 100000.0));
    }
    compute_metrics(event, 2000000, 900);
    double oracle = 0.0;
    for (const double v : event.curve) oracle += v * 0.25;
    CHECK(event.auc_customer_hours ==
          doctest::Approx(oracle).epsilon(1e-9));
  }
}

namespace {

TimeGrid weather_fixture(std::size_t n, std::vector<double> gust,
                         std::vector<double> temp, std::vector<double> occ) {
  GridSpec spec;
  spec.start = ts("2018-06-01 00:00:00");
  spec.step_secs = 900;
  spec.length = n;
  TimeGrid grid(spec);
  std::vector<std::uint8_t> mask(n, 0);
  grid.set_series("wind_speed", gust, mask);
  grid.set_series("wind_gust", std::move(gust), mask);
  grid.set_series("air_temp", std::move(temp), mask);
  grid.set_series("precip_occ", std::move(occ), mask);
  return grid;
}

}  // namespace

TEST_CASE("weather features take within-event peaks") {
  auto grid = weather_fixture(5, {5, 10, 35, 20, 5}, {60, 61, 66, 64, 60},
                              {0, 0, 0, 0, 0});
  OutageEvent event;
  event.first_bin = 1;
  event.last_bin = 3;
  event.start = grid.time_at(1);
  event.end = grid.time_at(4);
  attach_weather_features(event, grid);
  CHECK(event.peak_wind_gust == 35);
  CHECK(event.peak_air_temp == 66);
  CHECK(event.min_air_temp == 61);
  CHECK(event.precip_flag == 0);
}

TEST_CASE("precipitation anywhere in the event sets the flag") {
  auto grid = weather_fixture(3, {5, 5, 5}, {60, 60, 60}, {0, 1, 0});
  OutageEvent event;
  event.first_bin = 0;
  event.last_bin = 2;
  event.start = grid.time_at(0);
  event.end = grid.time_at(2) + 900;
  attach_weather_features(event, grid);
  CHECK(event.precip_flag == 1);
}

TEST_CASE("single-bin events use that bin's values") {
  auto grid = weather_fixture(3, {5, 23, 5}, {60, 71, 60}, {0, 1, 0});
  OutageEvent event;
  event.first_bin = 1;
  event.last_bin = 1;
  event.start = grid.time_at(1);
  event.end = grid.time_at(2);
  attach_weather_features(event, grid);
  CHECK(event.peak_wind_gust == 23);
  CHECK(event.peak_air_temp == 71);
  CHECK(event.precip_flag == 1);
}

TEST_CASE("a weather grid that does not cover the event is fatal") {
  auto grid = weather_fixture(3, {5, 5, 5}, {60, 60, 60}, {0, 0, 0});
  OutageEvent event;
  event.first_bin = 0;
  event.last_bin = 2;
  event.start = ts("2018-05-31 00:00:00");  // before the grid
  event.end = ts("2018-05-31 01:00:00");
  CHECK_THROWS_AS(attach_weather_features(event, grid), DataError);
}

TEST_CASE("feature table round-trips through CSV") {
  std::vector<OutageEvent> events(2);
  events[0].peak_wind_gust = 31.5;
  events[0].peak_air_temp = 72.25;
  events[0].precip_flag = 1;
  events[0].auc_customer_hours = 1234.5;
  events[0].norm_customers_out = 0.00125;
  events[1].peak_wind_gust = 44.0;
  events[1].peak_air_temp = 81.0;
  events[1].precip_flag = 0;
  events[1].auc_customer_hours = 98.75;
  events[1].norm_customers_out = 0.0004;
  const auto table = build_feature_table(events);
  CHECK(table.columns() == event_feature_columns());

  std::ostringstream out;
  table.write_csv(out);
  std::istringstream in(out.str());
  const auto back = FeatureTable::read_csv(in, event_feature_columns());
  REQUIRE(back.n_rows() == 2);
  for (std::size_t c = 0; c < table.columns().size(); ++c) {
    for (std::size_t r = 0; r < 2; ++r) CHECK(back.at(r, c) == table.at(r, c));
  }
  CHECK(back.column("event_id")[0] == 1.0);
  CHECK(back.column("event_id")[1] == 2.0);
}

TEST_CASE("feature table read rejects schema drift") {
  std::istringstream in("event_id,unexpected\n1,2\n");
  CHECK_THROWS_AS(FeatureTable::read_csv(in, event_feature_columns()), DataError);
  std::istringstream bad_cell(
      "event_id,peak_wind_gust,peak_air_temp,precip_flag,auc_customer_hours,"
      "norm_customers_out\n1,2,3,4,five,6\n");
  CHECK_THROWS_AS(FeatureTable::read_csv(bad_cell, event_feature_columns()),
                  DataError);
}

TEST_CASE("events are disjoint and ordered with at least one bin between") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(200, 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] = rng.uniform() < 0.5 ? 0.0 : std::floor(rng.uniform() * 150.0);
    }
    const auto events = extract(outage_grid(v));
    for (std::size_t i = 1; i < events.size(); ++i) {
      CHECK(events[i].first_bin > events[i - 1].last_bin + 1);
    }
    for (const auto& e : events) {
      CHECK(e.start < e.end);
      double peak = 0.0;
      for (const double c : e.curve) peak = std::max(peak, c);
      CHECK(peak > 50.0);
    }
  }
}
