#include <doctest.h>

#include "resilience/time.hpp"

using namespace resilience;

TEST_CASE("timestamp parsing accepts the formats in the wild") {
  CHECK(parse_timestamp("1970-01-01 00:00:00")->secs == 0);
  CHECK(parse_timestamp("1970-01-02 00:00:00")->secs == kSecondsPerDay);
  CHECK(parse_timestamp("2018-06-01 00:15:00")->secs ==
        parse_timestamp("2018-06-01 00:15")->secs);
  CHECK(parse_timestamp("2018-06-01T00:15:00Z")->secs ==
        parse_timestamp("2018-06-01 00:15:00")->secs);
  CHECK(parse_timestamp("2018-06-01")->secs ==
        parse_timestamp("2018-06-01 00:00:00")->secs);
  CHECK(parse_timestamp(" 2018-06-01 00:15 ")->secs ==
        parse_timestamp("2018-06-01 00:15")->secs);
}

TEST_CASE("timestamp parsing rejects malformed input") {
  CHECK_FALSE(parse_timestamp("").has_value());
  CHECK_FALSE(parse_timestamp("not-a-time").has_value());
  CHECK_FALSE(parse_timestamp("2018-13-01 00:00").has_value());
  CHECK_FALSE(parse_timestamp("2018-02-30 00:00").has_value());
  CHECK_FALSE(parse_timestamp("2018-06-01 25:00").has_value());
  CHECK_FALSE(parse_timestamp("2018-06-01 10:61").has_value());
  CHECK_FALSE(parse_timestamp("2018-06-01 10:00 trailing").has_value());
  CHECK(parse_timestamp("2020-02-29 00:00").has_value());  // leap day
  CHECK_FALSE(parse_timestamp("2019-02-29 00:00").has_value());
}

TEST_CASE("format round-trips parse") {
  for (const char* text :
       {"2018-06-01 00:00:00", "2023-12-31 23:45:00", "1999-02-28 04:05:06"}) {
    const auto t = parse_timestamp(text);
    REQUIRE(t.has_value());
    CHECK(format_timestamp(*t) == text);
  }
  CHECK(format_date(*parse_timestamp("2018-06-01 13:00")) == "2018-06-01");
}

TEST_CASE("civil date conversions invert each other") {
  for (std::int64_t days : {-719468LL, -1LL, 0LL, 1LL, 17745LL, 20000LL}) {
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    CHECK(days_from_civil(y, m, d) == days);
  }
}
