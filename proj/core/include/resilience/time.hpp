#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace resilience {

/// UTC instant, seconds since 1970-01-01T00:00:00Z.
struct Timestamp {
  std::int64_t secs = 0;

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

inline Timestamp operator+(Timestamp t, std::int64_t s) { return {t.secs + s}; }
inline Timestamp operator-(Timestamp t, std::int64_t s) { return {t.secs - s}; }
inline std::int64_t operator-(Timestamp a, Timestamp b) { return a.secs - b.secs; }

inline constexpr std::int64_t kSecondsPerMinute = 60;
inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Days since 1970-01-01 for a proleptic-Gregorian civil date.
std::int64_t days_from_civil(int year, unsigned month, unsigned day);

/// Inverse of days_from_civil.
void civil_from_days(std::int64_t days, int& year, unsigned& month, unsigned& day);

/// Parses "YYYY-MM-DD[ T]HH:MM[:SS][Z]" or a bare "YYYY-MM-DD" (midnight).
/// Returns nullopt on malformed input or out-of-range fields.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// "YYYY-MM-DD HH:MM:SS"
std::string format_timestamp(Timestamp t);

/// "YYYY-MM-DD"
std::string format_date(Timestamp t);

}  // namespace resilience
