#include "resilience/time.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace resilience {

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, unsigned& month, unsigned& day) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = doy - (153 * mp + 2) / 5 + 1;
  month = mp + (mp < 10 ? 3 : -9);
  year = static_cast<int>(y + (month <= 2));
}

namespace {

bool parse_uint(std::string_view s, std::size_t pos, std::size_t len, unsigned& out) {
  if (pos + len > s.size()) return false;
  unsigned v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    const char c = s[i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  out = v;
  return true;
}

bool days_in_month_ok(unsigned y, unsigned m, unsigned d) {
  static constexpr std::array<unsigned, 12> lengths{31, 28, 31, 30, 31, 30,
                                                    31, 31, 30, 31, 30, 31};
  unsigned max_d = lengths[m - 1];
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (m == 2 && leap) max_d = 29;
  return d >= 1 && d <= max_d;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  // Trim surrounding whitespace.
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
    text.remove_prefix(1);
  }
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
    text.remove_suffix(1);
  }
  unsigned y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  if (!parse_uint(text, 0, 4, y)) return std::nullopt;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!parse_uint(text, 5, 2, mo) || !parse_uint(text, 8, 2, d)) return std::nullopt;
  if (mo < 1 || mo > 12 || !days_in_month_ok(y, mo, d)) return std::nullopt;

  std::size_t pos = 10;
  if (pos < text.size()) {
    if (text[pos] != ' ' && text[pos] != 'T') return std::nullopt;
    ++pos;
    if (!parse_uint(text, pos, 2, h)) return std::nullopt;
    pos += 2;
    if (pos >= text.size() || text[pos] != ':') return std::nullopt;
    ++pos;
    if (!parse_uint(text, pos, 2, mi)) return std::nullopt;
    pos += 2;
    if (pos < text.size() && text[pos] == ':') {
      ++pos;
      if (!parse_uint(text, pos, 2, se)) return std::nullopt;
      pos += 2;
    }
    if (pos < text.size() && text[pos] == 'Z') ++pos;
    if (pos != text.size()) return std::nullopt;
    if (h > 23 || mi > 59 || se > 60) return std::nullopt;
  }
  const std::int64_t days = days_from_civil(static_cast<int>(y), mo, d);
  return Timestamp{days * kSecondsPerDay + h * kSecondsPerHour +
                   mi * kSecondsPerMinute + se};
}

std::string format_timestamp(Timestamp t) {
  std::int64_t days = t.secs / kSecondsPerDay;
  std::int64_t rem = t.secs % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  int y;
  unsigned mo, d;
  civil_from_days(days, y, mo, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02lld:%02lld:%02lld", y, mo, d,
                static_cast<long long>(rem / kSecondsPerHour),
                static_cast<long long>((rem / kSecondsPerMinute) % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

std::string format_date(Timestamp t) {
  return format_timestamp(t).substr(0, 10);
}

}  // namespace resilience
