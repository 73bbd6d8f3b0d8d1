#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace resilience {

/// One parsed CSV data row. `line_number` is 1-based and refers to the line
/// the row started on; `raw` is the row text as read (quotes intact, no
/// trailing newline).
struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line_number = 0;
  std::string raw;
};

/// Streaming reader for comma-delimited text with optional double-quoted
/// fields (embedded delimiters, quotes and newlines allowed inside quotes).
class CsvReader {
 public:
  explicit CsvReader(std::istream& in, char delimiter = ',');

  /// Next row, or nullopt at end of input. Blank lines are skipped.
  std::optional<CsvRow> next();

 private:
  std::istream& in_;
  char delimiter_;
  std::size_t line_ = 0;
};

/// Quotes `field` if it contains the delimiter, a quote or a newline.
std::string csv_escape(std::string_view field, char delimiter = ',');

/// Joins pre-escaped or plain fields into one CSV line (no newline appended).
std::string csv_join(const std::vector<std::string>& fields, char delimiter = ',');

/// Shortest round-trip decimal rendering of a double ("0.25", "1e-09", ...).
std::string format_double(double value);

/// Strict double parse of a whole field; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);

/// Strict integer parse; nullopt on non-integer input.
std::optional<long long> parse_int(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace resilience
