#include "resilience/csv.hpp"

#include <cctype>
#include <charconv>
#include <istream>

namespace resilience {

CsvReader::CsvReader(std::istream& in, char delimiter)
    : in_(in), delimiter_(delimiter) {}

std::optional<CsvRow> CsvReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    CsvRow row;
    row.line_number = line_;
    std::string field;
    bool in_quotes = false;
    std::size_t i = 0;
    std::string raw = line;
    while (true) {
      for (; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
          if (c == '"') {
            if (i + 1 < line.size() && line[i + 1] == '"') {
              field.push_back('"');
              ++i;
            } else {
              in_quotes = false;
            }
          } else {
            field.push_back(c);
          }
        } else if (c == '"') {
          in_quotes = true;
        } else if (c == delimiter_) {
          row.fields.push_back(std::move(field));
          field.clear();
        } else {
          field.push_back(c);
        }
      }
      if (!in_quotes) break;
      // Quoted field continues past the physical line.
      std::string cont;
      if (!std::getline(in_, cont)) break;
      ++line_;
      if (!cont.empty() && cont.back() == '\r') cont.pop_back();
      field.push_back('\n');
      raw.push_back('\n');
      raw += cont;
      line = std::move(cont);
      i = 0;
    }
    row.fields.push_back(std::move(field));
    row.raw = std::move(raw);
    return row;
  }
  return std::nullopt;
}

std::string csv_escape(std::string_view field, char delimiter) {
  const bool needs_quotes =
      field.find(delimiter) != std::string_view::npos ||
      field.find('"') != std::string_view::npos ||
      field.find('\n') != std::string_view::npos ||
      field.find('\r') != std::string_view::npos;
  if (!needs_quotes) return std::string{field};
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_join(const std::vector<std::string>& fields, char delimiter) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(delimiter);
    out += csv_escape(fields[i], delimiter);
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  double v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return v;
}

std::optional<long long> parse_int(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return v;
}

}  // namespace resilience
