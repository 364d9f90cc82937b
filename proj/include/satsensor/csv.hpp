#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace satsensor::csv {

/// Shortest representation that parses back to the same double.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc{}) throw std::runtime_error("format_number: to_chars failed");
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s == "nan") return NAN;
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("parse_number: not a number: " + std::string(s));
  return x;
}

/// Comma-separated, header row, LF line endings.
class Writer {
 public:
  explicit Writer(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) buf_ += ',';
      buf_ += h;
      first = false;
    }
    buf_ += '\n';
    columns_ = header.size();
  }

  void row(std::initializer_list<std::string> cells) {
    if (cells.size() != columns_) throw std::logic_error("csv::Writer: column count mismatch");
    bool first = true;
    for (const auto& c : cells) {
      if (!first) buf_ += ',';
      buf_ += c;
      first = false;
    }
    buf_ += '\n';
  }

  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
  std::size_t columns_ = 0;
};

inline std::string cell(double x) { return format_number(x); }
inline std::string cell(std::int64_t x) { return std::to_string(x); }
inline std::string cell(bool x) { return x ? "1" : "0"; }

/// Splits CSV text (no quoting) into rows of fields, header included.
inline std::vector<std::vector<std::string>> parse(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    std::vector<std::string> fields;
    std::size_t f = 0;
    for (;;) {
      const auto comma = line.find(',', f);
      fields.emplace_back(line.substr(f, comma == std::string_view::npos ? std::string_view::npos : comma - f));
      if (comma == std::string_view::npos) break;
      f = comma + 1;
    }
    rows.push_back(std::move(fields));
    pos = eol + 1;
  }
  return rows;
}

}  // namespace satsensor::csv
