#pragma once

#include <fmt/format.h>

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "overhyp/error.hpp"

namespace overhyp::io {

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) { return fmt::format("{}", v); }

/// Minimal comma-separated table: no quoting, since every field we emit is
/// numeric or a bare identifier.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw SchemaError("missing column '" + std::string(name) + "'");
  }

  void require_columns(const std::vector<std::string>& names) const {
    for (const auto& n : names) (void)column(n);
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (first) {
      t.header = std::move(fields);
      first = false;
      continue;
    }
    if (fields.size() != t.header.size())
      throw SchemaError(fmt::format("line {}: expected {} fields, found {}", lineno,
                                    t.header.size(), fields.size()));
    t.rows.push_back(std::move(fields));
  }
  if (first) throw SchemaError("empty CSV (no header)");
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return parse_csv(in);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline double parse_double(const std::string& s, std::string_view column) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw SchemaError(fmt::format("column '{}': '{}' is not a number", column, s));
  return v;
}

template <class Int>
Int parse_int(const std::string& s, std::string_view column) {
  Int v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw SchemaError(fmt::format("column '{}': '{}' is not an integer", column, s));
  return v;
}

}  // namespace overhyp::io
