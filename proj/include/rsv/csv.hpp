#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace rsv::csv {

struct ParseError : std::runtime_error {
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_number(line) {}
  std::size_t line_number;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 17 significant digits: enough for an exact double round trip.
inline std::string format(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

/// A line-oriented reader that skips blank lines and `#` comments and
/// tracks 1-based line numbers for error messages.
class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw IoError("cannot open " + path);
  }

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      return true;
    }
    return false;
  }

  std::size_t line_number() const { return line_no_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_no_, what); }

  double parse_double(std::string_view field, std::string_view column) const {
    double value = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) fail("cannot parse " + std::string(column) + " value '" + std::string(field) + "'");
    if (!std::isfinite(value)) fail("non-finite " + std::string(column) + " value");
    return value;
  }

  long long parse_int(std::string_view field, std::string_view column) const {
    long long value = 0;
    const auto* last = field.data() + field.size();
    const auto res = std::from_chars(field.data(), last, value);
    if (res.ec != std::errc{} || res.ptr != last) fail("cannot parse " + std::string(column) + " value '" + std::string(field) + "'");
    return value;
  }

  /// Reads the header and returns the index of each requested column.
  std::vector<std::size_t> header(const std::vector<std::string>& required) {
    std::string line;
    if (!next(line)) fail("missing header row");
    const auto fields = split(line);
    std::vector<std::size_t> idx;
    for (const auto& name : required) {
      std::size_t found = fields.size();
      for (std::size_t i = 0; i < fields.size(); ++i)
        if (fields[i] == name) found = i;
      if (found == fields.size()) fail("missing column '" + name + "'");
      idx.push_back(found);
    }
    columns_ = fields.size();
    return idx;
  }

  std::vector<std::string_view> row(const std::string& line) const {
    auto fields = split(line);
    if (fields.size() != columns_)
      fail("expected " + std::to_string(columns_) + " fields, found " + std::to_string(fields.size()));
    return fields;
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  std::size_t columns_ = 0;
};

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace rsv::csv
