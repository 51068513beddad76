#pragma once

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "subcast/common.hpp"

namespace subcast::csv {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

// Plain comma-separated reader: no quoting, header row required. Row numbers
// in error messages are 1-based file line numbers.
class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {
    std::string header;
    if (!std::getline(in_, header)) throw InputError(source_ + ": empty file, header row expected");
    columns_ = split(header);
    for (std::size_t i = 0; i < columns_.size(); ++i) index_[columns_[i]] = i;
    line_no_ = 1;
  }

  const std::vector<std::string>& columns() const { return columns_; }
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t require(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InputError(source_ + ": missing required column '" + name + "'");
    return it->second;
  }

  bool next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (trim(line).empty()) continue;
      fields_ = split(line);
      if (fields_.size() != columns_.size()) {
        fail("expected " + std::to_string(columns_.size()) + " fields, found " + std::to_string(fields_.size()));
      }
      return true;
    }
    return false;
  }

  const std::string& text(std::size_t col) const { return fields_.at(col); }

  double number(std::size_t col) const {
    const std::string& f = fields_.at(col);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
      fail("column '" + columns_[col] + "' is not a finite number: '" + f + "'");
    }
    return v;
  }

  long integer(std::size_t col) const {
    const std::string& f = fields_.at(col);
    long v = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
      fail("column '" + columns_[col] + "' is not an integer: '" + f + "'");
    }
    return v;
  }

  std::size_t line() const { return line_no_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw InputError(source_ + ": row " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::string source_;
  std::vector<std::string> columns_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::string> fields_;
  std::size_t line_no_ = 0;
};

// Shortest round-trip representation, so written files reload bit-exactly.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return in;
}

}  // namespace subcast::csv
