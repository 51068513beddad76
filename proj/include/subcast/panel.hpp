#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "subcast/common.hpp"
#include "subcast/csv.hpp"

namespace subcast {

using Date = std::chrono::sys_days;

inline Date make_date(int y, unsigned m, unsigned d) {
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw InputError("invalid calendar date");
  return Date{ymd};
}

// Strict ISO-8601 calendar date, YYYY-MM-DD.
inline Date parse_date(std::string_view s) {
  auto digits = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (s[i] < '0' || s[i] > '9') throw InputError("invalid ISO date '" + std::string(s) + "'");
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw InputError("invalid ISO date '" + std::string(s) + "'");
  const std::chrono::year_month_day ymd{std::chrono::year{digits(0, 4)},
                                        std::chrono::month{static_cast<unsigned>(digits(5, 2))},
                                        std::chrono::day{static_cast<unsigned>(digits(8, 2))}};
  if (!ymd.ok()) throw InputError("invalid ISO date '" + std::string(s) + "'");
  return Date{ymd};
}

inline std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

// Final day (Sunday) of the week containing d: the first Sunday >= d.
inline Date week_end_of(Date d) {
  const unsigned wd = std::chrono::weekday{d}.c_encoding();  // Sunday == 0
  return d + std::chrono::days{(7 - wd) % 7};
}

struct WeekStamp {
  int index = 0;
  Date end{};
};

// Contiguous Sunday-ending weekly calendar.
class WeekGrid {
 public:
  WeekGrid() = default;
  WeekGrid(Date first_week_end, int weeks) : first_(first_week_end), size_(weeks) {
    if (std::chrono::weekday{first_week_end} != std::chrono::Sunday)
      throw InputError("grid start " + format_date(first_week_end) + " is not a Sunday");
    if (weeks < 1) throw InputError("grid must contain at least one week");
  }

  int size() const { return size_; }
  Date first_end() const { return first_; }
  Date last_end() const { return end_of(size_ - 1); }
  Date end_of(int index) const { return first_ + std::chrono::days{7 * index}; }
  WeekStamp stamp(int index) const { return {index, end_of(index)}; }

  // Week ordinal of a date relative to the grid; may be negative or >= size().
  int week_of(Date d) const {
    const auto diff = (week_end_of(d) - first_).count();
    return static_cast<int>(diff / 7);
  }
  bool contains(int index) const { return index >= 0 && index < size_; }

  bool operator==(const WeekGrid&) const = default;

 private:
  Date first_{};
  int size_ = 0;
};

struct WeeklySeries {
  std::string region;
  WeekGrid grid;
  std::vector<double> values;
  std::vector<std::uint8_t> filled;  // 1 = forward-filled week

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int t) const { return values[static_cast<std::size_t>(t)]; }
};

struct DatedValue {
  Date date;
  double value;
};

struct AlignResult {
  WeeklySeries series;
  std::size_t dropped_after_end = 0;
};

// Places dated observations on the grid and forward-fills gaps. Several
// observations in one week: the latest date wins, input order breaks ties.
// Observations before the grid seed the first week when it has none.
inline AlignResult align_to_grid(std::span<const DatedValue> obs, const WeekGrid& grid, std::string region = {}) {
  if (obs.empty()) throw InputError("align_to_grid: no observations" + (region.empty() ? "" : " for " + region));
  const auto n = static_cast<std::size_t>(grid.size());
  std::vector<std::optional<double>> slot(n);
  std::vector<Date> slot_date(n);
  std::optional<double> carry;
  Date carry_date{};
  AlignResult out;
  for (const auto& o : obs) {
    const int w = grid.week_of(o.date);
    if (w >= grid.size()) {
      ++out.dropped_after_end;
      continue;
    }
    if (w < 0) {
      if (!carry || o.date >= carry_date) {
        carry = o.value;
        carry_date = o.date;
      }
      continue;
    }
    auto& s = slot[static_cast<std::size_t>(w)];
    if (!s || o.date >= slot_date[static_cast<std::size_t>(w)]) {
      s = o.value;
      slot_date[static_cast<std::size_t>(w)] = o.date;
    }
  }
  out.series.region = std::move(region);
  out.series.grid = grid;
  out.series.values.resize(n);
  out.series.filled.assign(n, 0);
  std::optional<double> last = carry;
  for (std::size_t t = 0; t < n; ++t) {
    if (slot[t]) {
      last = slot[t];
      out.series.values[t] = *slot[t];
    } else {
      if (!last) {
        throw InputError("align_to_grid: no observation at or before grid start " + format_date(grid.first_end()) +
                         (out.series.region.empty() ? "" : " for " + out.series.region));
      }
      out.series.values[t] = *last;
      out.series.filled[t] = 1;
    }
  }
  return out;
}

// output[t] = mean(input[max(0, t - w + 1) .. t]); warm-up uses the prefix.
inline WeeklySeries trailing_mean(const WeeklySeries& in, int window = 4) {
  if (window < 1) throw std::invalid_argument("trailing_mean: window must be >= 1");
  WeeklySeries out = in;
  const int n = in.size();
  for (int t = 0; t < n; ++t) {
    const int lo = std::max(0, t - window + 1);
    double s = 0.0;
    for (int i = lo; i <= t; ++i) s += in.values[static_cast<std::size_t>(i)];
    out.values[static_cast<std::size_t>(t)] = s / static_cast<double>(t - lo + 1);
  }
  return out;
}

// Causal lag block (x[t-1], ..., x[t-L]); nullopt when history is short.
inline std::optional<std::vector<double>> lag_block(const WeeklySeries& s, int lags, int t) {
  if (lags < 1) throw std::invalid_argument("lag_block: L must be positive");
  if (t - lags < 0 || t >= s.size()) return std::nullopt;
  std::vector<double> out(static_cast<std::size_t>(lags));
  for (int i = 1; i <= lags; ++i) out[static_cast<std::size_t>(i - 1)] = s[t - i];
  return out;
}

inline void write_weekly_csv_header(std::ostream& os) { os << "week_end_date,region,value,filled\n"; }

inline void write_weekly_csv_rows(std::ostream& os, const WeeklySeries& s) {
  for (int t = 0; t < s.size(); ++t) {
    os << format_date(s.grid.end_of(t)) << ',' << s.region << ',' << csv::format_double(s[t]) << ','
       << static_cast<int>(s.filled[static_cast<std::size_t>(t)]) << '\n';
  }
}

// Reads one region's series back; rows must cover a contiguous weekly grid.
inline std::vector<WeeklySeries> read_weekly_csv(std::istream& in, const std::string& source) {
  csv::Reader r(in, source);
  const auto c_date = r.require("week_end_date");
  const auto c_region = r.require("region");
  const auto c_value = r.require("value");
  const auto c_filled = r.require("filled");
  std::vector<WeeklySeries> out;
  std::vector<Date> firsts;
  while (r.next()) {
    const Date d = parse_date(r.text(c_date));
    const std::string& region = r.text(c_region);
    if (out.empty() || out.back().region != region) {
      out.push_back(WeeklySeries{region, {}, {}, {}});
      firsts.push_back(d);
    }
    auto& s = out.back();
    const Date expected = firsts.back() + std::chrono::days{7 * s.size()};
    if (d != expected) r.fail("week_end_date " + format_date(d) + " breaks the weekly grid");
    s.values.push_back(r.number(c_value));
    const long f = r.integer(c_filled);
    if (f != 0 && f != 1) r.fail("filled must be 0 or 1");
    s.filled.push_back(static_cast<std::uint8_t>(f));
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].grid = WeekGrid(firsts[i], out[i].size());
  return out;
}

}  // namespace subcast
