#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace subcast {

// Raised for malformed or inconsistent inputs (schema violations, bad
// parameters). The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arithmetic midpoint used for even-count medians everywhere, so that
// streaming and re-sorting implementations agree bit for bit.
inline double midpoint_of(double a, double b) { return 0.5 * (a + b); }

inline double mean_of(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty range");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Median of an already sorted range.
inline double sorted_median(std::span<const double> sorted) {
  const std::size_t n = sorted.size();
  if (n == 0) throw std::invalid_argument("median of empty range");
  if (n % 2 == 1) return sorted[n / 2];
  return midpoint_of(sorted[n / 2 - 1], sorted[n / 2]);
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return sorted_median(v);
}

// Sample standard deviation (n - 1 denominator), two-pass.
inline double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Median absolute deviation about the median, unscaled.
inline double mad_of(std::span<const double> v) {
  const double m = median_of(std::vector<double>(v.begin(), v.end()));
  std::vector<double> dev;
  dev.reserve(v.size());
  for (double x : v) dev.push_back(std::fabs(x - m));
  return median_of(std::move(dev));
}

// Percentile with linear interpolation between order statistics
// (position (n - 1) * p / 100 on the sorted sample).
inline double percentile_linear(std::vector<double> v, double pct) {
  if (v.empty()) throw std::invalid_argument("percentile of empty sample");
  if (!(pct >= 0.0 && pct <= 100.0)) throw std::invalid_argument("percentile outside [0, 100]");
  std::sort(v.begin(), v.end());
  const double pos = (static_cast<double>(v.size()) - 1.0) * pct / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

// Mean ranks (1-based) with ties sharing the average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// 64-bit FNV-1a, used for content digests and per-job seeds.
class Fnv1a {
 public:
  Fnv1a& add(std::string_view s) {
    for (unsigned char c : s) {
      h_ ^= c;
      h_ *= 1099511628211ULL;
    }
    // field separator so ("ab","c") != ("a","bc")
    h_ ^= 0xff;
    h_ *= 1099511628211ULL;
    return *this;
  }
  Fnv1a& add(std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (x >> (8 * i)) & 0xffU;
      h_ *= 1099511628211ULL;
    }
    return *this;
  }
  Fnv1a& add(double x) {
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(x));
    std::memcpy(&bits, &x, sizeof(x));
    return add(bits);
  }
  std::uint64_t value() const { return h_; }
  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[15 - i] = digits[(h_ >> (4 * i)) & 0xf];
    return out;
  }

 private:
  std::uint64_t h_ = 14695981039346656037ULL;
};

}  // namespace subcast
