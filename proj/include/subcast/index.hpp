#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "subcast/common.hpp"
#include "subcast/panel.hpp"

namespace subcast {

struct TransactionRecord {
  Date date;
  std::string region;
  double price_per_m2 = 0.0;
  double size_m2 = 0.0;
};

enum class WinsorKind { mad, sigma };

struct WinsorScheme {
  WinsorKind kind = WinsorKind::mad;
  double k = 3.0;
  int window = 52;
  int min_past = 8;  // fewer past changes than this: no clipping

  static WinsorScheme mad3() { return {WinsorKind::mad, 3.0, 52, 8}; }
  static WinsorScheme sigma2() { return {WinsorKind::sigma, 2.0, 52, 8}; }
};

struct IndexConfig {
  double trim_lo = 25.0;
  double trim_hi = 85.0;
  int roll_window = 200;
  WinsorScheme winsor = WinsorScheme::mad3();
  double base_value = 100.0;
  int smooth_window = 4;
  // Cutoffs are estimated on transactions dated within the first
  // trim_window_weeks of the grid (the first CV training span).
  int trim_window_weeks = 260;

  static IndexConfig regional() { return {}; }
  static IndexConfig global() {
    IndexConfig c;
    c.roll_window = 600;
    c.winsor = WinsorScheme::sigma2();
    return c;
  }

  void validate() const {
    if (!(trim_lo >= 0.0 && trim_lo < trim_hi && trim_hi <= 100.0))
      throw InputError("index config: need 0 <= trim_lo < trim_hi <= 100");
    if (roll_window < 1) throw InputError("index config: roll_window must be >= 1");
    if (smooth_window < 1) throw InputError("index config: smooth_window must be >= 1");
    if (winsor.window < 1 || winsor.k <= 0.0) throw InputError("index config: invalid winsorization scheme");
  }
};

struct TrimCutoffs {
  double low = 0.0;
  double high = 0.0;
};

struct RegionalIndex {
  WeeklySeries price;
  WeeklySeries counts;
  TrimCutoffs cutoffs;
};

// Every intermediate of the index pipeline, for diagnostics and oracles.
struct IndexStages {
  TrimCutoffs cutoffs;
  std::vector<TransactionRecord> kept;     // after trimming, time ordered
  std::vector<double> rolling_median;      // one per kept transaction
  std::vector<DatedValue> weekly_median;   // one per week with transactions
  WeeklySeries aligned;                    // forward-filled on the grid
  WeeklySeries smoothed;                   // trailing mean
  WeeklySeries winsorized;
  WeeklySeries rebased;
  WeeklySeries counts;
};

inline TrimCutoffs estimate_trim_cutoffs(std::span<const double> prices, double lo, double hi) {
  if (prices.empty()) throw InputError("trim cutoffs: empty estimation window");
  std::vector<double> v(prices.begin(), prices.end());
  return {percentile_linear(v, lo), percentile_linear(v, hi)};
}

// Sliding-window median over a stream, two balanced multisets.
class RollingMedian {
 public:
  explicit RollingMedian(int window) : window_(window) {
    if (window < 1) throw std::invalid_argument("rolling median window must be >= 1");
  }

  double push(double x) {
    history_.push_back(x);
    insert(x);
    if (static_cast<int>(history_.size()) - static_cast<int>(head_) > window_) {
      erase(history_[head_]);
      ++head_;
    }
    return median();
  }

 private:
  void insert(double x) {
    if (low_.empty() || x <= *low_.rbegin())
      low_.insert(x);
    else
      high_.insert(x);
    rebalance();
  }
  void erase(double x) {
    auto it = low_.find(x);
    if (it != low_.end()) {
      low_.erase(it);
    } else {
      high_.erase(high_.find(x));
    }
    rebalance();
  }
  // low_ holds ceil(n/2) smallest values
  void rebalance() {
    while (low_.size() > high_.size() + 1) {
      auto it = std::prev(low_.end());
      high_.insert(*it);
      low_.erase(it);
    }
    while (high_.size() > low_.size()) {
      auto it = high_.begin();
      low_.insert(*it);
      high_.erase(it);
    }
  }
  double median() const {
    if (low_.size() > high_.size()) return *low_.rbegin();
    return midpoint_of(*low_.rbegin(), *high_.begin());
  }

  int window_;
  std::vector<double> history_;
  std::size_t head_ = 0;
  std::multiset<double> low_, high_;
};

inline std::vector<double> rolling_median_price(std::span<const TransactionRecord> tx, int window) {
  RollingMedian rm(window);
  std::vector<double> out;
  out.reserve(tx.size());
  for (const auto& r : tx) out.push_back(rm.push(r.price_per_m2));
  return out;
}

// Keep the final value of each day, then take the median of the daily
// values within each week. Input must be date ordered.
inline std::vector<DatedValue> daily_last_weekly_median(std::span<const TransactionRecord> tx,
                                                        std::span<const double> medians) {
  if (tx.size() != medians.size()) throw std::invalid_argument("daily_last_weekly_median: size mismatch");
  std::vector<DatedValue> out;
  std::vector<double> daily;
  Date current_week{};
  auto flush = [&]() {
    if (!daily.empty()) out.push_back({current_week, median_of(daily)});
    daily.clear();
  };
  for (std::size_t i = 0; i < tx.size(); ++i) {
    const bool last_of_day = (i + 1 == tx.size()) || tx[i + 1].date != tx[i].date;
    if (!last_of_day) continue;
    const Date wk = week_end_of(tx[i].date);
    if (wk != current_week) {
      flush();
      current_week = wk;
    }
    daily.push_back(medians[i]);
  }
  flush();
  return out;
}

// Clips weekly changes to +-k * dispersion of the preceding window of raw
// changes (the current change is excluded) and rebuilds the level series
// from its first value.
inline WeeklySeries winsorize_changes(const WeeklySeries& in, const WinsorScheme& scheme) {
  const int n = in.size();
  if (n < 2) throw InputError("winsorize_changes: series needs at least two weeks");
  std::vector<double> d(static_cast<std::size_t>(n), 0.0);
  for (int t = 1; t < n; ++t) d[static_cast<std::size_t>(t)] = in[t] - in[t - 1];

  WeeklySeries out = in;
  double level = in[0];
  std::vector<double> window;
  for (int t = 1; t < n; ++t) {
    double change = d[static_cast<std::size_t>(t)];
    const int lo = std::max(1, t - scheme.window);
    if (t - lo >= scheme.min_past) {
      window.assign(d.begin() + lo, d.begin() + t);
      const double spread = scheme.kind == WinsorKind::mad ? mad_of(window) : sample_std(window);
      const double tau = scheme.k * spread;
      if (tau > 0.0) change = std::clamp(change, -tau, tau);
    }
    level += change;
    out.values[static_cast<std::size_t>(t)] = level;
  }
  return out;
}

inline WeeklySeries rebase(const WeeklySeries& in, double base) {
  if (in.values.empty()) return in;
  const double v0 = in.values.front();
  if (!(v0 > 0.0)) throw InputError("rebase: first value must be positive");
  WeeklySeries out = in;
  const double factor = base / v0;
  for (auto& v : out.values) v *= factor;
  out.values.front() = base;
  return out;
}

inline WeeklySeries weekly_counts(std::span<const TransactionRecord> tx, const WeekGrid& grid, std::string region) {
  WeeklySeries c{std::move(region), grid, std::vector<double>(static_cast<std::size_t>(grid.size()), 0.0),
                 std::vector<std::uint8_t>(static_cast<std::size_t>(grid.size()), 0)};
  for (const auto& r : tx) {
    const int w = grid.week_of(r.date);
    if (grid.contains(w)) c.values[static_cast<std::size_t>(w)] += 1.0;
  }
  return c;
}

// Full pipeline: trim -> rolling median -> daily last / weekly median ->
// grid alignment -> trailing mean -> winsorized changes -> rebase.
// Counts are raw (untrimmed) transactions per grid week.
inline IndexStages build_index_stages(std::vector<TransactionRecord> tx, const IndexConfig& cfg, const WeekGrid& grid,
                                      const std::string& region) {
  cfg.validate();
  if (tx.empty()) throw InputError("index: no transactions for region '" + region + "'");
  for (const auto& r : tx) {
    if (!(r.price_per_m2 > 0.0)) throw InputError("index: non-positive price in region '" + region + "'");
  }
  std::stable_sort(tx.begin(), tx.end(), [](const auto& a, const auto& b) { return a.date < b.date; });

  IndexStages st;
  const int trim_weeks = std::min(cfg.trim_window_weeks, grid.size());
  std::vector<double> window_prices;
  for (const auto& r : tx) {
    if (grid.week_of(r.date) < trim_weeks) window_prices.push_back(r.price_per_m2);
  }
  if (window_prices.size() < 2)
    throw InputError("index: fewer than two transactions in the cutoff window for region '" + region + "'");
  st.cutoffs = estimate_trim_cutoffs(window_prices, cfg.trim_lo, cfg.trim_hi);

  for (const auto& r : tx) {
    if (r.price_per_m2 >= st.cutoffs.low && r.price_per_m2 <= st.cutoffs.high) st.kept.push_back(r);
  }
  if (st.kept.empty()) throw InputError("index: trimming removed every transaction in region '" + region + "'");
  st.rolling_median = rolling_median_price(st.kept, cfg.roll_window);
  st.weekly_median = daily_last_weekly_median(st.kept, st.rolling_median);
  st.aligned = align_to_grid(st.weekly_median, grid, region).series;
  st.smoothed = trailing_mean(st.aligned, cfg.smooth_window);
  st.winsorized = grid.size() >= 2 ? winsorize_changes(st.smoothed, cfg.winsor) : st.smoothed;
  st.rebased = rebase(st.winsorized, cfg.base_value);
  for (double v : st.rebased.values) {
    if (!(v > 0.0)) throw InputError("index: rebased index became non-positive in region '" + region + "'");
  }
  st.counts = weekly_counts(tx, grid, region);
  return st;
}

inline RegionalIndex build_regional_index(std::vector<TransactionRecord> tx, const IndexConfig& cfg,
                                          const WeekGrid& grid, const std::string& region) {
  auto st = build_index_stages(std::move(tx), cfg, grid, region);
  return {std::move(st.rebased), std::move(st.counts), st.cutoffs};
}

inline const char* kGlobalRegion = "GLOBAL";

// Pools every region's transactions (input order breaks same-day ties).
inline RegionalIndex build_global_index(std::vector<TransactionRecord> all, const WeekGrid& grid,
                                        const IndexConfig& cfg = IndexConfig::global()) {
  return build_regional_index(std::move(all), cfg, grid, kGlobalRegion);
}

inline std::vector<TransactionRecord> read_transactions_csv(std::istream& in, const std::string& source) {
  csv::Reader r(in, source);
  const auto c_date = r.require("date");
  const auto c_region = r.require("region");
  const auto c_price = r.require("price_per_m2");
  const auto c_size = r.require("size_m2");
  std::vector<TransactionRecord> out;
  while (r.next()) {
    TransactionRecord t;
    try {
      t.date = parse_date(r.text(c_date));
    } catch (const InputError& e) {
      r.fail(e.what());
    }
    t.region = r.text(c_region);
    if (t.region.empty()) r.fail("empty region");
    t.price_per_m2 = r.number(c_price);
    if (!(t.price_per_m2 > 0.0)) r.fail("price_per_m2 must be positive");
    t.size_m2 = r.number(c_size);
    if (!(t.size_m2 > 0.0)) r.fail("size_m2 must be positive");
    out.push_back(std::move(t));
  }
  return out;
}

inline void write_transactions_csv(std::ostream& os, std::span<const TransactionRecord> tx) {
  os << "date,region,price_per_m2,size_m2\n";
  for (const auto& t : tx) {
    os << format_date(t.date) << ',' << t.region << ',' << csv::format_double(t.price_per_m2) << ','
       << csv::format_double(t.size_m2) << '\n';
  }
}

}  // namespace subcast
