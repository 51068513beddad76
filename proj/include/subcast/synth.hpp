#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "subcast/common.hpp"
#include "subcast/features.hpp"
#include "subcast/geo.hpp"
#include "subcast/index.hpp"
#include "subcast/panel.hpp"
#include "subcast/sentiment.hpp"

namespace subcast {

namespace synth {

struct ScenarioConfig {
  std::string name = "smooth";
  int regions = 8;
  int weeks = 520;
  int warmup_weeks = 30;
  Date first_week_end = make_date(2015, 1, 4);

  // latent log price: log(base_r) + trend * t + coupling * x_{t - lead} + u_t,
  // u_t = ar * u_{t-1} + vol * e_t
  double base_price = 1000.0;
  double trend = 0.0005;
  double ar = 0.9;
  double vol = 0.004;

  double tx_per_week = 30.0;
  double noise_sd = 0.12;  // lognormal transaction noise
  double outlier_rate = 0.0;
  double outlier_scale = 100.0;

  // exogenous channel: quasi-cyclic AR(2) with unit stationary variance
  int lead = 20;
  double coupling = 0.0;
  double x_period = 60.0;
  double x_damping = 0.97;
  double sar_noise = 0.1;

  int articles_per_week = 5;
  int embedding_dim = 16;
  double rate_vol = 0.05;

  std::uint64_t seed = 1;

  void validate() const {
    if (regions < 1 || weeks < 1 || warmup_weeks < 0) throw InputError("scenario: counts must be positive");
    if (!(tx_per_week > 0.0)) throw InputError("scenario: tx_per_week must be positive");
    if (lead < 0 || lead * 4 >= weeks) throw InputError("scenario: lead must satisfy 0 <= lead < weeks / 4");
    if (outlier_rate < 0.0 || outlier_rate > 1.0) throw InputError("scenario: outlier_rate outside [0, 1]");
    if (!(x_damping > 0.0 && x_damping < 1.0)) throw InputError("scenario: x_damping must lie in (0, 1)");
    if (embedding_dim < 1 || articles_per_week < 1) throw InputError("scenario: sentiment sizes must be positive");
  }

  static ScenarioConfig preset(const std::string& name) {
    ScenarioConfig c;
    c.name = name;
    if (name == "smooth") return c;
    if (name == "outliers") {
      c.outlier_rate = 0.02;
      return c;
    }
    if (name == "leading20") {
      c.lead = 20;
      c.coupling = 0.08;
      c.trend = 0.0;
      return c;
    }
    if (name == "null") {
      c.coupling = 0.0;
      c.trend = 0.0;
      return c;
    }
    throw InputError("unknown scenario preset '" + name + "' (expected smooth, outliers, leading20 or null)");
  }
};

struct Scenario {
  ScenarioConfig cfg;
  WeekGrid grid;
  std::vector<std::string> regions;
  std::vector<TransactionRecord> transactions;  // date ordered
  std::vector<ArticleRecord> articles;
  std::vector<SarObservation> sar;
  std::vector<NdbiObservation> ndbi;
  std::vector<RateObservation> rates;
  std::vector<WeeklySeries> latent;     // price level per region on the grid
  std::vector<WeeklySeries> exogenous;  // x per region on the grid
};

inline std::string region_name(int r) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "R%02d", r + 1);
  return buf;
}

inline Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  Scenario s;
  s.cfg = cfg;
  s.grid = WeekGrid(cfg.first_week_end, cfg.weeks);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::poisson_distribution<int> volume(cfg.tx_per_week);
  std::uniform_int_distribution<int> weekday(0, 6);

  const int t0 = -cfg.warmup_weeks;
  const int span = cfg.weeks + cfg.warmup_weeks;
  const double omega = 2.0 * std::numbers::pi / cfg.x_period;
  const double a1 = 2.0 * cfg.x_damping * std::cos(omega);
  const double a2 = -cfg.x_damping * cfg.x_damping;
  // stationary variance of an AR(2) with unit innovations
  const double x_var = (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1));
  const double x_sd = std::sqrt(x_var);

  std::vector<std::vector<TransactionRecord>> per_region(static_cast<std::size_t>(cfg.regions));
  for (int r = 0; r < cfg.regions; ++r) {
    const std::string name = region_name(r);
    s.regions.push_back(name);
    const double base = cfg.base_price * (0.7 + 0.6 * unif(rng));

    // burn in x so the series is stationary by t0 - lead
    const int burn = 200;
    std::vector<double> x(static_cast<std::size_t>(span + cfg.lead + burn));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double prev1 = i >= 1 ? x[i - 1] : 0.0;
      const double prev2 = i >= 2 ? x[i - 2] : 0.0;
      x[i] = a1 * prev1 + a2 * prev2 + gauss(rng);
    }
    auto x_at = [&](int t) { return x[static_cast<std::size_t>(t - t0 + cfg.lead + burn)] / x_sd; };

    WeeklySeries latent{name, s.grid, std::vector<double>(static_cast<std::size_t>(cfg.weeks)),
                        std::vector<std::uint8_t>(static_cast<std::size_t>(cfg.weeks), 0)};
    WeeklySeries exo = latent;
    double u = 0.0;
    for (int t = t0; t < cfg.weeks; ++t) {
      u = cfg.ar * u + cfg.vol * gauss(rng);
      const double logp = std::log(base) + cfg.trend * t + cfg.coupling * x_at(t - cfg.lead) + u;
      const double level = std::exp(logp);
      if (t >= 0) {
        latent.values[static_cast<std::size_t>(t)] = level;
        exo.values[static_cast<std::size_t>(t)] = x_at(t);
      }
      const int n = volume(rng);
      const Date week_end = s.grid.end_of(t);
      std::vector<TransactionRecord> week;
      for (int i = 0; i < n; ++i) {
        TransactionRecord tx;
        tx.date = week_end - std::chrono::days{weekday(rng)};
        tx.region = name;
        tx.price_per_m2 = level * std::exp(cfg.noise_sd * gauss(rng));
        if (unif(rng) < cfg.outlier_rate) tx.price_per_m2 *= cfg.outlier_scale;
        tx.size_m2 = 40.0 + 160.0 * unif(rng);
        week.push_back(std::move(tx));
      }
      std::stable_sort(week.begin(), week.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
      for (auto& tx : week) per_region[static_cast<std::size_t>(r)].push_back(std::move(tx));

      // SAR passes every 6 days and one NDBI composite per week
      for (int d = 0; d < 7; ++d) {
        const Date day = week_end - std::chrono::days{d};
        if (day.time_since_epoch().count() % 6 != 0) continue;
        SarObservation o{day, name, -10.0 + x_at(t) + cfg.sar_noise * gauss(rng),
                         -16.0 + 0.5 * x_at(t) + cfg.sar_noise * gauss(rng)};
        s.sar.push_back(std::move(o));
      }
      const double nd = 0.1 + 0.1 * x_at(t) + 0.02 * gauss(rng);
      s.ndbi.push_back({week_end - std::chrono::days{3}, name, std::clamp(nd, -1.0, 1.0)});
    }
    s.latent.push_back(std::move(latent));
    s.exogenous.push_back(std::move(exo));
  }

  // interleave regions by date; within a date keep region order
  for (auto& v : per_region) s.transactions.insert(s.transactions.end(), v.begin(), v.end());
  std::stable_sort(s.transactions.begin(), s.transactions.end(),
                   [](const auto& a, const auto& b) { return a.date < b.date; });
  std::stable_sort(s.sar.begin(), s.sar.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
  std::stable_sort(s.ndbi.begin(), s.ndbi.end(), [](const auto& a, const auto& b) { return a.date < b.date; });

  // city-level articles with uninformative tone and placeholder embeddings
  double rate = 1.5;
  for (int t = t0; t < cfg.weeks; ++t) {
    const Date week_end = s.grid.end_of(t);
    for (int i = 0; i < cfg.articles_per_week; ++i) {
      ArticleRecord a;
      a.date = week_end - std::chrono::days{weekday(rng)};
      a.positive_score = 5.0 * unif(rng);
      a.negative_score = 5.0 * unif(rng);
      a.relevant = unif(rng) < 0.9;
      a.embedding.resize(static_cast<std::size_t>(cfg.embedding_dim));
      for (auto& e : a.embedding) e = gauss(rng);
      s.articles.push_back(std::move(a));
    }
    rate = std::max(0.0, rate + cfg.rate_vol * gauss(rng));
    s.rates.push_back({week_end - std::chrono::days{2}, rate, "3M"});
  }
  std::stable_sort(s.articles.begin(), s.articles.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
  return s;
}

inline std::vector<TransactionRecord> region_transactions(const Scenario& s, const std::string& region) {
  std::vector<TransactionRecord> out;
  for (const auto& t : s.transactions)
    if (t.region == region) out.push_back(t);
  return out;
}

inline PanelInputs to_inputs(const Scenario& s) {
  return {s.transactions, s.articles, s.sar, s.ndbi, s.rates};
}

inline PanelConfig panel_config(const Scenario& s) {
  PanelConfig c;
  c.grid = s.grid;
  c.regions = s.regions;
  c.freeze_weeks = std::min(260, s.grid.size());
  return c;
}

// Naive recomputation of the index pipeline: re-sorted windows, explicit
// grouping and scans. Slow, but shares no code with the streaming path.
inline RegionalIndex oracle_index(std::vector<TransactionRecord> tx, const IndexConfig& cfg, const WeekGrid& grid,
                                  const std::string& region) {
  if (tx.empty()) throw InputError("oracle_index: no transactions");
  std::stable_sort(tx.begin(), tx.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
  const long n_weeks = grid.size();
  const auto first = grid.first_end();
  auto week_index = [&](Date d) {
    const auto wd = std::chrono::weekday{d}.c_encoding();
    const Date end = d + std::chrono::days{(7 - wd) % 7};
    return static_cast<long>((end - first).count() / 7);
  };
  auto sorted_mid = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };

  // cutoffs
  std::vector<double> win;
  for (const auto& t : tx)
    if (week_index(t.date) < std::min<long>(cfg.trim_window_weeks, n_weeks)) win.push_back(t.price_per_m2);
  std::sort(win.begin(), win.end());
  auto pct = [&](double p) {
    const double pos = (static_cast<double>(win.size()) - 1.0) * p / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo + 1 >= win.size()) return win.back();
    return win[lo] + (pos - static_cast<double>(lo)) * (win[lo + 1] - win[lo]);
  };
  const TrimCutoffs cut{pct(cfg.trim_lo), pct(cfg.trim_hi)};

  std::vector<TransactionRecord> kept;
  for (const auto& t : tx)
    if (t.price_per_m2 >= cut.low && t.price_per_m2 <= cut.high) kept.push_back(t);

  // rolling median, one full sort per step
  std::vector<double> med(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const std::size_t lo = i + 1 >= static_cast<std::size_t>(cfg.roll_window) ? i + 1 - cfg.roll_window : 0;
    std::vector<double> w;
    for (std::size_t j = lo; j <= i; ++j) w.push_back(kept[j].price_per_m2);
    med[i] = sorted_mid(std::move(w));
  }

  // last value per day, then median per week
  std::map<Date, double> daily;
  for (std::size_t i = 0; i < kept.size(); ++i) daily[kept[i].date] = med[i];
  std::map<long, std::vector<double>> weekly;
  for (const auto& [d, v] : daily) weekly[week_index(d)].push_back(v);

  // forward fill, seeded from the latest pre-grid week
  std::vector<double> x(static_cast<std::size_t>(n_weeks));
  std::vector<std::uint8_t> filled(static_cast<std::size_t>(n_weeks), 1);
  bool have = false;
  double carry = 0.0;
  for (const auto& [w, vals] : weekly) {
    if (w < 0) {
      carry = sorted_mid(vals);
      have = true;
    }
  }
  for (long t = 0; t < n_weeks; ++t) {
    auto it = weekly.find(t);
    if (it != weekly.end()) {
      carry = sorted_mid(it->second);
      have = true;
      filled[static_cast<std::size_t>(t)] = 0;
    }
    if (!have) throw InputError("oracle_index: no data at grid start");
    x[static_cast<std::size_t>(t)] = carry;
  }

  std::vector<double> sm(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const std::size_t lo = t + 1 >= static_cast<std::size_t>(cfg.smooth_window) ? t + 1 - cfg.smooth_window : 0;
    double acc = 0.0;
    for (std::size_t i = lo; i <= t; ++i) acc += x[i];
    sm[t] = acc / static_cast<double>(t - lo + 1);
  }

  // winsorized changes against the raw past window
  std::vector<double> d(sm.size(), 0.0);
  for (std::size_t t = 1; t < sm.size(); ++t) d[t] = sm[t] - sm[t - 1];
  std::vector<double> lvl(sm.size());
  lvl[0] = sm[0];
  for (std::size_t t = 1; t < sm.size(); ++t) {
    const long lo = std::max<long>(1, static_cast<long>(t) - cfg.winsor.window);
    double change = d[t];
    if (static_cast<long>(t) - lo >= cfg.winsor.min_past) {
      std::vector<double> w(d.begin() + lo, d.begin() + static_cast<long>(t));
      double spread = 0.0;
      if (cfg.winsor.kind == WinsorKind::mad) {
        const double m = sorted_mid(w);
        std::vector<double> dev;
        for (double v : w) dev.push_back(std::fabs(v - m));
        spread = sorted_mid(dev);
      } else {
        double s = 0.0;
        for (double v : w) s += v;
        const double mean = s / static_cast<double>(w.size());
        double ss = 0.0;
        for (double v : w) ss += (v - mean) * (v - mean);
        spread = std::sqrt(ss / static_cast<double>(w.size() - 1));
      }
      const double tau = cfg.winsor.k * spread;
      if (tau > 0.0) change = std::min(std::max(change, -tau), tau);
    }
    lvl[t] = lvl[t - 1] + change;
  }

  RegionalIndex out;
  out.cutoffs = cut;
  const double factor = cfg.base_value / lvl[0];
  out.price = WeeklySeries{region, grid, lvl, filled};
  for (auto& v : out.price.values) v *= factor;
  out.price.values[0] = cfg.base_value;
  out.counts = WeeklySeries{region, grid, std::vector<double>(static_cast<std::size_t>(n_weeks), 0.0),
                            std::vector<std::uint8_t>(static_cast<std::size_t>(n_weeks), 0)};
  for (const auto& t : tx) {
    const long w = week_index(t.date);
    if (w >= 0 && w < n_weeks) out.counts.values[static_cast<std::size_t>(w)] += 1.0;
  }
  return out;
}

}  // namespace synth
}  // namespace subcast
