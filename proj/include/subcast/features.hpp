#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subcast/common.hpp"
#include "subcast/geo.hpp"
#include "subcast/index.hpp"
#include "subcast/panel.hpp"
#include "subcast/sentiment.hpp"

namespace subcast {

inline constexpr std::array<int, 9> kHorizons{2, 6, 10, 14, 18, 22, 26, 30, 34};
inline constexpr int kPriceLags = 12;

enum class Modality { P = 0, C, S, B, I, G };
inline constexpr std::array<char, 6> kModalityLetters{'P', 'C', 'S', 'B', 'I', 'G'};

struct ModalityTag {
  std::array<bool, 6> has{};
  SentimentVariant sentiment = SentimentVariant::full;
  BSource b_source = BSource::sar;

  bool contains(Modality m) const { return has[static_cast<std::size_t>(m)]; }

  int width() const {
    static constexpr std::array<int, 6> base{kPriceLags, kPriceLags, 0, kGeoDims, kPriceLags, 2 * kPriceLags};
    int w = 0;
    for (std::size_t i = 0; i < has.size(); ++i) {
      if (!has[i]) continue;
      w += i == static_cast<std::size_t>(Modality::S) ? sentiment_width(sentiment) : base[i];
    }
    return w;
  }

  // Canonical rendering: letters in P, C, S, B, I, G order, then modifiers.
  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < has.size(); ++i)
      if (has[i]) s += kModalityLetters[i];
    if (sentiment == SentimentVariant::nsi_only) s += "/nsi";
    if (sentiment == SentimentVariant::pca_only) s += "/pca";
    if (b_source == BSource::ndbi) s += "/ndbi";
    return s;
  }

  bool operator==(const ModalityTag&) const = default;
};

// Grammar: letters from {P,C,S,B,I,G} without repeats, optionally followed by
// modifiers "/nsi" or "/pca" (needs S) and "/ndbi" (needs B).
inline ModalityTag parse_tag(std::string_view text) {
  const std::string original(text);
  if (text.empty()) throw InputError("modality tag is empty");
  const auto slash = text.find('/');
  const std::string_view letters = text.substr(0, slash);
  if (letters.empty()) throw InputError("modality tag '" + original + "' has no modalities");
  ModalityTag tag;
  for (char c : letters) {
    const auto it = std::find(kModalityLetters.begin(), kModalityLetters.end(), c);
    if (it == kModalityLetters.end())
      throw InputError("modality tag '" + original + "': unknown modality '" + std::string(1, c) + "'");
    auto& slot = tag.has[static_cast<std::size_t>(it - kModalityLetters.begin())];
    if (slot) throw InputError("modality tag '" + original + "': duplicate modality '" + std::string(1, c) + "'");
    slot = true;
  }
  std::string_view rest = slash == std::string_view::npos ? std::string_view{} : text.substr(slash);
  bool seen_variant = false;
  while (!rest.empty()) {
    const auto next = rest.find('/', 1);
    const std::string_view mod = rest.substr(1, next == std::string_view::npos ? std::string_view::npos : next - 1);
    if (mod == "nsi" || mod == "pca") {
      if (!tag.contains(Modality::S)) throw InputError("modality tag '" + original + "': /" + std::string(mod) + " needs S");
      if (seen_variant) throw InputError("modality tag '" + original + "': conflicting sentiment variants");
      seen_variant = true;
      tag.sentiment = mod == "nsi" ? SentimentVariant::nsi_only : SentimentVariant::pca_only;
    } else if (mod == "ndbi") {
      if (!tag.contains(Modality::B)) throw InputError("modality tag '" + original + "': /ndbi needs B");
      if (tag.b_source == BSource::ndbi) throw InputError("modality tag '" + original + "': repeated /ndbi");
      tag.b_source = BSource::ndbi;
    } else {
      throw InputError("modality tag '" + original + "': unknown modifier '/" + std::string(mod) + "'");
    }
    rest = next == std::string_view::npos ? std::string_view{} : rest.substr(next);
  }
  return tag;
}

inline const std::vector<std::string>& default_tag_chain() {
  static const std::vector<std::string> chain{"P", "PC", "PCS", "PCSB", "PCSBI", "PCSBIG"};
  return chain;
}

// ---- interest rates ----------------------------------------------------

struct RateObservation {
  Date date;
  double rate_pct = 0.0;
  std::string tenor;
};

enum class WeeklyAggregation { mean, last };

struct RatesConfig {
  std::string tenor = "3M";
  WeeklyAggregation aggregation = WeeklyAggregation::mean;
};

// Observations without a tenor are accepted for any configured tenor.
inline WeeklySeries weekly_rates(std::span<const RateObservation> obs, const WeekGrid& grid,
                                 const RatesConfig& cfg = {}) {
  std::vector<RateObservation> mine;
  for (const auto& o : obs)
    if (o.tenor.empty() || o.tenor == cfg.tenor) mine.push_back(o);
  if (mine.empty()) throw InputError("rates: no observations for tenor " + cfg.tenor);
  std::stable_sort(mine.begin(), mine.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
  std::map<int, std::pair<double, int>> acc;
  std::map<int, double> last;
  for (const auto& o : mine) {
    const int w = grid.week_of(o.date);
    if (w >= grid.size()) continue;
    auto& a = acc[w];
    a.first += o.rate_pct;
    a.second += 1;
    last[w] = o.rate_pct;
  }
  std::vector<DatedValue> weekly;
  for (const auto& [w, a] : acc)
    weekly.push_back(
        {grid.end_of(w), cfg.aggregation == WeeklyAggregation::mean ? a.first / a.second : last.at(w)});
  return align_to_grid(weekly, grid, "CITY").series;
}

inline std::vector<RateObservation> read_rates_csv(std::istream& in, const std::string& source) {
  csv::Reader r(in, source);
  const auto c_date = r.require("date");
  const auto c_rate = r.require("rate_pct");
  const bool has_tenor = r.has("tenor");
  const auto c_tenor = has_tenor ? r.require("tenor") : 0;
  std::vector<RateObservation> out;
  while (r.next()) {
    RateObservation o;
    try {
      o.date = parse_date(r.text(c_date));
    } catch (const InputError& e) {
      r.fail(e.what());
    }
    o.rate_pct = r.number(c_rate);
    if (has_tenor) o.tenor = r.text(c_tenor);
    out.push_back(std::move(o));
  }
  return out;
}

inline void write_rates_csv(std::ostream& os, std::span<const RateObservation> obs) {
  os << "date,rate_pct,tenor\n";
  for (const auto& o : obs) os << format_date(o.date) << ',' << csv::format_double(o.rate_pct) << ',' << o.tenor << '\n';
}

// ---- panel ------------------------------------------------------------

struct RegionPanel {
  RegionalIndex index;
  std::optional<GeoPanel> sar;
  std::optional<GeoPanel> ndbi;
};

// Everything the feature builder reads, on one grid.
struct PanelData {
  WeekGrid grid;
  std::vector<std::string> regions;  // forecasting targets, sorted
  std::map<std::string, RegionPanel> by_region;
  std::optional<RegionalIndex> global;
  std::optional<SentimentFeatures> sentiment;
  std::optional<WeeklySeries> rates;

  const RegionPanel& region(const std::string& r) const {
    auto it = by_region.find(r);
    if (it == by_region.end()) throw InputError("unknown region '" + r + "'");
    return it->second;
  }
};

struct PanelInputs {
  std::vector<TransactionRecord> transactions;
  std::vector<ArticleRecord> articles;
  std::vector<SarObservation> sar;
  std::vector<NdbiObservation> ndbi;
  std::vector<RateObservation> rates;
};

struct PanelConfig {
  WeekGrid grid;
  std::vector<std::string> regions;  // empty: every region in the transactions
  IndexConfig regional = IndexConfig::regional();
  IndexConfig global = IndexConfig::global();
  SentimentConfig sentiment;
  RatesConfig rates;
  int freeze_weeks = 260;  // trim cutoffs and PCA are fit on these first weeks
};

// Builds every series the feature blocks read. Optional modalities are left
// empty when their inputs are absent; tags that need them fail later.
inline PanelData build_panel(const PanelInputs& in, const PanelConfig& cfg) {
  PanelData p;
  p.grid = cfg.grid;
  std::map<std::string, std::vector<TransactionRecord>> by_region;
  for (const auto& t : in.transactions) by_region[t.region].push_back(t);
  if (cfg.regions.empty()) {
    for (const auto& [r, v] : by_region) p.regions.push_back(r);
  } else {
    p.regions = cfg.regions;
    std::sort(p.regions.begin(), p.regions.end());
  }
  if (p.regions.empty()) throw InputError("panel: no regions with transactions");
  auto regional = cfg.regional;
  regional.trim_window_weeks = cfg.freeze_weeks;
  auto global = cfg.global;
  global.trim_window_weeks = cfg.freeze_weeks;
  for (const auto& r : p.regions) {
    if (r == kGlobalRegion) throw InputError("panel: '" + r + "' is reserved for the pooled index");
    auto it = by_region.find(r);
    if (it == by_region.end()) throw InputError("panel: no transactions for region '" + r + "'");
    RegionPanel rp;
    rp.index = build_regional_index(it->second, regional, cfg.grid, r);
    if (!in.sar.empty()) {
      const bool any = std::any_of(in.sar.begin(), in.sar.end(), [&](const auto& o) { return o.region == r; });
      if (any) rp.sar = GeoPanel::from_sar(in.sar, cfg.grid, r);
    }
    if (!in.ndbi.empty()) {
      const bool any = std::any_of(in.ndbi.begin(), in.ndbi.end(), [&](const auto& o) { return o.region == r; });
      if (any) rp.ndbi = GeoPanel::from_ndbi(in.ndbi, cfg.grid, r);
    }
    p.by_region.emplace(r, std::move(rp));
  }
  // the pooled series covers the selected regions only, in input order
  std::vector<TransactionRecord> pooled;
  for (const auto& t : in.transactions)
    if (p.by_region.count(t.region)) pooled.push_back(t);
  p.global = build_global_index(std::move(pooled), cfg.grid, global);
  if (!in.articles.empty()) {
    auto sc = cfg.sentiment;
    sc.pca_fit_weeks = cfg.freeze_weeks;
    p.sentiment = SentimentFeatures(in.articles, cfg.grid, sc);
  }
  if (!in.rates.empty()) p.rates = weekly_rates(in.rates, cfg.grid, cfg.rates);
  return p;
}

// Earliest decision week at which every block of the tag is available.
inline int first_available_week(const ModalityTag& tag) {
  int t = 0;
  if (tag.contains(Modality::P) || tag.contains(Modality::C) || tag.contains(Modality::I) ||
      tag.contains(Modality::G))
    t = std::max(t, kPriceLags);
  if (tag.contains(Modality::S)) t = std::max(t, 4);
  if (tag.contains(Modality::B)) t = std::max(t, kGeoOffsets.back());
  return t;
}

inline std::vector<std::string> column_names(const ModalityTag& tag) {
  std::vector<std::string> out;
  auto lags = [&](const std::string& prefix) {
    for (int l = 1; l <= kPriceLags; ++l) out.push_back(prefix + "_lag" + std::to_string(l));
  };
  if (tag.contains(Modality::P)) lags("P");
  if (tag.contains(Modality::C)) lags("C");
  if (tag.contains(Modality::S)) {
    static const std::array<const char*, kToneDims> tone{"nsi", "d_nsi", "vol", "ma4", "ema4", "nsi_lag1", "nsi_lag4"};
    if (tag.sentiment != SentimentVariant::pca_only)
      for (const char* n : tone) out.push_back(std::string("S_") + n);
    if (tag.sentiment != SentimentVariant::nsi_only)
      for (int j = 1; j <= kPcaDims; ++j) out.push_back("S_pc" + std::to_string(j));
  }
  if (tag.contains(Modality::B)) {
    const std::array<const char*, 3> ch = tag.b_source == BSource::sar
                                              ? std::array<const char*, 3>{"vv", "vh", "ratio"}
                                              : std::array<const char*, 3>{"ndbi", "ndbi_ma4", "ndbi_ma12"};
    for (int off : kGeoOffsets)
      for (const char* c : ch) out.push_back(std::string("B_") + c + "_" + std::to_string(off));
  }
  if (tag.contains(Modality::I)) lags("I");
  if (tag.contains(Modality::G)) {
    lags("G_P");
    lags("G_C");
  }
  return out;
}

struct ColumnGroup {
  char block;
  int start;
  int width;
};

inline std::vector<ColumnGroup> column_groups(const ModalityTag& tag) {
  std::vector<ColumnGroup> out;
  int start = 0;
  for (std::size_t i = 0; i < tag.has.size(); ++i) {
    if (!tag.has[i]) continue;
    ModalityTag single;
    single.has[i] = true;
    single.sentiment = tag.sentiment;
    single.b_source = tag.b_source;
    const int w = single.width();
    out.push_back({kModalityLetters[i], start, w});
    start += w;
  }
  return out;
}

// Horizon-invariant feature rows of one (region, tag), one optional row per
// grid week.
class FeatureFrame {
 public:
  FeatureFrame(const PanelData& panel, const std::string& region, const ModalityTag& tag)
      : region_(region), tag_(tag), grid_(panel.grid) {
    const RegionPanel& rp = panel.region(region);
    price_ = rp.index.price;
    const int n = panel.grid.size();
    const int width = tag.width();
    const GeoPanel* geo = nullptr;
    if (tag.contains(Modality::B)) {
      const auto& src = tag.b_source == BSource::sar ? rp.sar : rp.ndbi;
      if (!src)
        throw InputError("tag " + tag.str() + " needs " + (tag.b_source == BSource::sar ? "SAR" : "NDBI") +
                         " data for region '" + region + "'");
      geo = &*src;
    }
    if (tag.contains(Modality::S) && !panel.sentiment) throw InputError("tag " + tag.str() + " needs sentiment data");
    if (tag.contains(Modality::I) && !panel.rates) throw InputError("tag " + tag.str() + " needs interest-rate data");
    if (tag.contains(Modality::G) && !panel.global) throw InputError("tag " + tag.str() + " needs the global index");

    rows_.assign(static_cast<std::size_t>(n), std::nullopt);
    for (int t = 0; t < n; ++t) {
      std::vector<double> row;
      row.reserve(static_cast<std::size_t>(width));
      auto append = [&](const std::optional<std::vector<double>>& part) {
        if (!part) return false;
        row.insert(row.end(), part->begin(), part->end());
        return true;
      };
      bool ok = true;
      if (ok && tag.contains(Modality::P)) ok = append(lag_block(rp.index.price, kPriceLags, t));
      if (ok && tag.contains(Modality::C)) ok = append(lag_block(rp.index.counts, kPriceLags, t));
      if (ok && tag.contains(Modality::S)) ok = append(panel.sentiment->block(t, tag.sentiment));
      if (ok && tag.contains(Modality::B)) ok = append(geo->block(t));
      if (ok && tag.contains(Modality::I)) ok = append(lag_block(*panel.rates, kPriceLags, t));
      if (ok && tag.contains(Modality::G)) {
        ok = append(lag_block(panel.global->price, kPriceLags, t)) &&
             append(lag_block(panel.global->counts, kPriceLags, t));
      }
      if (ok) rows_[static_cast<std::size_t>(t)] = std::move(row);
    }
  }

  const std::string& region() const { return region_; }
  const ModalityTag& tag() const { return tag_; }
  const WeekGrid& grid() const { return grid_; }
  const WeeklySeries& price() const { return price_; }
  int size() const { return static_cast<int>(rows_.size()); }
  const std::optional<std::vector<double>>& row(int t) const { return rows_.at(static_cast<std::size_t>(t)); }

  std::optional<double> target(int t, int h) const {
    if (t + h < 0 || t + h >= price_.size()) return std::nullopt;
    return price_[t + h];
  }

 private:
  std::string region_;
  ModalityTag tag_;
  WeekGrid grid_;
  WeeklySeries price_;
  std::vector<std::optional<std::vector<double>>> rows_;
};

struct Dataset {
  std::string region;
  ModalityTag tag;
  int horizon = 0;
  std::vector<int> weeks;  // decision week per row
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> columns;

  int rows() const { return static_cast<int>(weeks.size()); }
};

// Rows for decision weeks in [t_lo, t_hi) whose features and target exist.
// With `require_target` false, rows lacking a target are kept with NaN.
inline Dataset assemble(const FeatureFrame& frame, int horizon, int t_lo, int t_hi, bool require_target = true) {
  if (horizon < 1) throw InputError("horizon must be >= 1");
  Dataset d;
  d.region = frame.region();
  d.tag = frame.tag();
  d.horizon = horizon;
  d.columns = column_names(frame.tag());
  t_lo = std::max(t_lo, 0);
  t_hi = std::min(t_hi, frame.size());
  std::vector<double> ys;
  for (int t = t_lo; t < t_hi; ++t) {
    if (!frame.row(t)) continue;
    const auto y = frame.target(t, horizon);
    if (require_target && !y) continue;
    d.weeks.push_back(t);
    ys.push_back(y ? *y : std::numeric_limits<double>::quiet_NaN());
  }
  if (d.weeks.empty()) {
    std::string why;
    const int first = first_available_week(frame.tag());
    if (t_hi <= t_lo) why = "the week range is empty";
    else if (t_hi <= first) why = "block history: tag " + frame.tag().str() + " needs decision week >= " + std::to_string(first);
    else why = "target availability: t + " + std::to_string(horizon) + " must be <= " + std::to_string(frame.size() - 1);
    throw InputError("assemble: no rows for region '" + d.region + "', tag " + frame.tag().str() + ", h=" +
                     std::to_string(horizon) + " (" + why + ")");
  }
  const auto width = static_cast<Eigen::Index>(d.columns.size());
  d.X.resize(static_cast<Eigen::Index>(d.weeks.size()), width);
  d.y.resize(static_cast<Eigen::Index>(d.weeks.size()));
  for (std::size_t i = 0; i < d.weeks.size(); ++i) {
    const auto& row = *frame.row(d.weeks[i]);
    for (Eigen::Index j = 0; j < width; ++j) d.X(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
    d.y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  return d;
}

inline Dataset assemble(const PanelData& panel, const std::string& region, const ModalityTag& tag, int horizon,
                        int t_lo, int t_hi) {
  return assemble(FeatureFrame(panel, region, tag), horizon, t_lo, t_hi);
}

// Per-column z-scores with statistics from the training rows only
// (population standard deviation). Zero-variance columns are only centered.
class Standardizer {
 public:
  Standardizer() = default;
  explicit Standardizer(const Eigen::MatrixXd& train) { fit(train); }

  void fit(const Eigen::MatrixXd& train) {
    if (train.rows() < 2) throw InputError("standardize: need at least two training rows");
    const auto n = static_cast<double>(train.rows());
    mean_ = train.colwise().sum().transpose() / n;
    scale_.resize(train.cols());
    for (Eigen::Index j = 0; j < train.cols(); ++j) {
      const double ss = (train.col(j).array() - mean_(j)).square().sum();
      const double sd = std::sqrt(ss / n);
      scale_(j) = sd > 1e-12 * std::max(1.0, std::fabs(mean_(j))) ? sd : 1.0;
    }
  }

  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean_.size()) throw std::invalid_argument("standardize: column count mismatch");
    Eigen::MatrixXd out = X;
    for (Eigen::Index j = 0; j < X.cols(); ++j) out.col(j) = (X.col(j).array() - mean_(j)) / scale_(j);
    return out;
  }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

inline void write_dataset_csv(std::ostream& os, const Dataset& d, const WeekGrid& grid) {
  os << "week_end_date,region";
  for (const auto& c : d.columns) os << ',' << c;
  os << ",target_h" << d.horizon << '\n';
  for (int i = 0; i < d.rows(); ++i) {
    os << format_date(grid.end_of(d.weeks[static_cast<std::size_t>(i)])) << ',' << d.region;
    for (Eigen::Index j = 0; j < d.X.cols(); ++j) os << ',' << csv::format_double(d.X(i, j));
    os << ',' << csv::format_double(d.y(i)) << '\n';
  }
}

inline nlohmann::json dataset_schema(const Dataset& d) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : column_groups(d.tag)) {
    groups.push_back({{"block", std::string(1, g.block)},
                      {"first_column", d.columns[static_cast<std::size_t>(g.start)]},
                      {"start", g.start},
                      {"width", g.width}});
  }
  return {{"schema_version", 1},
          {"region", d.region},
          {"tag", d.tag.str()},
          {"horizon", d.horizon},
          {"rows", d.rows()},
          {"columns", d.columns},
          {"column_groups", groups},
          {"target", "target_h" + std::to_string(d.horizon)}};
}

}  // namespace subcast
