#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "subcast/common.hpp"
#include "subcast/panel.hpp"

namespace subcast {

struct SarObservation {
  Date date;
  std::string region;
  double vv_db = 0.0;
  double vh_db = 0.0;
};

struct NdbiObservation {
  Date date;
  std::string region;
  double ndbi = 0.0;
};

inline constexpr std::array<int, 5> kGeoOffsets{0, 4, 8, 12, 20};
inline constexpr int kGeoChannels = 3;
inline constexpr int kGeoDims = static_cast<int>(kGeoOffsets.size()) * kGeoChannels;

enum class BSource { sar, ndbi };

namespace detail {

// Mean of the observations falling in each week, keyed by week ordinal.
// Weeks past the grid end are discarded.
template <class Obs, class Get>
std::vector<DatedValue> weekly_means(std::span<const Obs> obs, const WeekGrid& grid, Get get) {
  std::map<int, std::pair<double, int>> acc;
  for (const auto& o : obs) {
    const int w = grid.week_of(o.date);
    if (w >= grid.size()) continue;
    auto& a = acc[w];
    a.first += get(o);
    a.second += 1;
  }
  std::vector<DatedValue> out;
  for (const auto& [w, a] : acc) {
    out.push_back({grid.end_of(w), a.first / a.second});
  }
  return out;
}

}  // namespace detail

// Smoothed weekly channels of one region, indexed [channel][week].
class GeoPanel {
 public:
  GeoPanel() = default;

  const std::string& region() const { return region_; }
  BSource source() const { return source_; }
  const WeeklySeries& channel(int c) const { return channels_.at(static_cast<std::size_t>(c)); }

  // Concatenated (ch0, ch1, ch2) at offsets 0, 4, 8, 12, 20.
  std::optional<std::vector<double>> block(int t) const {
    if (t - kGeoOffsets.back() < 0 || t >= channels_[0].size()) return std::nullopt;
    std::vector<double> out;
    out.reserve(kGeoDims);
    for (int off : kGeoOffsets)
      for (const auto& ch : channels_) out.push_back(ch[t - off]);
    return out;
  }

  static GeoPanel from_sar(std::span<const SarObservation> obs, const WeekGrid& grid, const std::string& region,
                           int smooth = 4) {
    std::vector<SarObservation> mine;
    for (const auto& o : obs) {
      if (o.region != region) continue;
      if (!std::isfinite(o.vv_db) || !std::isfinite(o.vh_db)) throw InputError("sar: non-finite backscatter value");
      mine.push_back(o);
    }
    if (mine.empty()) throw InputError("sar: no observations for region '" + region + "'");
    GeoPanel g;
    g.region_ = region;
    g.source_ = BSource::sar;
    const auto vv = detail::weekly_means<SarObservation>(mine, grid, [](const auto& o) { return o.vv_db; });
    const auto vh = detail::weekly_means<SarObservation>(mine, grid, [](const auto& o) { return o.vh_db; });
    auto vv_s = align_to_grid(vv, grid, region).series;
    auto vh_s = align_to_grid(vh, grid, region).series;
    // dB difference, i.e. the log of the linear VV/VH ratio
    WeeklySeries ratio = vv_s;
    for (int t = 0; t < ratio.size(); ++t) ratio.values[static_cast<std::size_t>(t)] = vv_s[t] - vh_s[t];
    g.channels_ = {trailing_mean(vv_s, smooth), trailing_mean(vh_s, smooth), trailing_mean(ratio, smooth)};
    return g;
  }

  // NDBI as (raw weekly, 4-week mean, 12-week mean) so the block keeps 15 columns.
  static GeoPanel from_ndbi(std::span<const NdbiObservation> obs, const WeekGrid& grid, const std::string& region) {
    std::vector<NdbiObservation> mine;
    for (const auto& o : obs) {
      if (o.region != region) continue;
      if (!(o.ndbi >= -1.0 && o.ndbi <= 1.0)) throw InputError("ndbi: value outside [-1, 1]");
      mine.push_back(o);
    }
    if (mine.empty()) throw InputError("ndbi: no observations for region '" + region + "'");
    GeoPanel g;
    g.region_ = region;
    g.source_ = BSource::ndbi;
    auto raw = align_to_grid(detail::weekly_means<NdbiObservation>(mine, grid, [](const auto& o) { return o.ndbi; }),
                             grid, region)
                   .series;
    g.channels_ = {raw, trailing_mean(raw, 4), trailing_mean(raw, 12)};
    return g;
  }

 private:
  std::string region_;
  BSource source_ = BSource::sar;
  std::array<WeeklySeries, kGeoChannels> channels_;
};

inline std::vector<SarObservation> read_sar_csv(std::istream& in, const std::string& source) {
  csv::Reader r(in, source);
  const auto c_date = r.require("date");
  const auto c_region = r.require("region");
  const auto c_vv = r.require("vv_db");
  const auto c_vh = r.require("vh_db");
  std::vector<SarObservation> out;
  while (r.next()) {
    SarObservation o;
    try {
      o.date = parse_date(r.text(c_date));
    } catch (const InputError& e) {
      r.fail(e.what());
    }
    o.region = r.text(c_region);
    if (o.region.empty()) r.fail("empty region");
    o.vv_db = r.number(c_vv);
    o.vh_db = r.number(c_vh);
    out.push_back(std::move(o));
  }
  return out;
}

inline std::vector<NdbiObservation> read_ndbi_csv(std::istream& in, const std::string& source) {
  csv::Reader r(in, source);
  const auto c_date = r.require("date");
  const auto c_region = r.require("region");
  const auto c_ndbi = r.require("ndbi");
  std::vector<NdbiObservation> out;
  while (r.next()) {
    NdbiObservation o;
    try {
      o.date = parse_date(r.text(c_date));
    } catch (const InputError& e) {
      r.fail(e.what());
    }
    o.region = r.text(c_region);
    if (o.region.empty()) r.fail("empty region");
    o.ndbi = r.number(c_ndbi);
    if (o.ndbi < -1.0 || o.ndbi > 1.0) r.fail("ndbi must lie in [-1, 1]");
    out.push_back(std::move(o));
  }
  return out;
}

inline void write_sar_csv(std::ostream& os, std::span<const SarObservation> obs) {
  os << "date,region,vv_db,vh_db\n";
  for (const auto& o : obs)
    os << format_date(o.date) << ',' << o.region << ',' << csv::format_double(o.vv_db) << ','
       << csv::format_double(o.vh_db) << '\n';
}

inline void write_ndbi_csv(std::ostream& os, std::span<const NdbiObservation> obs) {
  os << "date,region,ndbi\n";
  for (const auto& o : obs)
    os << format_date(o.date) << ',' << o.region << ',' << csv::format_double(o.ndbi) << '\n';
}

}  // namespace subcast
