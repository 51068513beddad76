#pragma once

#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "subcast/evaluation.hpp"
#include "subcast/runner.hpp"

namespace subcast {

struct CurvePoint {
  std::string tag;
  int horizon = 0;
  double macro_mae = 0.0;
};

// Per-horizon macro MAE for every tag of one model.
inline std::vector<CurvePoint> horizon_curves(std::span<const EvalRecord> recs, const std::string& model) {
  std::vector<CurvePoint> out;
  for (const auto& row : horizon_summary(recs))
    if (row.model == model) out.push_back({row.tag, row.horizon, row.macro_mae});
  if (out.empty()) throw InputError("report: no records for model '" + model + "'");
  return out;
}

inline void write_curves_csv(std::ostream& os, const std::string& model, std::span<const CurvePoint> pts) {
  os << "model,tag,horizon,macro_mae\n";
  for (const auto& p : pts) os << model << ',' << p.tag << ',' << p.horizon << ',' << csv::format_double(p.macro_mae) << '\n';
}

struct BoxStats {
  std::string model, tag;
  int n = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Quantiles of the per-region long-horizon MAE for each (model, tag).
inline std::vector<BoxStats> long_horizon_boxes(std::span<const EvalRecord> recs, std::span<const int> horizons) {
  std::set<std::pair<std::string, std::string>> cells;
  for (const auto& r : recs) cells.insert({r.model, r.tag});
  std::vector<BoxStats> out;
  for (const auto& [model, tag] : cells) {
    std::vector<double> v;
    for (const auto& [reg, m] : region_horizon_mean(recs, model, tag, horizons)) v.push_back(m);
    out.push_back({model, tag, static_cast<int>(v.size()), percentile_linear(v, 0), percentile_linear(v, 25),
                   percentile_linear(v, 50), percentile_linear(v, 75), percentile_linear(v, 100)});
  }
  return out;
}

inline void write_boxes_csv(std::ostream& os, std::span<const BoxStats> rows) {
  os << "model,tag,regions,min,q1,median,q3,max\n";
  for (const auto& b : rows)
    os << b.model << ',' << b.tag << ',' << b.n << ',' << csv::format_double(b.min) << ',' << csv::format_double(b.q1)
       << ',' << csv::format_double(b.median) << ',' << csv::format_double(b.q3) << ',' << csv::format_double(b.max)
       << '\n';
}

// Out-of-sample path made of consecutive validation windows for one cell.
inline std::vector<PredictionRecord> stitched_path(std::span<const PredictionRecord> preds, const std::string& region,
                                                   const std::string& model, const std::string& tag, int horizon) {
  std::vector<PredictionRecord> out;
  for (const auto& p : preds)
    if (p.region == region && p.model == model && p.tag == tag && p.horizon == horizon) out.push_back(p);
  if (out.empty())
    throw InputError("report: no predictions for region " + region + ", model " + model + ", tag " + tag +
                     ", h=" + std::to_string(horizon));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.week < b.week; });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].week == out[i - 1].week)
      throw InputError("report: overlapping validation windows at week " + std::to_string(out[i].week));
  return out;
}

inline void write_path_csv(std::ostream& os, std::span<const PredictionRecord> path, const WeekGrid& grid) {
  os << "region,model,tag,horizon,fold,week,week_end_date,target_date,forecast,actual\n";
  for (const auto& p : path)
    os << p.region << ',' << p.model << ',' << p.tag << ',' << p.horizon << ',' << p.fold << ',' << p.week << ','
       << format_date(grid.end_of(p.week)) << ',' << format_date(grid.end_of(p.week + p.horizon)) << ','
       << csv::format_double(p.forecast) << ',' << csv::format_double(p.actual) << '\n';
}

}  // namespace subcast
