#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "subcast/common.hpp"
#include "subcast/csv.hpp"

namespace subcast {

struct CvParams {
  int train_weeks = 260;
  int val_weeks = 26;
  int step = 26;
  // validation windows must end by this week index; -1 means the grid end
  int cv_end = -1;

  void validate() const {
    if (train_weeks < 1 || val_weeks < 1 || step < 1) throw InputError("cv: spans and step must be positive");
  }
};

struct FoldSpec {
  int id = 0;
  int train_begin = 0, train_end = 0;  // [a, b)
  int val_begin = 0, val_end = 0;      // [b, c)
  int horizon = 0;

  bool operator==(const FoldSpec&) const = default;
};

// Fold k trains on [k*step, k*step + train) and validates on the next val
// weeks. It is admissible while the validation window ends by cv_end and the
// last validation target t + h still lies on the grid.
inline std::vector<FoldSpec> generate_folds(int grid_weeks, int horizon, const CvParams& cv = {}) {
  cv.validate();
  if (horizon < 1) throw InputError("cv: horizon must be >= 1");
  const int end = cv.cv_end < 0 ? grid_weeks : cv.cv_end;
  if (end > grid_weeks) throw InputError("cv: cv_end lies beyond the grid");
  if (grid_weeks < cv.train_weeks + cv.val_weeks)
    throw InputError("cv: grid of " + std::to_string(grid_weeks) + " weeks is shorter than one train + validation span");
  std::vector<FoldSpec> folds;
  for (int k = 0;; ++k) {
    FoldSpec f;
    f.id = k;
    f.horizon = horizon;
    f.train_begin = k * cv.step;
    f.train_end = f.train_begin + cv.train_weeks;
    f.val_begin = f.train_end;
    f.val_end = f.val_begin + cv.val_weeks;
    if (f.val_end > end || f.val_end - 1 + horizon > grid_weeks - 1) break;
    folds.push_back(f);
  }
  if (folds.empty())
    throw InputError("cv: no admissible fold for h = " + std::to_string(horizon) + " on a " +
                     std::to_string(grid_weeks) + "-week grid");
  return folds;
}

inline double mae(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size())
    throw InputError("mae: " + std::to_string(pred.size()) + " predictions vs " + std::to_string(actual.size()) +
                     " actuals");
  if (pred.empty()) throw InputError("mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::fabs(pred[i] - actual[i]);
  return s / static_cast<double>(pred.size());
}

struct EvalRecord {
  std::string region;
  int fold = 0;
  int horizon = 0;
  std::string model;
  std::string tag;
  double mae = 0.0;

  auto key() const { return std::tie(region, fold, horizon, model, tag); }
};

inline bool operator<(const EvalRecord& a, const EvalRecord& b) { return a.key() < b.key(); }

inline void write_records_csv(std::ostream& os, std::span<const EvalRecord> recs) {
  os << "region,fold,horizon,model,tag,mae\n";
  for (const auto& r : recs)
    os << r.region << ',' << r.fold << ',' << r.horizon << ',' << r.model << ',' << r.tag << ','
       << csv::format_double(r.mae) << '\n';
}

inline std::vector<EvalRecord> read_records_csv(std::istream& in, const std::string& source) {
  csv::Reader r(in, source);
  const auto c_region = r.require("region"), c_fold = r.require("fold"), c_h = r.require("horizon");
  const auto c_model = r.require("model"), c_tag = r.require("tag"), c_mae = r.require("mae");
  std::vector<EvalRecord> out;
  while (r.next()) {
    EvalRecord e{r.text(c_region), static_cast<int>(r.integer(c_fold)), static_cast<int>(r.integer(c_h)),
                 r.text(c_model),  r.text(c_tag),  r.number(c_mae)};
    if (!(std::isfinite(e.mae) && e.mae >= 0.0)) r.fail("mae must be finite and >= 0");
    out.push_back(std::move(e));
  }
  return out;
}

// Unweighted mean over every (region, fold) cell of one (h, model, tag).
// `regions` and `folds` give the expected coverage.
inline double macro_mae(std::span<const EvalRecord> recs, int h, const std::string& model, const std::string& tag,
                        const std::vector<std::string>& regions, int folds) {
  std::map<std::pair<std::string, int>, double> cell;
  for (const auto& r : recs)
    if (r.horizon == h && r.model == model && r.tag == tag) {
      if (!cell.emplace(std::make_pair(r.region, r.fold), r.mae).second)
        throw InputError("macro_mae: duplicate record for region " + r.region + " fold " + std::to_string(r.fold));
    }
  std::string missing;
  double s = 0.0;
  for (const auto& reg : regions)
    for (int k = 0; k < folds; ++k) {
      const auto it = cell.find({reg, k});
      if (it == cell.end()) {
        missing += (missing.empty() ? "" : ", ") + reg + "/fold" + std::to_string(k);
        continue;
      }
      s += it->second;
    }
  if (!missing.empty())
    throw InputError("macro_mae: missing cells for h=" + std::to_string(h) + " " + model + " " + tag + ": " + missing);
  if (regions.empty() || folds < 1) throw InputError("macro_mae: empty coverage");
  return s / static_cast<double>(regions.size() * static_cast<std::size_t>(folds));
}

// Coverage inferred from the records of the cell itself.
inline double macro_mae(std::span<const EvalRecord> recs, int h, const std::string& model, const std::string& tag) {
  std::set<std::string> regions;
  int folds = 0;
  for (const auto& r : recs)
    if (r.horizon == h && r.model == model && r.tag == tag) {
      regions.insert(r.region);
      folds = std::max(folds, r.fold + 1);
    }
  if (regions.empty()) throw InputError("macro_mae: no records for h=" + std::to_string(h) + " " + model + " " + tag);
  return macro_mae(recs, h, model, tag, {regions.begin(), regions.end()}, folds);
}

struct HorizonGroup {
  const char* name;
  std::array<int, 3> horizons;
};

inline constexpr std::array<HorizonGroup, 3> kHorizonGroups{
    {{"short", {2, 6, 10}}, {"medium", {14, 18, 22}}, {"long", {26, 30, 34}}}};

// Per region: fold-averaged MAE for every horizon of (model, tag).
inline std::map<std::string, std::map<int, double>> fold_averaged(std::span<const EvalRecord> recs,
                                                                  const std::string& model, const std::string& tag) {
  std::map<std::string, std::map<int, std::pair<double, int>>> acc;
  for (const auto& r : recs)
    if (r.model == model && r.tag == tag) {
      auto& a = acc[r.region][r.horizon];
      a.first += r.mae;
      a.second += 1;
    }
  std::map<std::string, std::map<int, double>> out;
  for (const auto& [reg, byh] : acc)
    for (const auto& [h, a] : byh) out[reg][h] = a.first / a.second;
  return out;
}

// Per region: mean of the fold-averaged MAE over the given horizons.
inline std::map<std::string, double> region_horizon_mean(std::span<const EvalRecord> recs, const std::string& model,
                                                         const std::string& tag, std::span<const int> horizons) {
  std::map<std::string, double> out;
  for (const auto& [reg, byh] : fold_averaged(recs, model, tag)) {
    double s = 0.0;
    for (int h : horizons) {
      const auto it = byh.find(h);
      if (it == byh.end())
        throw InputError("missing horizon " + std::to_string(h) + " for " + model + " " + tag + " in region " + reg);
      s += it->second;
    }
    out[reg] = s / static_cast<double>(horizons.size());
  }
  return out;
}

struct GroupSummaryRow {
  std::string model, tag, group;
  double mean = 0.0;
  double std = 0.0;  // sample std across regions
  int regions = 0;
  bool best = false;  // lowest mean for this (model, group)
  bool baseline = false;
};

// Fold average, then horizon average within group per region, then mean and
// sample std across regions.
inline std::vector<GroupSummaryRow> horizon_group_summary(std::span<const EvalRecord> recs) {
  std::set<std::pair<std::string, std::string>> cells;
  for (const auto& r : recs) cells.insert({r.model, r.tag});
  std::vector<GroupSummaryRow> rows;
  for (const auto& [model, tag] : cells) {
    for (const auto& g : kHorizonGroups) {
      const auto per_region = region_horizon_mean(recs, model, tag, g.horizons);
      std::vector<double> v;
      for (const auto& [reg, m] : per_region) v.push_back(m);
      GroupSummaryRow row{model, tag, g.name, mean_of(v), sample_std(v), static_cast<int>(v.size())};
      rows.push_back(std::move(row));
    }
  }
  std::map<std::pair<std::string, std::string>, double> best;
  for (const auto& r : rows) {
    auto [it, fresh] = best.emplace(std::make_pair(r.model, r.group), r.mean);
    if (!fresh) it->second = std::min(it->second, r.mean);
  }
  for (auto& r : rows) r.best = r.mean == best[{r.model, r.group}];
  return rows;
}

inline void write_group_summary_csv(std::ostream& os, std::span<const GroupSummaryRow> rows) {
  os << "model,tag,group,mean_mae,std_mae,regions,best,baseline\n";
  for (const auto& r : rows)
    os << r.model << ',' << r.tag << ',' << r.group << ',' << csv::format_double(r.mean) << ','
       << csv::format_double(r.std) << ',' << r.regions << ',' << (r.best ? 1 : 0) << ',' << (r.baseline ? 1 : 0)
       << '\n';
}

}  // namespace subcast
