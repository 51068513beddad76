#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "subcast/config.hpp"
#include "subcast/evaluation.hpp"
#include "subcast/runner.hpp"
#include "subcast/stats.hpp"

namespace subcast {

inline constexpr int kMinTestRegions = 5;

// Long-horizon summary per region: fold average, then mean over `horizons`.
inline std::map<std::string, double> long_horizon_summary(std::span<const EvalRecord> recs, const std::string& model,
                                                          const std::string& tag, std::span<const int> horizons) {
  auto out = region_horizon_mean(recs, model, tag, horizons);
  if (out.empty()) throw InputError("stats: no records for " + model + " " + tag);
  return out;
}

namespace analysis_detail {

inline std::vector<double> aligned(const std::map<std::string, double>& m, const std::vector<std::string>& regions,
                                   const std::string& what) {
  std::vector<double> v;
  for (const auto& r : regions) {
    const auto it = m.find(r);
    if (it == m.end()) throw InputError("stats: region " + r + " has no records for " + what);
    v.push_back(it->second);
  }
  return v;
}

inline nlohmann::json with_pair(stats::TestResult t, const std::string& model, const std::string& base,
                                const std::string& variant) {
  auto j = t.to_json();
  j["model"] = model;
  j["base"] = base;
  j["variant"] = variant;
  return j;
}

}  // namespace analysis_detail

// The significance plan: Friedman across tags per model, adjacent tag
// transitions (two-sided, Bonferroni), one-sided representation comparisons,
// a cross-model comparison of each model's best tag, and KNN neighbour
// stability diagnostics when predictions are supplied.
// Paired differences are variant - base, so "less" means the variant improves.
inline nlohmann::json run_stats(const ExperimentConfig& cfg, std::span<const EvalRecord> recs,
                                std::span<const PredictionRecord> preds = {}) {
  using namespace analysis_detail;
  const auto& H = cfg.tests.long_horizons;
  if (H.empty()) throw InputError("stats: tests.long_horizons is empty");

  std::set<std::string> region_set;
  std::map<std::string, std::set<std::string>> tags_of;
  for (const auto& r : recs) {
    region_set.insert(r.region);
    tags_of[r.model].insert(r.tag);
  }
  if (static_cast<int>(region_set.size()) < kMinTestRegions)
    throw InputError("stats: " + std::to_string(region_set.size()) + " regions in the records; at least " +
                     std::to_string(kMinTestRegions) + " are needed for region-paired tests");
  const std::vector<std::string> regions(region_set.begin(), region_set.end());

  std::vector<std::string> tag_order;
  for (const auto& t : cfg.tags) tag_order.push_back(parse_tag(t).str());
  std::vector<PairedComparison> transitions = cfg.tests.transitions;
  if (transitions.empty())
    for (std::size_t i = 0; i + 1 < tag_order.size(); ++i) transitions.push_back({tag_order[i], tag_order[i + 1]});
  for (auto& c : transitions) c = {parse_tag(c.base).str(), parse_tag(c.variant).str()};
  const int m_transitions = cfg.tests.bonferroni_m > 0 ? cfg.tests.bonferroni_m : static_cast<int>(transitions.size());

  std::map<std::pair<std::string, std::string>, std::vector<double>> cache;
  auto summary = [&](const std::string& model, const std::string& tag) -> const std::vector<double>& {
    auto it = cache.find({model, tag});
    if (it != cache.end()) return it->second;
    return cache[{model, tag}] = aligned(long_horizon_summary(recs, model, tag, H), regions, model + " " + tag);
  };
  auto has = [&](const std::string& model, const std::string& tag) {
    const auto it = tags_of.find(model);
    return it != tags_of.end() && it->second.count(tag) > 0;
  };

  nlohmann::json out;
  out["regions"] = regions;
  out["long_horizons"] = H;
  out["level"] = cfg.tests.level;
  out["difference"] = "variant - base (per-region long-horizon MAE)";

  nlohmann::json fried = nlohmann::json::array();
  nlohmann::json trans = nlohmann::json::array();
  nlohmann::json onesided = nlohmann::json::array();
  std::map<std::string, std::string> best_tag;
  std::map<std::string, double> best_mean;

  for (const auto& [model, present] : tags_of) {
    std::vector<std::string> tags;
    for (const auto& t : tag_order)
      if (present.count(t) && std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
    for (const auto& t : present)
      if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);

    for (const auto& t : tags) {
      const auto& v = summary(model, t);
      const double m = mean_of(v);
      if (!best_mean.count(model) || m < best_mean[model]) {
        best_mean[model] = m;
        best_tag[model] = t;
      }
    }

    std::vector<std::string> chain;
    for (const auto& t : tag_order)
      if (present.count(t) && std::find(chain.begin(), chain.end(), t) == chain.end()) chain.push_back(t);
    if (chain.size() >= 2) {
      std::vector<std::vector<double>> blocks(regions.size());
      for (const auto& t : chain) {
        const auto& v = summary(model, t);
        for (std::size_t i = 0; i < regions.size(); ++i) blocks[i].push_back(v[i]);
      }
      auto f = stats::friedman(blocks).to_json();
      f["model"] = model;
      f["tags"] = chain;
      fried.push_back(f);
    }

    std::vector<stats::TestResult> tests;
    std::vector<PairedComparison> done;
    for (const auto& c : transitions) {
      if (!has(model, c.base) || !has(model, c.variant)) continue;
      tests.push_back(stats::wilcoxon_paired(summary(model, c.variant), summary(model, c.base)));
      done.push_back(c);
    }
    if (!tests.empty()) {
      stats::apply_bonferroni(tests, std::max(m_transitions, static_cast<int>(tests.size())));
      for (std::size_t i = 0; i < tests.size(); ++i) trans.push_back(with_pair(tests[i], model, done[i].base, done[i].variant));
    }

    for (const auto& c : cfg.tests.one_sided) {
      const auto base = parse_tag(c.base).str(), variant = parse_tag(c.variant).str();
      if (!has(model, base) || !has(model, variant)) continue;
      onesided.push_back(with_pair(
          stats::wilcoxon_paired(summary(model, variant), summary(model, base), stats::Alternative::less), model,
          base, variant));
    }
  }
  out["friedman"] = fried;
  out["transitions"] = trans;
  out["transitions_bonferroni_m"] = m_transitions;
  out["one_sided"] = onesided;

  nlohmann::json best = nlohmann::json::object();
  for (const auto& [model, tag] : best_tag) best[model] = {{"tag", tag}, {"long_mae", best_mean[model]}};
  out["best_tag"] = best;

  std::vector<std::string> models;
  for (const auto& [model, tag] : best_tag) models.push_back(model);
  std::vector<stats::TestResult> cross;
  std::vector<std::pair<std::string, std::string>> cross_pairs;
  for (std::size_t a = 0; a < models.size(); ++a)
    for (std::size_t b = a + 1; b < models.size(); ++b) {
      cross.push_back(stats::wilcoxon_paired(summary(models[b], best_tag[models[b]]),
                                             summary(models[a], best_tag[models[a]])));
      cross_pairs.push_back({models[a], models[b]});
    }
  if (!cross.empty()) stats::apply_bonferroni(cross, static_cast<int>(cross.size()));
  out["cross_model"] = nlohmann::json::array();
  for (std::size_t i = 0; i < cross.size(); ++i) {
    auto j = cross[i].to_json();
    j["base"] = cross_pairs[i].first + ":" + best_tag[cross_pairs[i].first];
    j["variant"] = cross_pairs[i].second + ":" + best_tag[cross_pairs[i].second];
    out["cross_model"].push_back(j);
  }

  // KNN neighbourhood stability between the first and last tag at the
  // longest horizon; a reference diagnostic, never a decision.
  out["neighbor_overlap"] = nullptr;
  const std::string knn_name = [&] {
    for (const auto& m : cfg.models)
      if (m.family == models::Family::knn) return m.name();
    return std::string();
  }();
  if (!preds.empty() && !knn_name.empty() && tag_order.size() >= 2) {
    const std::string base = tag_order.front(), full = tag_order.back();
    const int h = *std::max_element(H.begin(), H.end());
    std::map<std::tuple<std::string, int, int>, std::vector<int>> nb_base, nb_full;
    for (const auto& p : preds) {
      if (p.model != knn_name || p.horizon != h || p.neighbors.empty()) continue;
      if (p.tag == base) nb_base[{p.region, p.fold, p.week}] = p.neighbors;
      if (p.tag == full) nb_full[{p.region, p.fold, p.week}] = p.neighbors;
    }
    if (!nb_base.empty() && nb_base.size() == nb_full.size()) {
      std::map<std::string, std::pair<std::vector<std::vector<int>>, std::vector<std::vector<int>>>> by_region;
      for (const auto& [k, v] : nb_base) {
        const auto it = nb_full.find(k);
        if (it == nb_full.end()) throw InputError("stats: neighbour sets for " + full + " do not match " + base);
        by_region[std::get<0>(k)].first.push_back(v);
        by_region[std::get<0>(k)].second.push_back(it->second);
      }
      const auto mae_base = fold_averaged(recs, knn_name, base), mae_full = fold_averaged(recs, knn_name, full);
      std::vector<double> overlap, reduction, base_err;
      nlohmann::json per_region = nlohmann::json::object();
      for (const auto& [reg, sets] : by_region) {
        const double o = stats::neighbor_overlap(sets.first, sets.second);
        const double eb = mae_base.at(reg).at(h), ef = mae_full.at(reg).at(h);
        overlap.push_back(o);
        reduction.push_back(100.0 * (eb - ef) / eb);
        base_err.push_back(eb);
        per_region[reg] = {{"overlap", o}, {"reduction_pct", reduction.back()}, {"base_mae", eb}};
      }
      nlohmann::json diag{{"model", knn_name}, {"base", base}, {"variant", full}, {"horizon", h},
                          {"per_region", per_region},
                          {"overlap_min", *std::min_element(overlap.begin(), overlap.end())},
                          {"overlap_max", *std::max_element(overlap.begin(), overlap.end())}};
      auto corr = [](const std::vector<double>& x, const std::vector<double>& y) -> nlohmann::json {
        if (x.size() < 3) return nullptr;
        const auto c = stats::correlations(x, y);
        if (!c.defined) return {{"defined", false}};
        return {{"defined", true}, {"pearson", c.pearson}, {"spearman", c.spearman}};
      };
      diag["overlap_vs_reduction"] = corr(overlap, reduction);
      diag["base_mae_vs_reduction"] = corr(base_err, reduction);
      out["neighbor_overlap"] = diag;
    }
  }
  return out;
}

}  // namespace subcast
