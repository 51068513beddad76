#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "subcast/config.hpp"
#include "subcast/evaluation.hpp"
#include "subcast/features.hpp"
#include "subcast/models/model.hpp"

namespace subcast {

// ---- data loading -------------------------------------------------------

struct LoadedData {
  PanelInputs inputs;
  std::string digest;  // content digest of every input
};

namespace runner_detail {

inline std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace runner_detail

inline LoadedData load_data(const ExperimentConfig& cfg) {
  LoadedData d;
  Fnv1a h;
  if (cfg.data.synth) {
    const auto sc = synth::generate(*cfg.data.synth);
    d.inputs = synth::to_inputs(sc);
    h.add("synth").add(scenario_to_json(*cfg.data.synth).dump());
    d.digest = h.hex();
    return d;
  }
  auto read = [&](const std::string& path, auto&& parse) {
    const std::string bytes = runner_detail::file_bytes(path);
    h.add(bytes);
    std::istringstream in(bytes);
    return parse(in, path);
  };
  d.inputs.transactions = read(cfg.data.transactions, read_transactions_csv);
  h.add("|articles");
  if (!cfg.data.articles.empty())
    d.inputs.articles =
        read(cfg.data.articles, [&](std::istream& in, const std::string& p) { return read_articles_csv(in, p, cfg.data.manifest); });
  h.add("|sar");
  if (!cfg.data.sar.empty()) d.inputs.sar = read(cfg.data.sar, read_sar_csv);
  h.add("|ndbi");
  if (!cfg.data.ndbi.empty()) d.inputs.ndbi = read(cfg.data.ndbi, read_ndbi_csv);
  h.add("|rates");
  if (!cfg.data.rates.empty()) d.inputs.rates = read(cfg.data.rates, read_rates_csv);
  d.digest = h.hex();
  return d;
}

inline PanelConfig panel_config_for(const ExperimentConfig& cfg) {
  PanelConfig pc;
  pc.grid = cfg.grid();
  pc.regions = cfg.regions;
  if (pc.regions.empty() && cfg.data.synth)
    for (int r = 0; r < cfg.data.synth->regions; ++r) pc.regions.push_back(synth::region_name(r));
  pc.freeze_weeks = std::min(cfg.freeze_weeks, pc.grid.size());
  return pc;
}

// ---- prediction records ---------------------------------------------------

struct PredictionRecord {
  std::string region;
  int fold = 0;
  int horizon = 0;
  std::string model;
  std::string tag;
  int week = 0;  // decision week
  double forecast = 0.0;
  double actual = 0.0;
  std::vector<int> neighbors;

  auto key() const { return std::tie(region, model, tag, horizon, fold, week); }
};

inline void write_predictions_csv(std::ostream& os, std::span<const PredictionRecord> preds, const WeekGrid& grid) {
  os << "region,fold,horizon,model,tag,week,week_end_date,target_date,forecast,actual,neighbors\n";
  for (const auto& p : preds) {
    os << p.region << ',' << p.fold << ',' << p.horizon << ',' << p.model << ',' << p.tag << ',' << p.week << ','
       << format_date(grid.end_of(p.week)) << ',' << format_date(grid.end_of(p.week + p.horizon)) << ','
       << csv::format_double(p.forecast) << ',' << csv::format_double(p.actual) << ',';
    for (std::size_t i = 0; i < p.neighbors.size(); ++i) os << (i ? ";" : "") << p.neighbors[i];
    os << '\n';
  }
}

inline std::vector<PredictionRecord> read_predictions_csv(std::istream& in, const std::string& source) {
  csv::Reader r(in, source);
  const auto c_region = r.require("region"), c_fold = r.require("fold"), c_h = r.require("horizon");
  const auto c_model = r.require("model"), c_tag = r.require("tag"), c_week = r.require("week");
  const auto c_f = r.require("forecast"), c_a = r.require("actual"), c_n = r.require("neighbors");
  std::vector<PredictionRecord> out;
  while (r.next()) {
    PredictionRecord p{r.text(c_region), static_cast<int>(r.integer(c_fold)), static_cast<int>(r.integer(c_h)),
                       r.text(c_model), r.text(c_tag), static_cast<int>(r.integer(c_week)), r.number(c_f),
                       r.number(c_a), {}};
    const std::string& nb = r.text(c_n);
    std::size_t start = 0;
    while (start < nb.size()) {
      std::size_t end = nb.find(';', start);
      if (end == std::string::npos) end = nb.size();
      int v = 0;
      const auto [ptr, ec] = std::from_chars(nb.data() + start, nb.data() + end, v);
      if (ec != std::errc() || ptr != nb.data() + end) r.fail("neighbors must be ';'-separated week numbers");
      p.neighbors.push_back(v);
      start = end + 1;
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---- job grid ---------------------------------------------------------------

inline int workers_from_env() {
  if (const char* v = std::getenv("SUBCAST_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 1) throw InputError("SUBCAST_WORKERS must be a positive integer");
    return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct RunOptions {
  int workers = 1;
  std::string cache_dir;  // empty: no job cache
};

struct RunResult {
  std::vector<EvalRecord> records;
  std::vector<PredictionRecord> predictions;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
  int jobs = 0;
  int cached = 0;
};

// Label used for the univariate baselines in every output.
inline const char* kBaselineTag = "P";

namespace runner_detail {

struct Job {
  enum class Kind { tabular, naive, arima } kind = Kind::tabular;
  std::size_t model = 0;
  std::string region;
  std::string tag;
  int fold = 0;
  std::vector<int> horizons;  // one entry except for arima

  std::string describe(const ExperimentConfig& cfg) const {
    std::string h;
    for (int v : horizons) h += (h.empty() ? "" : "/") + std::to_string(v);
    return cfg.models[model].name() + " " + tag + " " + region + " h=" + h + " fold=" + std::to_string(fold);
  }
};

struct JobOutput {
  std::vector<EvalRecord> records;
  std::vector<PredictionRecord> predictions;
  std::vector<std::string> warnings;
  std::string error;
  bool cached = false;
};

inline std::uint64_t job_seed(const ExperimentConfig& cfg, const Job& j) {
  Fnv1a h;
  h.add(cfg.seed).add(cfg.models[j.model].name()).add(j.tag).add(j.region).add(static_cast<std::uint64_t>(j.fold));
  for (int v : j.horizons) h.add(static_cast<std::uint64_t>(v));
  return h.value();
}

inline std::string job_digest(const ExperimentConfig& cfg, const std::string& data_digest, const Job& j) {
  Fnv1a h;
  const auto g = cfg.grid();
  h.add("job-v1").add(data_digest).add(format_date(g.first_end())).add(static_cast<std::uint64_t>(g.size()));
  h.add(static_cast<std::uint64_t>(cfg.cv.train_weeks)).add(static_cast<std::uint64_t>(cfg.cv.val_weeks));
  h.add(static_cast<std::uint64_t>(cfg.cv.step)).add(static_cast<std::uint64_t>(cfg.cv.cv_end + 1));
  h.add(static_cast<std::uint64_t>(cfg.freeze_weeks));
  std::string regions;
  for (const auto& r : panel_config_for(cfg).regions) regions += r + ";";
  h.add(regions);
  h.add(models::model_to_json(cfg.models[j.model]).dump()).add(job_seed(cfg, j));
  h.add(j.region).add(j.tag).add(static_cast<std::uint64_t>(j.fold));
  for (int v : j.horizons) h.add(static_cast<std::uint64_t>(v));
  return h.hex();
}

inline nlohmann::json output_to_json(const JobOutput& o) {
  nlohmann::json j;
  j["records"] = nlohmann::json::array();
  for (const auto& r : o.records)
    j["records"].push_back({r.region, r.fold, r.horizon, r.model, r.tag, r.mae});
  j["predictions"] = nlohmann::json::array();
  for (const auto& p : o.predictions)
    j["predictions"].push_back({p.region, p.fold, p.horizon, p.model, p.tag, p.week, p.forecast, p.actual, p.neighbors});
  j["warnings"] = o.warnings;
  return j;
}

inline JobOutput output_from_json(const nlohmann::json& j) {
  JobOutput o;
  for (const auto& r : j.at("records"))
    o.records.push_back({r[0].get<std::string>(), r[1].get<int>(), r[2].get<int>(), r[3].get<std::string>(),
                         r[4].get<std::string>(), r[5].get<double>()});
  for (const auto& p : j.at("predictions"))
    o.predictions.push_back({p[0].get<std::string>(), p[1].get<int>(), p[2].get<int>(), p[3].get<std::string>(),
                             p[4].get<std::string>(), p[5].get<int>(), p[6].get<double>(), p[7].get<double>(),
                             p[8].get<std::vector<int>>()});
  o.warnings = j.at("warnings").get<std::vector<std::string>>();
  o.cached = true;
  return o;
}

struct Context {
  const ExperimentConfig& cfg;
  const PanelData& panel;
  std::map<std::pair<std::string, std::string>, std::shared_ptr<const FeatureFrame>> frames;
  std::map<std::pair<std::string, std::string>, std::string> frame_errors;
  std::map<int, std::vector<FoldSpec>> folds;  // per horizon
};

inline const FoldSpec& fold_of(const Context& ctx, int h, int k) { return ctx.folds.at(h).at(static_cast<std::size_t>(k)); }

inline JobOutput run_tabular(const Context& ctx, const Job& job) {
  JobOutput out;
  const auto& spec = ctx.cfg.models[job.model];
  const auto key = std::make_pair(job.region, job.tag);
  if (auto e = ctx.frame_errors.find(key); e != ctx.frame_errors.end()) throw InputError(e->second);
  const FeatureFrame& frame = *ctx.frames.at(key);
  const int h = job.horizons.front();
  const FoldSpec& f = fold_of(ctx, h, job.fold);

  auto train = assemble(frame, h, f.train_begin, f.train_end);
  // drop training rows whose target falls in the validation window
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < train.rows(); ++i)
    if (train.weeks[static_cast<std::size_t>(i)] + h < f.train_end) keep.push_back(i);
  if (keep.size() < 2) throw InputError("fewer than two purged training rows");
  Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(keep.size()), train.X.cols());
  Eigen::VectorXd ytr(static_cast<Eigen::Index>(keep.size()));
  std::vector<int> wtr;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    Xtr.row(static_cast<Eigen::Index>(i)) = train.X.row(keep[i]);
    ytr(static_cast<Eigen::Index>(i)) = train.y(keep[i]);
    wtr.push_back(train.weeks[static_cast<std::size_t>(keep[i])]);
  }
  const auto val = assemble(frame, h, f.val_begin, f.val_end);
  const Standardizer scaler(Xtr);
  const auto fc =
      models::fit_predict_tabular(spec, scaler.transform(Xtr), ytr, wtr, scaler.transform(val.X), job_seed(ctx.cfg, job));
  if (!fc.warning.empty()) out.warnings.push_back(job.describe(ctx.cfg) + ": " + fc.warning);
  std::vector<double> actual(val.y.data(), val.y.data() + val.y.size());
  out.records.push_back({job.region, job.fold, h, spec.name(), job.tag, mae(fc.values, actual)});
  for (int i = 0; i < val.rows(); ++i) {
    PredictionRecord p{job.region, job.fold, h, spec.name(), job.tag, val.weeks[static_cast<std::size_t>(i)],
                       fc.values[static_cast<std::size_t>(i)], actual[static_cast<std::size_t>(i)], {}};
    if (!fc.neighbors.empty()) p.neighbors = fc.neighbors[static_cast<std::size_t>(i)];
    out.predictions.push_back(std::move(p));
  }
  return out;
}

inline JobOutput run_naive(const Context& ctx, const Job& job) {
  JobOutput out;
  const auto& price = ctx.panel.region(job.region).index.price.values;
  const int h = job.horizons.front();
  const FoldSpec& f = fold_of(ctx, h, job.fold);
  std::vector<double> fc, actual;
  const auto name = ctx.cfg.models[job.model].name();
  for (int t = f.val_begin; t < f.val_end; ++t) {
    fc.push_back(models::naive12_at(price, t));
    actual.push_back(price[static_cast<std::size_t>(t + h)]);
    out.predictions.push_back({job.region, job.fold, h, name, job.tag, t, fc.back(), actual.back(), {}});
  }
  out.records.push_back({job.region, job.fold, h, name, job.tag, mae(fc, actual)});
  return out;
}

// Order selected on the training span; then refit at every validation week on
// prices [train_begin, t) and forecast h + 1 steps to P_{t+h}.
inline JobOutput run_arima(const Context& ctx, const Job& job) {
  JobOutput out;
  const auto& spec = ctx.cfg.models[job.model];
  const auto& price = ctx.panel.region(job.region).index.price.values;
  const FoldSpec& f = fold_of(ctx, job.horizons.front(), job.fold);
  const std::span<const double> all(price);
  const auto sel = models::arima_select(all.subspan(static_cast<std::size_t>(f.train_begin),
                                                    static_cast<std::size_t>(f.train_end - f.train_begin)),
                                        spec.arima);
  if (sel.fallback) out.warnings.push_back(job.describe(ctx.cfg) + ": " + sel.warning);
  const int max_h = *std::max_element(job.horizons.begin(), job.horizons.end());
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_h;
  for (int t = f.val_begin; t < f.val_end; ++t) {
    const auto hist = all.subspan(static_cast<std::size_t>(f.train_begin), static_cast<std::size_t>(t - f.train_begin));
    const auto m = models::arima_refit(hist, sel.model, spec.arima);
    const auto fc = models::arima_forecast(m, max_h + 1);
    for (int h : job.horizons) {
      const double yhat = fc[static_cast<std::size_t>(h)];
      const double y = price[static_cast<std::size_t>(t + h)];
      by_h[h].first.push_back(yhat);
      by_h[h].second.push_back(y);
      out.predictions.push_back({job.region, job.fold, h, spec.name(), job.tag, t, yhat, y, {}});
    }
  }
  for (const auto& [h, v] : by_h) out.records.push_back({job.region, job.fold, h, spec.name(), job.tag, mae(v.first, v.second)});
  return out;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + tmp + "'");
    os << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace runner_detail

// Runs the (model x tag x region x horizon x fold) grid. Results do not depend
// on the worker count or on which jobs came from the cache.
inline RunResult run_cv(const ExperimentConfig& cfg, const PanelData& panel, const std::string& data_digest,
                        const RunOptions& opt = {}) {
  using namespace runner_detail;
  cfg.validate();
  Context ctx{cfg, panel, {}, {}, {}};
  for (int h : cfg.horizons) ctx.folds[h] = generate_folds(panel.grid.size(), h, cfg.cv);

  std::vector<std::string> tabular_tags;
  bool any_tabular = false;
  for (const auto& m : cfg.models) any_tabular = any_tabular || !models::is_baseline(m.family);
  if (any_tabular)
    for (const auto& t : cfg.tags) tabular_tags.push_back(parse_tag(t).str());
  for (const auto& r : panel.regions)
    for (const auto& t : tabular_tags) {
      const auto key = std::make_pair(r, t);
      if (ctx.frames.count(key) || ctx.frame_errors.count(key)) continue;
      try {
        ctx.frames[key] = std::make_shared<const FeatureFrame>(panel, r, parse_tag(t));
      } catch (const InputError& e) {
        ctx.frame_errors[key] = e.what();
      }
    }

  std::vector<Job> jobs;
  for (std::size_t m = 0; m < cfg.models.size(); ++m) {
    const auto fam = cfg.models[m].family;
    for (const auto& r : panel.regions) {
      if (fam == models::Family::arima) {
        std::map<int, std::vector<int>> per_fold;
        for (int h : cfg.horizons)
          for (const auto& f : ctx.folds[h]) per_fold[f.id].push_back(h);
        for (auto& [k, hs] : per_fold) jobs.push_back({Job::Kind::arima, m, r, kBaselineTag, k, hs});
        continue;
      }
      const auto& tags = fam == models::Family::naive12 ? std::vector<std::string>{kBaselineTag} : tabular_tags;
      for (const auto& t : tags)
        for (int h : cfg.horizons)
          for (const auto& f : ctx.folds[h])
            jobs.push_back({fam == models::Family::naive12 ? Job::Kind::naive : Job::Kind::tabular, m, r, t, f.id, {h}});
    }
  }

  if (!opt.cache_dir.empty()) std::filesystem::create_directories(opt.cache_dir);
  std::vector<JobOutput> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      std::filesystem::path cache;
      if (!opt.cache_dir.empty()) {
        cache = std::filesystem::path(opt.cache_dir) / (job_digest(cfg, data_digest, job) + ".json");
        std::ifstream in(cache);
        if (in) {
          try {
            results[i] = output_from_json(nlohmann::json::parse(in));
            continue;
          } catch (const std::exception&) {
            // unreadable cache entry: recompute
          }
        }
      }
      JobOutput out;
      try {
        switch (job.kind) {
          case Job::Kind::tabular: out = run_tabular(ctx, job); break;
          case Job::Kind::naive: out = run_naive(ctx, job); break;
          case Job::Kind::arima: out = run_arima(ctx, job); break;
        }
        if (!cache.empty()) write_atomic(cache, output_to_json(out).dump());
      } catch (const std::exception& e) {
        out = JobOutput{};
        out.error = job.describe(cfg) + ": " + e.what();
      }
      results[i] = std::move(out);
    }
  };
  const int n_workers = std::max(1, std::min<int>(opt.workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  RunResult res;
  res.jobs = static_cast<int>(jobs.size());
  for (auto& r : results) {
    res.cached += r.cached ? 1 : 0;
    if (!r.error.empty()) res.failures.push_back(r.error);
    res.records.insert(res.records.end(), r.records.begin(), r.records.end());
    res.predictions.insert(res.predictions.end(), std::make_move_iterator(r.predictions.begin()),
                           std::make_move_iterator(r.predictions.end()));
    res.warnings.insert(res.warnings.end(), r.warnings.begin(), r.warnings.end());
  }
  std::sort(res.records.begin(), res.records.end());
  std::sort(res.predictions.begin(), res.predictions.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
  return res;
}

// ---- summaries --------------------------------------------------------------

struct HorizonSummaryRow {
  std::string model, tag;
  int horizon = 0;
  double macro_mae = 0.0;
  int regions = 0, folds = 0;
};

inline std::vector<HorizonSummaryRow> horizon_summary(std::span<const EvalRecord> recs) {
  std::map<std::tuple<std::string, std::string, int>, std::pair<std::set<std::string>, int>> cells;
  for (const auto& r : recs) {
    auto& c = cells[{r.model, r.tag, r.horizon}];
    c.first.insert(r.region);
    c.second = std::max(c.second, r.fold + 1);
  }
  std::vector<HorizonSummaryRow> out;
  for (const auto& [k, c] : cells) {
    const auto& [model, tag, h] = k;
    out.push_back({model, tag, h, macro_mae(recs, h, model, tag, {c.first.begin(), c.first.end()}, c.second),
                   static_cast<int>(c.first.size()), c.second});
  }
  return out;
}

inline void write_horizon_summary_csv(std::ostream& os, std::span<const HorizonSummaryRow> rows) {
  os << "model,tag,horizon,macro_mae,regions,folds\n";
  for (const auto& r : rows)
    os << r.model << ',' << r.tag << ',' << r.horizon << ',' << csv::format_double(r.macro_mae) << ',' << r.regions
       << ',' << r.folds << '\n';
}

// Table-2 style summary when every (model, tag) covers all nine horizons.
inline std::optional<std::vector<GroupSummaryRow>> group_summary_for(const ExperimentConfig& cfg,
                                                                     std::span<const EvalRecord> recs) {
  std::map<std::pair<std::string, std::string>, std::set<int>> seen;
  for (const auto& r : recs) seen[{r.model, r.tag}].insert(r.horizon);
  if (seen.empty()) return std::nullopt;
  for (const auto& [k, hs] : seen)
    for (int h : kHorizons)
      if (!hs.count(h)) return std::nullopt;
  auto rows = horizon_group_summary(recs);
  for (auto& r : rows)
    for (const auto& m : cfg.models)
      if (m.name() == r.model) r.baseline = models::is_baseline(m.family);
  return rows;
}

struct RunFiles {
  std::filesystem::path records, predictions, horizon_summary, group_summary, summary_json;
};

inline RunFiles write_run_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const PanelData& panel,
                                  const RunResult& res) {
  using runner_detail::write_atomic;
  std::filesystem::create_directories(dir);
  RunFiles f{dir / "records.csv", dir / "predictions.csv", dir / "summary_horizon.csv", dir / "summary_groups.csv",
             dir / "summary.json"};
  std::ostringstream rec, pred, hs, gs;
  write_records_csv(rec, res.records);
  write_atomic(f.records, rec.str());
  write_predictions_csv(pred, res.predictions, panel.grid);
  write_atomic(f.predictions, pred.str());
  const auto hrows = horizon_summary(res.records);
  write_horizon_summary_csv(hs, hrows);
  write_atomic(f.horizon_summary, hs.str());

  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["jobs"] = res.jobs;
  j["cached_jobs"] = res.cached;
  j["records"] = res.records.size();
  j["failures"] = res.failures;
  j["warnings"] = res.warnings;
  j["horizons"] = nlohmann::json::array();
  for (const auto& r : hrows)
    j["horizons"].push_back({{"model", r.model}, {"tag", r.tag}, {"horizon", r.horizon}, {"macro_mae", r.macro_mae}});
  if (const auto groups = group_summary_for(cfg, res.records)) {
    write_group_summary_csv(gs, *groups);
    write_atomic(f.group_summary, gs.str());
    j["groups"] = nlohmann::json::array();
    for (const auto& g : *groups)
      j["groups"].push_back({{"model", g.model}, {"tag", g.tag}, {"group", g.group}, {"mean", g.mean},
                             {"std", g.std}, {"regions", g.regions}, {"best", g.best}, {"baseline", g.baseline}});
  } else {
    std::filesystem::remove(f.group_summary);
    j["groups"] = nullptr;
  }
  write_atomic(f.summary_json, j.dump(2) + "\n");
  return f;
}

}  // namespace subcast
