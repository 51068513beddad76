#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "subcast/analysis.hpp"
#include "subcast/config.hpp"
#include "subcast/report.hpp"
#include "subcast/runner.hpp"
#include "subcast/schemas.hpp"
#include "subcast/synth.hpp"

namespace fs = std::filesystem;
using namespace subcast;

namespace {

struct CommonOptions {
  std::string config = "paper_default";
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig load(const CommonOptions& o) {
  auto cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

fs::path out_dir(const CommonOptions& o, const ExperimentConfig& cfg) { return o.out.empty() ? fs::path(cfg.output_dir) : fs::path(o.out); }

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  runner_detail::write_atomic(path, content);
  std::cout << "wrote " << path.string() << '\n';
}

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

std::string file_safe(std::string s) {
  std::replace(s.begin(), s.end(), '/', '_');
  return s;
}

PanelData build(const ExperimentConfig& cfg, std::string* digest = nullptr) {
  auto data = load_data(cfg);
  if (digest) *digest = data.digest;
  return build_panel(data.inputs, panel_config_for(cfg));
}

// ---- synth ----------------------------------------------------------------

int cmd_synth(const std::string& preset, std::optional<std::uint64_t> seed, std::optional<int> regions,
              std::optional<int> weeks, const std::string& out) {
  auto sc = synth::ScenarioConfig::preset(preset);
  if (seed) sc.seed = *seed;
  if (regions) sc.regions = *regions;
  if (weeks) sc.weeks = *weeks;
  sc.validate();
  const auto s = synth::generate(sc);
  const fs::path dir(out);
  write_file(dir / "transactions.csv", render([&](std::ostream& os) { write_transactions_csv(os, s.transactions); }));
  write_file(dir / "articles.csv", render([&](std::ostream& os) { write_articles_csv(os, s.articles, sc.embedding_dim); }));
  write_file(dir / "sar.csv", render([&](std::ostream& os) { write_sar_csv(os, s.sar); }));
  write_file(dir / "ndbi.csv", render([&](std::ostream& os) { write_ndbi_csv(os, s.ndbi); }));
  write_file(dir / "rates.csv", render([&](std::ostream& os) { write_rates_csv(os, s.rates); }));
  write_file(dir / "latent.csv", render([&](std::ostream& os) {
               write_weekly_csv_header(os);
               for (const auto& l : s.latent) write_weekly_csv_rows(os, l);
             }));
  write_file(dir / "exogenous.csv", render([&](std::ostream& os) {
               write_weekly_csv_header(os);
               for (const auto& x : s.exogenous) write_weekly_csv_rows(os, x);
             }));

  ExperimentConfig cfg = paper_default();
  cfg.name = "synth_" + preset;
  cfg.data = DataSource{};
  cfg.data.transactions = "transactions.csv";
  cfg.data.articles = "articles.csv";
  cfg.data.sar = "sar.csv";
  cfg.data.ndbi = "ndbi.csv";
  cfg.data.rates = "rates.csv";
  cfg.data.manifest = {sc.embedding_dim, "synthetic-gaussian"};
  cfg.grid_start = s.grid.first_end();
  cfg.grid_weeks = s.grid.size();
  cfg.cv.cv_end = -1;
  cfg.output_dir = "out";
  cfg.seed = sc.seed;
  write_file(dir / "config.json", config_to_json(cfg).dump(2) + "\n");
  write_file(dir / "scenario.json", scenario_to_json(sc).dump(2) + "\n");
  write_file(dir / "schemas.json", all_input_schemas(cfg.data.manifest).dump(2) + "\n");
  return 0;
}

// ---- build-index ----------------------------------------------------------

int cmd_build_index(const CommonOptions& o) {
  const auto cfg = load(o);
  const auto panel = build(cfg);
  const fs::path dir = out_dir(o, cfg);
  nlohmann::json cut = nlohmann::json::object();
  write_file(dir / "index.csv", render([&](std::ostream& os) {
               write_weekly_csv_header(os);
               for (const auto& r : panel.regions) write_weekly_csv_rows(os, panel.region(r).index.price);
               if (panel.global) write_weekly_csv_rows(os, panel.global->price);
             }));
  write_file(dir / "counts.csv", render([&](std::ostream& os) {
               write_weekly_csv_header(os);
               for (const auto& r : panel.regions) write_weekly_csv_rows(os, panel.region(r).index.counts);
               if (panel.global) write_weekly_csv_rows(os, panel.global->counts);
             }));
  for (const auto& r : panel.regions) {
    const auto& c = panel.region(r).index.cutoffs;
    cut[r] = {{"low", c.low}, {"high", c.high}};
  }
  if (panel.global)
    cut[kGlobalRegion] = {{"low", panel.global->cutoffs.low}, {"high", panel.global->cutoffs.high}};
  nlohmann::json side{{"freeze_weeks", panel_config_for(cfg).freeze_weeks},
                      {"grid_start", format_date(panel.grid.first_end())},
                      {"grid_weeks", panel.grid.size()},
                      {"cutoffs", cut}};
  write_file(dir / "cutoffs.json", side.dump(2) + "\n");
  return 0;
}

// ---- build-features -------------------------------------------------------

int cmd_build_features(const CommonOptions& o, std::vector<std::string> regions, std::vector<std::string> tags,
                       std::vector<int> horizons) {
  const auto cfg = load(o);
  const auto panel = build(cfg);
  if (regions.empty()) regions = panel.regions;
  if (tags.empty()) tags = cfg.tags;
  if (horizons.empty()) horizons = cfg.horizons;
  const fs::path dir = out_dir(o, cfg) / "features";
  for (const auto& t : tags) {
    const auto tag = parse_tag(t);
    for (const auto& r : regions) {
      const FeatureFrame frame(panel, r, tag);
      for (int h : horizons) {
        const auto d = assemble(frame, h, 0, panel.grid.size());
        const std::string stem = r + "_" + file_safe(tag.str()) + "_h" + std::to_string(h);
        write_file(dir / (stem + ".csv"), render([&](std::ostream& os) { write_dataset_csv(os, d, panel.grid); }));
        write_file(dir / (stem + ".schema.json"), dataset_schema(d).dump(2) + "\n");
      }
    }
  }
  return 0;
}

// ---- run-cv / ablate ------------------------------------------------------

int run_and_write(const ExperimentConfig& cfg, const fs::path& dir, bool use_cache) {
  std::string digest;
  const auto panel = build(cfg, &digest);
  RunOptions opt;
  opt.workers = workers_from_env();
  if (use_cache) opt.cache_dir = (dir / "cache").string();
  const auto res = run_cv(cfg, panel, digest, opt);
  const auto files = write_run_outputs(dir, cfg, panel, res);
  std::cout << "jobs " << res.jobs << " (cached " << res.cached << "), records " << res.records.size() << '\n'
            << "wrote " << files.records.string() << '\n'
            << "wrote " << files.summary_json.string() << '\n';
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  if (!res.failures.empty()) {
    std::cerr << res.failures.size() << " job(s) failed:\n";
    for (const auto& f : res.failures) std::cerr << "  " << f << '\n';
    return 1;
  }
  return 0;
}

int cmd_run_cv(const CommonOptions& o, bool no_cache) {
  const auto cfg = load(o);
  return run_and_write(cfg, out_dir(o, cfg), !no_cache);
}

int cmd_ablate(const CommonOptions& o, const std::vector<std::string>& tags, bool no_cache) {
  auto cfg = load(o);
  cfg.tags = tags;
  cfg.tests.transitions.clear();
  cfg.tests.one_sided.clear();
  cfg.tests.bonferroni_m = 0;
  cfg.validate();
  const fs::path dir = o.out.empty() ? fs::path(cfg.output_dir) / "ablate" : fs::path(o.out);
  return run_and_write(cfg, dir, !no_cache);
}

// ---- stats / report -------------------------------------------------------

std::vector<EvalRecord> read_records(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open records file '" + p.string() + "'");
  return read_records_csv(in, p.string());
}

std::vector<PredictionRecord> read_predictions(const fs::path& p, bool required) {
  std::ifstream in(p);
  if (!in) {
    if (required) throw InputError("cannot open predictions file '" + p.string() + "'");
    return {};
  }
  return read_predictions_csv(in, p.string());
}

int cmd_stats(const CommonOptions& o, std::string records, std::string predictions) {
  const auto cfg = load(o);
  const fs::path dir = out_dir(o, cfg);
  const fs::path rp = records.empty() ? dir / "records.csv" : fs::path(records);
  const fs::path pp = predictions.empty() ? dir / "predictions.csv" : fs::path(predictions);
  const auto recs = read_records(rp);
  const auto preds = read_predictions(pp, !predictions.empty());
  auto report = run_stats(cfg, recs, preds);
  report["records"] = rp.string();
  write_file(dir / "stats.json", report.dump(2) + "\n");
  return 0;
}

int cmd_report(const CommonOptions& o, std::string records, std::string predictions, const std::string& model,
               const std::vector<std::string>& paths) {
  const auto cfg = load(o);
  const fs::path dir = out_dir(o, cfg);
  const fs::path rp = records.empty() ? dir / "records.csv" : fs::path(records);
  const auto recs = read_records(rp);
  const fs::path rdir = dir / "report";

  std::set<std::string> models;
  for (const auto& r : recs) models.insert(r.model);
  if (!model.empty() && !models.count(model)) throw InputError("report: no records for model '" + model + "'");
  for (const auto& m : models) {
    if (!model.empty() && m != model) continue;
    const auto pts = horizon_curves(recs, m);
    write_file(rdir / ("curves_" + m + ".csv"), render([&](std::ostream& os) { write_curves_csv(os, m, pts); }));
  }
  const auto boxes = long_horizon_boxes(recs, cfg.tests.long_horizons);
  write_file(rdir / "long_horizon_boxes.csv", render([&](std::ostream& os) { write_boxes_csv(os, boxes); }));

  if (!paths.empty()) {
    const fs::path pp = predictions.empty() ? dir / "predictions.csv" : fs::path(predictions);
    const auto preds = read_predictions(pp, true);
    const WeekGrid grid = cfg.grid();
    for (const auto& spec : paths) {
      // region:model:tag:h
      std::vector<std::string> part;
      std::stringstream ss(spec);
      for (std::string s; std::getline(ss, s, ':');) part.push_back(s);
      if (part.size() != 4) throw InputError("report: --path expects region:model:tag:h, got '" + spec + "'");
      int h = 0;
      try {
        h = std::stoi(part[3]);
      } catch (const std::exception&) {
        throw InputError("report: bad horizon in '" + spec + "'");
      }
      const auto tag = parse_tag(part[2]).str();
      const auto path = stitched_path(preds, part[0], part[1], tag, h);
      write_file(rdir / ("path_" + part[0] + "_" + part[1] + "_" + file_safe(tag) + "_h" + part[3] + ".csv"),
                 render([&](std::ostream& os) { write_path_csv(os, path, grid); }));
    }
  }
  return 0;
}

// ---- schema / validate ----------------------------------------------------

int cmd_schema(const std::string& kind, int dim) {
  const ArticleManifest m{dim, ""};
  std::cout << (kind.empty() ? all_input_schemas(m) : input_schema(parse_input_kind(kind), m)).dump(2) << '\n';
  return 0;
}

int cmd_validate(const std::string& kind, const std::vector<std::string>& files, int dim) {
  const auto k = parse_input_kind(kind);
  for (const auto& f : files) {
    const auto rep = validate_input_file(k, f, {dim, ""});
    std::cout << f << ": ok, " << rep.rows << " rows";
    if (!rep.regions.empty()) std::cout << ", " << rep.regions.size() << " regions";
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subcast: multimodal sub-city price index forecasting toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "subcast 1.0");

  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "config file, or paper_default")->capture_default_str();
    sub->add_option("--seed", common.seed, "override the config seed");
    sub->add_option("-o,--out", common.out, "output directory (default: output_dir from the config)");
  };

  std::string preset = "leading20", synth_out = "synth";
  std::optional<std::uint64_t> synth_seed;
  std::optional<int> synth_regions, synth_weeks;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic corpus and a matching config");
  s_synth->add_option("--preset", preset, "smooth, outliers, leading20 or null")->capture_default_str();
  s_synth->add_option("--seed", synth_seed, "scenario seed");
  s_synth->add_option("--regions", synth_regions, "number of regions");
  s_synth->add_option("--weeks", synth_weeks, "grid length in weeks");
  s_synth->add_option("-o,--out", synth_out, "output directory")->capture_default_str();

  auto* s_index = app.add_subcommand("build-index", "build regional and global price indices");
  add_common(s_index);

  std::vector<std::string> f_regions, f_tags;
  std::vector<int> f_horizons;
  auto* s_feat = app.add_subcommand("build-features", "export assembled feature datasets with schema sidecars");
  add_common(s_feat);
  s_feat->add_option("--region", f_regions, "regions (default: all)");
  s_feat->add_option("--tag", f_tags, "modality tags (default: config tags)");
  s_feat->add_option("--horizon", f_horizons, "horizons (default: config horizons)");

  bool no_cache = false;
  auto* s_cv = app.add_subcommand("run-cv", "run the rolling cross-validation grid");
  add_common(s_cv);
  s_cv->add_flag("--no-cache", no_cache, "recompute every job");

  std::vector<std::string> a_tags;
  auto* s_ablate = app.add_subcommand("ablate", "run the grid over an arbitrary tag set");
  add_common(s_ablate);
  s_ablate->add_option("--tags", a_tags, "tags, e.g. SB CSB PCG")->required()->delimiter(',');
  s_ablate->add_flag("--no-cache", no_cache, "recompute every job");

  std::string records, predictions, r_model;
  std::vector<std::string> r_paths;
  auto* s_stats = app.add_subcommand("stats", "significance tests and diagnostics from run-cv records");
  add_common(s_stats);
  s_stats->add_option("--records", records, "records CSV (default: <out>/records.csv)");
  s_stats->add_option("--predictions", predictions, "predictions CSV for neighbour diagnostics");

  auto* s_report = app.add_subcommand("report", "plot-ready CSV series");
  add_common(s_report);
  s_report->add_option("--records", records, "records CSV (default: <out>/records.csv)");
  s_report->add_option("--predictions", predictions, "predictions CSV (default: <out>/predictions.csv)");
  s_report->add_option("--model", r_model, "restrict curves to one model");
  s_report->add_option("--path", r_paths, "stitched forecast path region:model:tag:h (repeatable)");

  std::string kind;
  int dim = 16;
  std::vector<std::string> files;
  auto* s_schema = app.add_subcommand("schema", "print the input CSV schemas as JSON");
  s_schema->add_option("--kind", kind, "transactions, articles, sar, ndbi or rates (default: all)");
  s_schema->add_option("--embedding-dim", dim, "article embedding width")->capture_default_str();

  auto* s_validate = app.add_subcommand("validate", "check input CSV files against their schema");
  s_validate->add_option("--kind", kind, "transactions, articles, sar, ndbi or rates")->required();
  s_validate->add_option("--embedding-dim", dim, "article embedding width")->capture_default_str();
  s_validate->add_option("files", files, "files to check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*s_synth) return cmd_synth(preset, synth_seed, synth_regions, synth_weeks, synth_out);
    if (*s_index) return cmd_build_index(common);
    if (*s_feat) return cmd_build_features(common, f_regions, f_tags, f_horizons);
    if (*s_cv) return cmd_run_cv(common, no_cache);
    if (*s_ablate) return cmd_ablate(common, a_tags, no_cache);
    if (*s_stats) return cmd_stats(common, records, predictions);
    if (*s_report) return cmd_report(common, records, predictions, r_model, r_paths);
    if (*s_schema) return cmd_schema(kind, dim);
    if (*s_validate) return cmd_validate(kind, files, dim);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
