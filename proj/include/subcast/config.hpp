#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "subcast/evaluation.hpp"
#include "subcast/features.hpp"
#include "subcast/models/model.hpp"
#include "subcast/synth.hpp"

namespace subcast {

inline constexpr int kConfigVersion = 1;

struct DataSource {
  std::optional<synth::ScenarioConfig> synth;  // generate in memory instead of reading files
  std::string transactions, articles, sar, ndbi, rates;
  ArticleManifest manifest{16, ""};
};

struct PairedComparison {
  std::string base, variant;
};

struct TestPlan {
  std::vector<PairedComparison> transitions;  // empty: adjacent pairs of the tag list
  int bonferroni_m = 0;                       // 0: number of transitions
  std::vector<int> long_horizons{26, 30, 34};
  std::vector<PairedComparison> one_sided;    // variant improves on base
  double level = 0.05;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::string name = "custom";
  DataSource data;
  Date grid_start = make_date(2015, 1, 4);
  int grid_weeks = 550;
  std::vector<std::string> regions;  // empty: all regions in the data
  std::vector<std::string> tags;
  std::vector<int> horizons;
  std::vector<models::ModelSpec> models;
  CvParams cv;
  int freeze_weeks = 260;
  TestPlan tests;
  std::string output_dir = "out";
  std::uint64_t seed = 20240607;

  WeekGrid grid() const {
    if (data.synth) return WeekGrid(data.synth->first_week_end, data.synth->weeks);
    return WeekGrid(grid_start, grid_weeks);
  }

  void validate() const {
    if (version != kConfigVersion)
      throw InputError("config: unsupported version " + std::to_string(version) + " (expected " +
                       std::to_string(kConfigVersion) + ")");
    if (tags.empty()) throw InputError("config: tags list is empty");
    for (const auto& t : tags) parse_tag(t);
    if (horizons.empty()) throw InputError("config: horizons list is empty");
    for (int h : horizons)
      if (h < 2 || h > 34 || h % 4 != 2) throw InputError("config: horizon " + std::to_string(h) + " is not on the 2..34 grid");
    if (models.empty()) throw InputError("config: models list is empty");
    std::set<std::string> names;
    for (const auto& m : models) {
      m.validate();
      if (!names.insert(m.name()).second) throw InputError("config: duplicate model name '" + m.name() + "'");
    }
    cv.validate();
    if (freeze_weeks < 1) throw InputError("config: freeze_weeks must be positive");
    if (!data.synth && data.transactions.empty()) throw InputError("config: data.transactions is required");
    if (data.synth) data.synth->validate();
    else if (grid_weeks < 1) throw InputError("config: grid.weeks must be positive");
    if (tests.bonferroni_m < 0) throw InputError("config: tests.bonferroni_m must be >= 0");
    for (const auto& c : tests.transitions) parse_tag(c.base), parse_tag(c.variant);
    for (const auto& c : tests.one_sided) parse_tag(c.base), parse_tag(c.variant);
  }
};

inline std::vector<models::ModelSpec> default_models() {
  std::vector<models::ModelSpec> out;
  for (auto f : {models::Family::naive12, models::Family::arima, models::Family::ridge, models::Family::knn,
                 models::Family::rf, models::Family::gbt}) {
    models::ModelSpec m;
    m.family = f;
    out.push_back(m);
  }
  return out;
}

// The main experiment: the tag chain, all nine horizons, all six models.
inline ExperimentConfig paper_default() {
  ExperimentConfig c;
  c.name = "paper_default";
  c.data.transactions = "data/transactions.csv";
  c.data.articles = "data/articles.csv";
  c.data.sar = "data/sar.csv";
  c.data.ndbi = "data/ndbi.csv";
  c.data.rates = "data/rates.csv";
  c.grid_start = make_date(2015, 1, 4);
  c.grid_weeks = 550;
  c.cv.cv_end = 520;
  c.tags = default_tag_chain();
  c.horizons.assign(kHorizons.begin(), kHorizons.end());
  c.models = default_models();
  c.tests.bonferroni_m = 5;
  c.tests.one_sided = {{"PS/pca", "PS/nsi"}, {"PS/nsi", "PS/pca"}, {"PB/ndbi", "PB"}};
  return c;
}

namespace config_detail {

inline void only(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& ctx) {
  if (!j.is_object()) throw InputError("config: '" + ctx + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) throw InputError("config: unknown field '" + ctx + "." + k + "'");
  }
}

template <class T>
void get(const nlohmann::json& j, const char* key, T& out, const std::string& ctx) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("config: field '" + ctx + "." + key + "' has the wrong type");
  }
}

inline std::vector<PairedComparison> pairs(const nlohmann::json& j, const std::string& ctx) {
  std::vector<PairedComparison> out;
  if (!j.is_array()) throw InputError("config: '" + ctx + "' must be a list of [base, variant] pairs");
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
      throw InputError("config: '" + ctx + "' entries must be [base, variant] string pairs");
    out.push_back({p[0].get<std::string>(), p[1].get<std::string>()});
  }
  return out;
}

inline std::string resolve(const std::string& path, const std::filesystem::path& base) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  return p.is_absolute() || base.empty() ? path : (base / p).lexically_normal().string();
}

}  // namespace config_detail

inline synth::ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  using config_detail::get;
  config_detail::only(j,
                      {"preset", "regions", "weeks", "warmup_weeks", "first_week_end", "base_price", "trend", "ar",
                       "vol", "tx_per_week", "noise_sd", "outlier_rate", "outlier_scale", "lead", "coupling",
                       "x_period", "x_damping", "sar_noise", "articles_per_week", "embedding_dim", "rate_vol", "seed"},
                      "data.synth");
  std::string preset = "smooth";
  get(j, "preset", preset, "data.synth");
  auto c = synth::ScenarioConfig::preset(preset);
  const std::string ctx = "data.synth";
  get(j, "regions", c.regions, ctx);
  get(j, "weeks", c.weeks, ctx);
  get(j, "warmup_weeks", c.warmup_weeks, ctx);
  if (j.contains("first_week_end")) c.first_week_end = parse_date(j.at("first_week_end").get<std::string>());
  get(j, "base_price", c.base_price, ctx);
  get(j, "trend", c.trend, ctx);
  get(j, "ar", c.ar, ctx);
  get(j, "vol", c.vol, ctx);
  get(j, "tx_per_week", c.tx_per_week, ctx);
  get(j, "noise_sd", c.noise_sd, ctx);
  get(j, "outlier_rate", c.outlier_rate, ctx);
  get(j, "outlier_scale", c.outlier_scale, ctx);
  get(j, "lead", c.lead, ctx);
  get(j, "coupling", c.coupling, ctx);
  get(j, "x_period", c.x_period, ctx);
  get(j, "x_damping", c.x_damping, ctx);
  get(j, "sar_noise", c.sar_noise, ctx);
  get(j, "articles_per_week", c.articles_per_week, ctx);
  get(j, "embedding_dim", c.embedding_dim, ctx);
  get(j, "rate_vol", c.rate_vol, ctx);
  get(j, "seed", c.seed, ctx);
  c.validate();
  return c;
}

inline nlohmann::json scenario_to_json(const synth::ScenarioConfig& c) {
  return {{"preset", c.name},
          {"regions", c.regions},
          {"weeks", c.weeks},
          {"warmup_weeks", c.warmup_weeks},
          {"first_week_end", format_date(c.first_week_end)},
          {"base_price", c.base_price},
          {"trend", c.trend},
          {"ar", c.ar},
          {"vol", c.vol},
          {"tx_per_week", c.tx_per_week},
          {"noise_sd", c.noise_sd},
          {"outlier_rate", c.outlier_rate},
          {"outlier_scale", c.outlier_scale},
          {"lead", c.lead},
          {"coupling", c.coupling},
          {"x_period", c.x_period},
          {"x_damping", c.x_damping},
          {"sar_noise", c.sar_noise},
          {"articles_per_week", c.articles_per_week},
          {"embedding_dim", c.embedding_dim},
          {"rate_vol", c.rate_vol},
          {"seed", c.seed}};
}

// Relative data paths are resolved against `base_dir` (the config's folder).
inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using config_detail::get;
  config_detail::only(j,
                      {"version", "name", "extends", "data", "grid", "regions", "tags", "horizons", "models", "cv",
                       "freeze_weeks", "tests", "output_dir", "seed"},
                      "config");
  if (!j.contains("version")) throw InputError("config: missing 'version'");
  ExperimentConfig c;
  if (j.contains("extends")) {
    if (j.at("extends") != "paper_default") throw InputError("config: only 'paper_default' can be extended");
    c = paper_default();
    c.name = "custom";
  }
  get(j, "version", c.version, "config");
  if (c.version != kConfigVersion)
    throw InputError("config: unsupported version " + std::to_string(c.version));
  get(j, "name", c.name, "config");
  if (j.contains("data")) {
    const auto& d = j.at("data");
    config_detail::only(d, {"synth", "transactions", "articles", "sar", "ndbi", "rates", "embedding_dim", "embedding_model"},
                        "data");
    if (d.contains("synth")) {
      c.data = DataSource{};
      c.data.synth = scenario_from_json(d.at("synth"));
    }
    for (auto [key, dst] : {std::pair{"transactions", &c.data.transactions}, std::pair{"articles", &c.data.articles},
                            std::pair{"sar", &c.data.sar}, std::pair{"ndbi", &c.data.ndbi},
                            std::pair{"rates", &c.data.rates}}) {
      if (!d.contains(key)) continue;
      get(d, key, *dst, "data");
      *dst = config_detail::resolve(*dst, base_dir);
    }
    get(d, "embedding_dim", c.data.manifest.embedding_dim, "data");
    get(d, "embedding_model", c.data.manifest.embedding_model, "data");
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    config_detail::only(g, {"start", "weeks"}, "grid");
    if (g.contains("start")) c.grid_start = parse_date(g.at("start").get<std::string>());
    get(g, "weeks", c.grid_weeks, "grid");
  }
  get(j, "regions", c.regions, "config");
  get(j, "tags", c.tags, "config");
  get(j, "horizons", c.horizons, "config");
  if (j.contains("models")) {
    c.models.clear();
    if (!j.at("models").is_array()) throw InputError("config: 'models' must be a list");
    for (const auto& m : j.at("models")) c.models.push_back(models::model_from_json(m));
  }
  if (j.contains("cv")) {
    const auto& v = j.at("cv");
    config_detail::only(v, {"train_weeks", "val_weeks", "step", "cv_end"}, "cv");
    get(v, "train_weeks", c.cv.train_weeks, "cv");
    get(v, "val_weeks", c.cv.val_weeks, "cv");
    get(v, "step", c.cv.step, "cv");
    get(v, "cv_end", c.cv.cv_end, "cv");
  }
  get(j, "freeze_weeks", c.freeze_weeks, "config");
  if (j.contains("tests")) {
    const auto& t = j.at("tests");
    config_detail::only(t, {"transitions", "bonferroni_m", "long_horizons", "one_sided", "level"}, "tests");
    if (t.contains("transitions")) c.tests.transitions = config_detail::pairs(t.at("transitions"), "tests.transitions");
    get(t, "bonferroni_m", c.tests.bonferroni_m, "tests");
    get(t, "long_horizons", c.tests.long_horizons, "tests");
    if (t.contains("one_sided")) c.tests.one_sided = config_detail::pairs(t.at("one_sided"), "tests.one_sided");
    get(t, "level", c.tests.level, "tests");
  }
  get(j, "output_dir", c.output_dir, "config");
  if (j.contains("output_dir")) c.output_dir = config_detail::resolve(c.output_dir, base_dir);
  get(j, "seed", c.seed, "config");
  c.validate();
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["version"] = c.version;
  j["name"] = c.name;
  nlohmann::json d = nlohmann::json::object();
  if (c.data.synth) d["synth"] = scenario_to_json(*c.data.synth);
  for (auto [key, v] : {std::pair{"transactions", &c.data.transactions}, std::pair{"articles", &c.data.articles},
                        std::pair{"sar", &c.data.sar}, std::pair{"ndbi", &c.data.ndbi}, std::pair{"rates", &c.data.rates}})
    if (!v->empty()) d[key] = *v;
  d["embedding_dim"] = c.data.manifest.embedding_dim;
  d["embedding_model"] = c.data.manifest.embedding_model;
  j["data"] = d;
  j["grid"] = {{"start", format_date(c.grid_start)}, {"weeks", c.grid_weeks}};
  j["regions"] = c.regions;
  j["tags"] = c.tags;
  j["horizons"] = c.horizons;
  j["models"] = nlohmann::json::array();
  for (const auto& m : c.models) j["models"].push_back(models::model_to_json(m));
  j["cv"] = {{"train_weeks", c.cv.train_weeks}, {"val_weeks", c.cv.val_weeks}, {"step", c.cv.step}, {"cv_end", c.cv.cv_end}};
  j["freeze_weeks"] = c.freeze_weeks;
  auto pj = [](const std::vector<PairedComparison>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : v) a.push_back({p.base, p.variant});
    return a;
  };
  j["tests"] = {{"transitions", pj(c.tests.transitions)},
                {"bonferroni_m", c.tests.bonferroni_m},
                {"long_horizons", c.tests.long_horizons},
                {"one_sided", pj(c.tests.one_sided)},
                {"level", c.tests.level}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return j;
}

// `paper_default` names the built-in configuration; anything else is a file.
inline ExperimentConfig load_config(const std::string& name_or_path) {
  if (name_or_path == "paper_default") return paper_default();
  std::ifstream in(name_or_path);
  if (!in) throw InputError("cannot open config file '" + name_or_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("config '" + name_or_path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::filesystem::path(name_or_path).parent_path());
}

}  // namespace subcast
