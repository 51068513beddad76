#pragma once

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "subcast/features.hpp"
#include "subcast/geo.hpp"
#include "subcast/index.hpp"
#include "subcast/sentiment.hpp"

namespace subcast {

// Canonical input files. External producers validate against these, either
// through the manifest below or by running `subcast validate`.
enum class InputKind { transactions, articles, sar, ndbi, rates };

inline const std::vector<std::pair<InputKind, const char*>>& input_kinds() {
  static const std::vector<std::pair<InputKind, const char*>> k{{InputKind::transactions, "transactions"},
                                                                {InputKind::articles, "articles"},
                                                                {InputKind::sar, "sar"},
                                                                {InputKind::ndbi, "ndbi"},
                                                                {InputKind::rates, "rates"}};
  return k;
}

inline InputKind parse_input_kind(const std::string& s) {
  for (const auto& [k, name] : input_kinds())
    if (s == name) return k;
  throw InputError("unknown input kind '" + s + "' (expected transactions, articles, sar, ndbi or rates)");
}

inline constexpr int kSchemaVersion = 1;

namespace schema_detail {

inline nlohmann::json column(const std::string& name, const std::string& type, const std::string& rule,
                             bool required = true) {
  return {{"name", name}, {"type", type}, {"rule", rule}, {"required", required}};
}

}  // namespace schema_detail

inline nlohmann::json input_schema(InputKind kind, const ArticleManifest& manifest = {16, ""}) {
  using schema_detail::column;
  nlohmann::json cols = nlohmann::json::array();
  std::string name;
  switch (kind) {
    case InputKind::transactions:
      name = "transactions";
      cols = {column("date", "date", "YYYY-MM-DD"), column("region", "string", "non-empty"),
              column("price_per_m2", "number", "> 0"), column("size_m2", "number", "> 0")};
      break;
    case InputKind::articles:
      name = "articles";
      cols = {column("date", "date", "YYYY-MM-DD"), column("positive_score", "number", ">= 0"),
              column("negative_score", "number", ">= 0"), column("relevant", "integer", "0 or 1")};
      for (int i = 0; i < manifest.embedding_dim; ++i)
        cols.push_back(column("emb_" + std::to_string(i), "number", "finite"));
      break;
    case InputKind::sar:
      name = "sar";
      cols = {column("date", "date", "YYYY-MM-DD"), column("region", "string", "non-empty"),
              column("vv_db", "number", "finite, decibels"), column("vh_db", "number", "finite, decibels")};
      break;
    case InputKind::ndbi:
      name = "ndbi";
      cols = {column("date", "date", "YYYY-MM-DD"), column("region", "string", "non-empty"),
              column("ndbi", "number", "in [-1, 1]")};
      break;
    case InputKind::rates:
      name = "rates";
      cols = {column("date", "date", "YYYY-MM-DD"), column("rate_pct", "number", "finite"),
              column("tenor", "string", "e.g. 3M; empty matches any tenor", false)};
      break;
  }
  nlohmann::json j{{"schema_version", kSchemaVersion}, {"name", name}, {"columns", cols},
                   {"extra_columns", "ignored"}, {"encoding", "UTF-8, comma separated, header row"}};
  if (kind == InputKind::articles) {
    j["embedding_dim"] = manifest.embedding_dim;
    j["embedding_model"] = manifest.embedding_model;
    j["extra_columns"] = "ignored, except emb_<embedding_dim> which is rejected";
  }
  return j;
}

inline nlohmann::json all_input_schemas(const ArticleManifest& manifest = {16, ""}) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, name] : input_kinds()) j[name] = input_schema(k, manifest);
  return j;
}

struct ValidationReport {
  std::size_t rows = 0;
  std::vector<std::string> regions;
};

// Parses a whole file with the same reader the pipeline uses; the first
// violation raises InputError naming the file, row and column.
inline ValidationReport validate_input(InputKind kind, std::istream& in, const std::string& source,
                                       const ArticleManifest& manifest = {16, ""}) {
  ValidationReport rep;
  std::set<std::string> regions;
  switch (kind) {
    case InputKind::transactions: {
      const auto v = read_transactions_csv(in, source);
      rep.rows = v.size();
      for (const auto& t : v) regions.insert(t.region);
      break;
    }
    case InputKind::articles: rep.rows = read_articles_csv(in, source, manifest).size(); break;
    case InputKind::sar: {
      const auto v = read_sar_csv(in, source);
      rep.rows = v.size();
      for (const auto& t : v) regions.insert(t.region);
      break;
    }
    case InputKind::ndbi: {
      const auto v = read_ndbi_csv(in, source);
      rep.rows = v.size();
      for (const auto& t : v) regions.insert(t.region);
      break;
    }
    case InputKind::rates: rep.rows = read_rates_csv(in, source).size(); break;
  }
  rep.regions.assign(regions.begin(), regions.end());
  return rep;
}

inline ValidationReport validate_input_file(InputKind kind, const std::string& path,
                                            const ArticleManifest& manifest = {16, ""}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return validate_input(kind, in, path, manifest);
}

}  // namespace subcast
