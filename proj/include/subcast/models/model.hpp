#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "subcast/common.hpp"
#include "subcast/models/arima.hpp"
#include "subcast/models/boosting.hpp"
#include "subcast/models/forest.hpp"
#include "subcast/models/knn.hpp"
#include "subcast/models/naive.hpp"
#include "subcast/models/ridge.hpp"

namespace subcast::models {

enum class Family { naive12, arima, ridge, knn, rf, gbt };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::naive12: return "naive12";
    case Family::arima: return "arima";
    case Family::ridge: return "ridge";
    case Family::knn: return "knn";
    case Family::rf: return "rf";
    case Family::gbt: return "gbt";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  for (Family f : {Family::naive12, Family::arima, Family::ridge, Family::knn, Family::rf, Family::gbt})
    if (s == family_name(f)) return f;
  throw InputError("unknown model family '" + s + "' (expected naive12, arima, ridge, knn, rf or gbt)");
}

// Univariate baselines read only the target price series.
inline bool is_baseline(Family f) { return f == Family::naive12 || f == Family::arima; }

struct ModelSpec {
  Family family = Family::knn;
  std::string label;  // defaults to the family name
  ArimaParams arima;
  RidgeParams ridge;
  KnnParams knn;
  ForestParams rf;
  BoostingParams gbt;

  std::string name() const { return label.empty() ? family_name(family) : label; }

  void validate() const {
    switch (family) {
      case Family::naive12: break;
      case Family::arima: arima.validate(); break;
      case Family::ridge: ridge.validate(); break;
      case Family::knn: knn.validate(); break;
      case Family::rf: rf.validate(); break;
      case Family::gbt: gbt.validate(); break;
    }
  }
};

namespace detail {

template <class T>
void take(const nlohmann::json& j, const char* key, T& out, const std::string& ctx) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(ctx + ": field '" + key + "' has the wrong type");
  }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& ctx) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw InputError(ctx + ": unknown field '" + k + "'");
  }
}

}  // namespace detail

inline ModelSpec model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family")) throw InputError("model spec needs a 'family' field");
  ModelSpec m;
  m.family = parse_family(j.at("family").get<std::string>());
  const std::string ctx = std::string("model ") + family_name(m.family);
  detail::take(j, "label", m.label, ctx);
  switch (m.family) {
    case Family::naive12:
      detail::reject_unknown(j, {"family", "label"}, ctx);
      break;
    case Family::arima:
      detail::reject_unknown(j, {"family", "label", "max_p", "max_d", "max_q", "min_obs", "max_iter"}, ctx);
      detail::take(j, "max_p", m.arima.max_p, ctx);
      detail::take(j, "max_d", m.arima.max_d, ctx);
      detail::take(j, "max_q", m.arima.max_q, ctx);
      detail::take(j, "min_obs", m.arima.min_obs, ctx);
      detail::take(j, "max_iter", m.arima.max_iter, ctx);
      break;
    case Family::ridge:
      detail::reject_unknown(j, {"family", "label", "alpha", "alpha_grid", "holdout"}, ctx);
      detail::take(j, "alpha", m.ridge.alpha, ctx);
      detail::take(j, "alpha_grid", m.ridge.alpha_grid, ctx);
      detail::take(j, "holdout", m.ridge.holdout, ctx);
      break;
    case Family::knn:
      detail::reject_unknown(j, {"family", "label", "k"}, ctx);
      detail::take(j, "k", m.knn.k, ctx);
      break;
    case Family::rf:
      detail::reject_unknown(j, {"family", "label", "trees", "max_depth", "min_leaf", "mtry", "bootstrap"}, ctx);
      detail::take(j, "trees", m.rf.trees, ctx);
      detail::take(j, "max_depth", m.rf.max_depth, ctx);
      detail::take(j, "min_leaf", m.rf.min_leaf, ctx);
      detail::take(j, "mtry", m.rf.mtry, ctx);
      detail::take(j, "bootstrap", m.rf.bootstrap, ctx);
      break;
    case Family::gbt:
      detail::reject_unknown(
          j, {"family", "label", "trees", "max_depth", "learning_rate", "subsample", "colsample", "lambda"}, ctx);
      detail::take(j, "trees", m.gbt.trees, ctx);
      detail::take(j, "max_depth", m.gbt.max_depth, ctx);
      detail::take(j, "learning_rate", m.gbt.learning_rate, ctx);
      detail::take(j, "subsample", m.gbt.subsample, ctx);
      detail::take(j, "colsample", m.gbt.colsample, ctx);
      detail::take(j, "lambda", m.gbt.lambda, ctx);
      break;
  }
  m.validate();
  return m;
}

inline nlohmann::json model_to_json(const ModelSpec& m) {
  nlohmann::json j{{"family", family_name(m.family)}};
  if (!m.label.empty()) j["label"] = m.label;
  switch (m.family) {
    case Family::naive12: break;
    case Family::arima:
      j.update({{"max_p", m.arima.max_p}, {"max_d", m.arima.max_d}, {"max_q", m.arima.max_q},
                {"min_obs", m.arima.min_obs}, {"max_iter", m.arima.max_iter}});
      break;
    case Family::ridge:
      j.update({{"alpha", m.ridge.alpha}, {"alpha_grid", m.ridge.alpha_grid}, {"holdout", m.ridge.holdout}});
      break;
    case Family::knn: j["k"] = m.knn.k; break;
    case Family::rf:
      j.update({{"trees", m.rf.trees}, {"max_depth", m.rf.max_depth}, {"min_leaf", m.rf.min_leaf},
                {"mtry", m.rf.mtry}, {"bootstrap", m.rf.bootstrap}});
      break;
    case Family::gbt:
      j.update({{"trees", m.gbt.trees}, {"max_depth", m.gbt.max_depth}, {"learning_rate", m.gbt.learning_rate},
                {"subsample", m.gbt.subsample}, {"colsample", m.gbt.colsample}, {"lambda", m.gbt.lambda}});
      break;
  }
  return j;
}

struct TabularForecast {
  std::vector<double> values;
  std::vector<std::vector<int>> neighbors;  // knn only
  std::string warning;
};

// Fits a feature-based learner on standardized training rows and predicts the
// validation rows. Baseline families are rejected here.
inline TabularForecast fit_predict_tabular(const ModelSpec& spec, const Eigen::MatrixXd& Xtr_std,
                                           const Eigen::VectorXd& ytr, const std::vector<int>& train_weeks,
                                           const Eigen::MatrixXd& Xva_std, std::uint64_t seed) {
  TabularForecast out;
  Eigen::VectorXd pred;
  switch (spec.family) {
    case Family::ridge: {
      Ridge r;
      r.fit(Xtr_std, ytr, spec.ridge);
      pred = r.predict(Xva_std);
      break;
    }
    case Family::knn: {
      Knn k;
      k.fit(Xtr_std, ytr, train_weeks, spec.knn);
      out.warning = k.warning();
      pred.resize(Xva_std.rows());
      for (Eigen::Index i = 0; i < Xva_std.rows(); ++i) {
        auto q = k.query(Xva_std.row(i));
        pred(i) = q.forecast;
        out.neighbors.push_back(std::move(q.neighbors));
      }
      break;
    }
    case Family::rf: {
      auto p = spec.rf;
      p.seed = seed;
      RandomForest f;
      f.fit(Xtr_std, ytr, p);
      pred = f.predict(Xva_std);
      break;
    }
    case Family::gbt: {
      auto p = spec.gbt;
      p.seed = seed;
      GradientBoosting g;
      g.fit(Xtr_std, ytr, p);
      pred = g.predict(Xva_std);
      break;
    }
    default:
      throw std::logic_error(std::string("fit_predict_tabular: ") + family_name(spec.family) + " is a baseline");
  }
  out.values.assign(pred.data(), pred.data() + pred.size());
  return out;
}

}  // namespace subcast::models
