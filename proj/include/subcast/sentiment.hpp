#pragma once

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "subcast/common.hpp"
#include "subcast/panel.hpp"

namespace subcast {

struct ArticleRecord {
  Date date;
  double positive_score = 0.0;
  double negative_score = 0.0;
  bool relevant = true;
  std::vector<double> embedding;
};

// Article-level Numerical Sentiment Index; nullopt when both tone scores are
// zero (the article is excluded from weekly aggregation).
inline std::optional<double> article_nsi(double positive, double negative) {
  const double total = positive + negative;
  if (!(total > 0.0)) return std::nullopt;
  return (positive - negative) / total;
}

// Weekly median of article NSI over relevant articles, before smoothing.
// Weeks without articles are forward filled.
inline WeeklySeries weekly_nsi_raw(std::span<const ArticleRecord> articles, const WeekGrid& grid) {
  std::map<int, std::vector<double>> by_week;
  int last_pre_grid = std::numeric_limits<int>::min();
  for (const auto& a : articles) {
    if (!a.relevant) continue;
    auto v = article_nsi(a.positive_score, a.negative_score);
    if (!v) continue;
    const int w = grid.week_of(a.date);
    if (w >= grid.size()) continue;
    if (w < 0) last_pre_grid = std::max(last_pre_grid, w);
    by_week[w].push_back(*v);
  }
  if (by_week.empty()) throw InputError("sentiment: no relevant articles with tone in the corpus");
  std::vector<DatedValue> weekly;
  for (auto& [w, vals] : by_week) {
    if (w < 0 && w != last_pre_grid) continue;
    weekly.push_back({grid.end_of(w), median_of(vals)});
  }
  return align_to_grid(weekly, grid, "CITY").series;
}

inline WeeklySeries weekly_nsi(std::span<const ArticleRecord> articles, const WeekGrid& grid, int smooth = 4) {
  return trailing_mean(weekly_nsi_raw(articles, grid), smooth);
}

inline constexpr int kToneDims = 7;
inline constexpr int kPcaDims = 8;

// (nsi, d_nsi, vol, ma4, ema4, nsi_lag1, nsi_lag4)
using ToneVector = std::array<double, kToneDims>;

struct ToneConfig {
  int window = 4;
  double ema_alpha = 0.3;
};

// Exponential moving average seeded with the first value. The update is
// written as a correction so a constant input stays exactly constant.
inline std::vector<double> ema(std::span<const double> x, double alpha) {
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t)
    out[t] = t == 0 ? x[0] : out[t - 1] + alpha * (x[t] - out[t - 1]);
  return out;
}

// Tone features for every week; rows before week 4 are unavailable.
class ToneFeatures {
 public:
  ToneFeatures() = default;
  ToneFeatures(const WeeklySeries& nsi, const ToneConfig& cfg = {}) : nsi_(nsi.values), cfg_(cfg) {
    ema_ = ema(nsi_, cfg.ema_alpha);
  }

  std::optional<ToneVector> at(int t) const {
    if (t < 4 || t >= static_cast<int>(nsi_.size())) return std::nullopt;
    const auto ut = static_cast<std::size_t>(t);
    const std::size_t lo = ut + 1 >= static_cast<std::size_t>(cfg_.window) ? ut + 1 - cfg_.window : 0;
    std::span<const double> win(nsi_.data() + lo, ut - lo + 1);
    return ToneVector{nsi_[ut], nsi_[ut] - nsi_[ut - 1], sample_std(win), mean_of(win), ema_[ut], nsi_[ut - 1],
                      nsi_[ut - 4]};
  }
  int size() const { return static_cast<int>(nsi_.size()); }

 private:
  std::vector<double> nsi_;
  std::vector<double> ema_;
  ToneConfig cfg_;
};

struct PCAModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // one component per row, orthonormal
  Eigen::VectorXd explained_variance;

  int rank() const { return static_cast<int>(components.rows()); }
};

// Covariance-eigendecomposition PCA on the rows of `data` (n x d), sample
// covariance with n - 1 denominator. Each component's largest-magnitude
// coordinate is made positive. Components with negligible variance are
// dropped, so the model may hold fewer than k.
inline PCAModel fit_pca(const Eigen::MatrixXd& data, int k = kPcaDims) {
  const auto n = data.rows();
  const auto d = data.cols();
  if (k < 1) throw std::invalid_argument("fit_pca: k must be >= 1");
  if (n < k + 1) throw InputError("fit_pca: need at least k + 1 weeks in the fitting window");
  PCAModel m;
  m.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - m.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigendecomposition failed");
  // Eigen returns ascending eigenvalues
  const Eigen::VectorXd evals = es.eigenvalues();
  const double top = std::max(evals(d - 1), 0.0);
  const double tol = top * 1e-10 * static_cast<double>(d);
  int keep = 0;
  for (Eigen::Index i = d - 1; i >= 0 && keep < k; --i) {
    if (evals(i) > tol && evals(i) > 0.0) ++keep;
  }
  if (keep < 1) throw InputError("fit_pca: embeddings have zero variance in the fitting window");
  m.components.resize(keep, d);
  m.explained_variance.resize(keep);
  for (int j = 0; j < keep; ++j) {
    Eigen::VectorXd v = es.eigenvectors().col(d - 1 - j);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    m.components.row(j) = v.transpose();
    m.explained_variance(j) = evals(d - 1 - j);
  }
  return m;
}

// Projects each week's embedding and applies the EMA per component. The
// output always has `width` columns; components the model lacks are zero.
inline Eigen::MatrixXd pca_scores_smoothed(const PCAModel& model, const Eigen::MatrixXd& weekly_embeddings,
                                           double alpha = 0.3, int width = kPcaDims) {
  const auto n = weekly_embeddings.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, width);
  const int r = std::min(width, model.rank());
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::VectorXd centered = weekly_embeddings.row(t).transpose() - model.mean;
    for (int j = 0; j < r; ++j) {
      const double score = model.components.row(j).dot(centered);
      out(t, j) = t == 0 ? score : out(t - 1, j) + alpha * (score - out(t - 1, j));
    }
  }
  return out;
}

// Mean embedding of relevant articles per week, forward filled; weeks after
// the grid are ignored and the latest pre-grid week seeds the first row.
inline Eigen::MatrixXd weekly_embeddings(std::span<const ArticleRecord> articles, const WeekGrid& grid) {
  std::size_t dim = 0;
  std::map<int, std::pair<Eigen::VectorXd, int>> acc;
  for (const auto& a : articles) {
    if (!a.relevant) continue;
    if (dim == 0) dim = a.embedding.size();
    if (a.embedding.size() != dim || dim == 0) throw InputError("sentiment: inconsistent embedding dimension");
    const int w = grid.week_of(a.date);
    if (w >= grid.size()) continue;
    auto [it, fresh] = acc.try_emplace(w, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)), 0);
    it->second.first += Eigen::Map<const Eigen::VectorXd>(a.embedding.data(), static_cast<Eigen::Index>(dim));
    it->second.second += 1;
  }
  if (acc.empty()) throw InputError("sentiment: no relevant articles with embeddings");
  Eigen::MatrixXd out(grid.size(), static_cast<Eigen::Index>(dim));
  std::optional<Eigen::VectorXd> last;
  auto it = acc.begin();
  while (it != acc.end() && it->first < 0) {
    last = it->second.first / it->second.second;
    ++it;
  }
  for (int t = 0; t < grid.size(); ++t) {
    if (it != acc.end() && it->first == t) {
      last = it->second.first / it->second.second;
      ++it;
    }
    if (!last) throw InputError("sentiment: no embedding at or before grid start");
    out.row(t) = last->transpose();
  }
  return out;
}

enum class SentimentVariant { full, nsi_only, pca_only };

inline int sentiment_width(SentimentVariant v) {
  switch (v) {
    case SentimentVariant::full: return kToneDims + kPcaDims;
    case SentimentVariant::nsi_only: return kToneDims;
    case SentimentVariant::pca_only: return kPcaDims;
  }
  return 0;
}

struct SentimentConfig {
  int smooth_window = 4;
  ToneConfig tone;
  int pca_components = kPcaDims;
  double pca_alpha = 0.3;
  int pca_fit_weeks = 260;  // initial training window
};

// Weekly city-level sentiment features S_t.
class SentimentFeatures {
 public:
  SentimentFeatures() = default;
  SentimentFeatures(std::span<const ArticleRecord> articles, const WeekGrid& grid, const SentimentConfig& cfg = {}) {
    nsi_ = weekly_nsi(articles, grid, cfg.smooth_window);
    tone_ = ToneFeatures(nsi_, cfg.tone);
    const Eigen::MatrixXd emb = weekly_embeddings(articles, grid);
    const int fit_rows = std::min(cfg.pca_fit_weeks, grid.size());
    pca_ = fit_pca(emb.topRows(fit_rows), cfg.pca_components);
    scores_ = pca_scores_smoothed(pca_, emb, cfg.pca_alpha, kPcaDims);
  }

  const WeeklySeries& nsi() const { return nsi_; }
  const PCAModel& pca() const { return pca_; }
  const Eigen::MatrixXd& scores() const { return scores_; }
  std::optional<ToneVector> tone(int t) const { return tone_.at(t); }

  // Tone first, then PC1..PC8; variants select one part.
  std::optional<std::vector<double>> block(int t, SentimentVariant v = SentimentVariant::full) const {
    auto tone = tone_.at(t);
    if (!tone) return std::nullopt;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(sentiment_width(v)));
    if (v != SentimentVariant::pca_only) out.insert(out.end(), tone->begin(), tone->end());
    if (v != SentimentVariant::nsi_only)
      for (int j = 0; j < kPcaDims; ++j) out.push_back(scores_(t, j));
    return out;
  }

 private:
  WeeklySeries nsi_;
  ToneFeatures tone_;
  PCAModel pca_;
  Eigen::MatrixXd scores_;
};

struct ArticleManifest {
  int embedding_dim = 0;
  std::string embedding_model;
};

inline std::vector<ArticleRecord> read_articles_csv(std::istream& in, const std::string& source,
                                                    const ArticleManifest& manifest) {
  csv::Reader r(in, source);
  const auto c_date = r.require("date");
  const auto c_pos = r.require("positive_score");
  const auto c_neg = r.require("negative_score");
  const auto c_rel = r.require("relevant");
  std::vector<std::size_t> c_emb;
  for (int i = 0; i < manifest.embedding_dim; ++i) c_emb.push_back(r.require("emb_" + std::to_string(i)));
  if (r.has("emb_" + std::to_string(manifest.embedding_dim)))
    throw InputError(source + ": more embedding columns than the manifest declares");
  std::vector<ArticleRecord> out;
  while (r.next()) {
    ArticleRecord a;
    try {
      a.date = parse_date(r.text(c_date));
    } catch (const InputError& e) {
      r.fail(e.what());
    }
    a.positive_score = r.number(c_pos);
    a.negative_score = r.number(c_neg);
    if (a.positive_score < 0.0 || a.negative_score < 0.0) r.fail("tone scores must be non-negative");
    const long rel = r.integer(c_rel);
    if (rel != 0 && rel != 1) r.fail("relevant must be 0 or 1");
    a.relevant = rel == 1;
    a.embedding.reserve(c_emb.size());
    for (auto c : c_emb) a.embedding.push_back(r.number(c));
    out.push_back(std::move(a));
  }
  return out;
}

inline void write_articles_csv(std::ostream& os, std::span<const ArticleRecord> articles, int dim) {
  os << "date,positive_score,negative_score,relevant";
  for (int i = 0; i < dim; ++i) os << ",emb_" << i;
  os << '\n';
  for (const auto& a : articles) {
    os << format_date(a.date) << ',' << csv::format_double(a.positive_score) << ','
       << csv::format_double(a.negative_score) << ',' << (a.relevant ? 1 : 0);
    for (double e : a.embedding) os << ',' << csv::format_double(e);
    os << '\n';
  }
}

}  // namespace subcast
