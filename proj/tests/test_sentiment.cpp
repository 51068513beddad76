#include <catch_amalgamated.hpp>

#include <random>

#include "subcast/sentiment.hpp"
#include "subcast/synth.hpp"

using namespace subcast;

namespace {

const WeekGrid kGrid(make_date(2015, 1, 4), 40);

ArticleRecord art(int week, int back, double pos, double neg, bool relevant = true, std::vector<double> emb = {0.0}) {
  return {kGrid.end_of(week) - std::chrono::days{back}, pos, neg, relevant, std::move(emb)};
}

WeeklySeries series_of(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return WeeklySeries{"CITY", WeekGrid(make_date(2015, 1, 4), n), std::move(v),
                      std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0)};
}

// Cyclic Jacobi eigenvalue iteration for a symmetric matrix; returns
// eigenvalues descending with eigenvectors as columns.
std::pair<std::vector<double>, std::vector<std::vector<double>>> jacobi_eigen(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a[x][x] > a[y][y]; });
  std::vector<double> vals;
  std::vector<std::vector<double>> vecs;
  for (auto i : order) {
    vals.push_back(a[i][i]);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][i];
    vecs.push_back(col);
  }
  return {vals, vecs};
}

}  // namespace

TEST_CASE("article NSI", "[sentiment]") {
  CHECK(*article_nsi(2, 1) == Catch::Approx(1.0 / 3.0));
  CHECK(*article_nsi(1.5, 1.5) == 0.0);
  CHECK_FALSE(article_nsi(0, 0).has_value());
  CHECK(*article_nsi(3, 1) == 0.5);
}

TEST_CASE("weekly NSI is a forward-filled weekly median", "[sentiment]") {
  std::vector<ArticleRecord> a{art(0, 1, 1, 0), art(0, 2, 0, 1), art(0, 3, 1, 1), art(2, 0, 3, 1),
                               art(2, 0, 9, 9, false), art(3, 0, 0, 0)};
  const auto raw = weekly_nsi_raw(a, kGrid);
  CHECK(raw[0] == 0.0);
  CHECK(raw[1] == 0.0);
  CHECK(raw.filled[1] == 1);
  CHECK(raw[2] == 0.5);
  CHECK(raw[3] == 0.5);  // zero-tone article excluded

  std::vector<ArticleRecord> constant;
  for (int w = 0; w < 40; ++w) constant.push_back(art(w, 0, 3, 1));
  for (double v : weekly_nsi(constant, kGrid).values) CHECK(v == 0.5);

  std::vector<ArticleRecord> irrelevant{art(0, 0, 1, 0, false)};
  CHECK_THROWS_AS(weekly_nsi(irrelevant, kGrid), InputError);
}

TEST_CASE("weekly NSI matches grouping oracle and ignores article order", "[sentiment][oracle]") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 4);
  std::uniform_int_distribution<int> wk(0, 39), dy(0, 6), cnt(0, 1);
  std::vector<ArticleRecord> a;
  for (int i = 0; i < 300; ++i) a.push_back(art(wk(rng), dy(rng), u(rng), u(rng), cnt(rng) == 1 || i < 40));
  a.push_back(art(0, 0, 1, 2));
  std::map<int, std::vector<double>> groups;
  for (const auto& x : a)
    if (x.relevant) groups[kGrid.week_of(x.date)].push_back((x.positive_score - x.negative_score) / (x.positive_score + x.negative_score));
  const auto raw = weekly_nsi_raw(a, kGrid);
  double last = 0;
  for (int t = 0; t < 40; ++t) {
    if (groups.count(t)) last = median_of(groups[t]);
    CHECK(raw[t] == last);
  }
  auto shuffled = a;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(weekly_nsi(shuffled, kGrid).values == weekly_nsi(a, kGrid).values);
}

TEST_CASE("tone vector statistics", "[sentiment]") {
  const ToneFeatures constant(series_of(std::vector<double>(12, 0.2)));
  CHECK_FALSE(constant.at(3).has_value());
  const auto v = *constant.at(6);
  CHECK(v[0] == 0.2);
  CHECK(v[1] == 0.0);
  CHECK(v[2] == 0.0);
  CHECK(v[5] == 0.2);
  CHECK(v[6] == 0.2);
  CHECK(v[3] == Catch::Approx(0.2).margin(1e-15));
  CHECK(v[4] == Catch::Approx(0.2).margin(1e-15));

  const ToneFeatures step(series_of({0, 0, 0, 0, 0, 1, 1, 1, 1}));
  CHECK((*step.at(5))[1] == 1.0);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  std::vector<double> x(60);
  for (auto& e : x) e = nd(rng);
  const ToneFeatures tf(series_of(x), ToneConfig{4, 0.3});
  std::vector<double> e(60);
  e[0] = x[0];
  for (int t = 1; t < 60; ++t) e[t] = 0.3 * x[t] + 0.7 * e[t - 1];
  for (int t = 4; t < 60; ++t) {
    const auto tv = *tf.at(t);
    const double m = (x[t] + x[t - 1] + x[t - 2] + x[t - 3]) / 4.0;
    double ss = 0;
    for (int i = t - 3; i <= t; ++i) ss += (x[i] - m) * (x[i] - m);
    CHECK(tv[0] == x[t]);
    CHECK(tv[1] == x[t] - x[t - 1]);
    CHECK(tv[2] == Catch::Approx(std::sqrt(ss / 3.0)).margin(1e-12));
    CHECK(tv[3] == Catch::Approx(m).margin(1e-12));
    CHECK(tv[4] == Catch::Approx(e[t]).margin(1e-12));
    CHECK(tv[5] == x[t - 1]);
    CHECK(tv[6] == x[t - 4]);
  }
}

TEST_CASE("PCA on covariance eigendecomposition", "[sentiment][pca]") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd;

  SECTION("rank-one data has one component") {
    Eigen::MatrixXd d(30, 5);
    Eigen::VectorXd dir(5);
    dir << 1, -2, 0.5, 0, 3;
    for (int i = 0; i < 30; ++i) d.row(i) = (nd(rng) * dir).transpose();
    const auto m = fit_pca(d, 3);
    CHECK(m.rank() == 1);
    CHECK(std::fabs(m.components.row(0).dot(dir.normalized())) == Catch::Approx(1.0).epsilon(1e-12));
  }
  SECTION("isotropic sample has balanced variances") {
    Eigen::MatrixXd d(4000, 2);
    for (int i = 0; i < 4000; ++i) d.row(i) << nd(rng), nd(rng);
    const auto m = fit_pca(d, 2);
    CHECK(m.explained_variance(1) / m.explained_variance(0) > 0.9);
  }
  SECTION("agrees with a Jacobi eigensolver") {
    const int n = 80, dim = 12;
    Eigen::MatrixXd d(n, dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) d(i, j) = nd(rng) * (1.0 + j) + (j > 0 ? 0.5 * d(i, j - 1) : 0.0);
    const auto m = fit_pca(d, 8);
    REQUIRE(m.rank() == 8);

    std::vector<double> mean(dim, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) mean[j] += d(i, j) / n;
    std::vector<std::vector<double>> cov(dim, std::vector<double>(dim, 0.0));
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) cov[a][b] += (d(i, a) - mean[a]) * (d(i, b) - mean[b]) / (n - 1);
    const auto [vals, vecs] = jacobi_eigen(cov);

    const Eigen::MatrixXd I = m.components * m.components.transpose();
    CHECK((I - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-9);
    for (int j = 0; j < 8; ++j) {
      CHECK(m.explained_variance(j) == Catch::Approx(vals[j]).epsilon(1e-9));
      if (j > 0) CHECK(m.explained_variance(j) <= m.explained_variance(j - 1));
      Eigen::VectorXd ref(dim);
      for (int k = 0; k < dim; ++k) ref(k) = vecs[j][k];
      // distinct eigenvalues: principal angle from |cos|
      CHECK(std::fabs(m.components.row(j).dot(ref)) > 1.0 - 1e-12);
      Eigen::Index arg;
      m.components.row(j).cwiseAbs().maxCoeff(&arg);
      CHECK(m.components(j, arg) > 0.0);
    }
  }
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Random(5, 10), 8), InputError);
}

TEST_CASE("PCA scores are centered and exponentially smoothed", "[sentiment][pca]") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Random(40, 6);
  const auto m = fit_pca(d, 4);
  Eigen::MatrixXd at_mean = m.mean.transpose().replicate(10, 1);
  CHECK(pca_scores_smoothed(m, at_mean).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::MatrixXd constant = d.row(3).replicate(10, 1);
  const auto cs = pca_scores_smoothed(m, constant);
  for (int t = 1; t < 10; ++t) CHECK(cs.row(t) == cs.row(0));
  CHECK(cs.cols() == 8);
  CHECK(cs.col(7).cwiseAbs().maxCoeff() == 0.0);  // padded beyond the fitted rank

  // a step from the mean to e: gap to the new score decays by (1 - alpha) per week
  Eigen::MatrixXd steps = m.mean.transpose().replicate(12, 1);
  Eigen::VectorXd e = m.mean + m.components.row(0).transpose() * 2.0;
  for (int t = 2; t < 12; ++t) steps.row(t) = e.transpose();
  const auto ss = pca_scores_smoothed(m, steps, 0.3);
  for (int t = 2; t < 12; ++t) CHECK(ss(t, 0) == Catch::Approx(2.0 * (1.0 - std::pow(0.7, t - 1))).margin(1e-12));
}

TEST_CASE("sentiment block variants", "[sentiment]") {
  auto cfg = synth::ScenarioConfig::preset("smooth");
  cfg.regions = 1;
  cfg.weeks = 300;
  const auto sc = synth::generate(cfg);
  const SentimentFeatures sf(sc.articles, sc.grid);
  CHECK(sf.block(10, SentimentVariant::full)->size() == 15);
  CHECK(sf.block(10, SentimentVariant::nsi_only)->size() == 7);
  CHECK(sf.block(10, SentimentVariant::pca_only)->size() == 8);
  CHECK_FALSE(sf.block(3).has_value());
  const auto full = *sf.block(50);
  const auto tone = *sf.block(50, SentimentVariant::nsi_only);
  const auto pcs = *sf.block(50, SentimentVariant::pca_only);
  CHECK(std::equal(tone.begin(), tone.end(), full.begin()));
  CHECK(std::equal(pcs.begin(), pcs.end(), full.begin() + 7));

  // PCA is frozen on the first 260 weeks: later embeddings do not move it
  auto late = sc.articles;
  for (auto& a : late)
    if (sc.grid.week_of(a.date) >= 260)
      for (auto& e : a.embedding) e += 5.0;
  const SentimentFeatures sf2(late, sc.grid);
  CHECK(sf2.pca().components == sf.pca().components);
  CHECK(sf2.pca().mean == sf.pca().mean);
  for (int t = 0; t < 260; ++t) CHECK(*sf2.block(std::max(t, 4)) == *sf.block(std::max(t, 4)));
}

TEST_CASE("articles CSV schema", "[sentiment][io]") {
  std::vector<ArticleRecord> a{art(0, 0, 1, 2, true, {0.5, -1}), art(1, 0, 0, 0, false, {0.25, 3})};
  std::stringstream ss;
  write_articles_csv(ss, a, 2);
  const auto back = read_articles_csv(ss, "a.csv", {2, "placeholder"});
  REQUIRE(back.size() == 2);
  CHECK(back[0].embedding == a[0].embedding);
  CHECK_FALSE(back[1].relevant);

  std::stringstream short_emb("date,positive_score,negative_score,relevant,emb_0\n2015-01-01,1,1,1,0\n");
  CHECK_THROWS_WITH(read_articles_csv(short_emb, "a.csv", {2, ""}), Catch::Matchers::ContainsSubstring("emb_1"));
  std::stringstream bad_rel("date,positive_score,negative_score,relevant\n2015-01-01,1,1,2\n");
  CHECK_THROWS_WITH(read_articles_csv(bad_rel, "a.csv", {0, ""}), Catch::Matchers::ContainsSubstring("row 2"));
}
