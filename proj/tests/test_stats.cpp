#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "subcast/stats.hpp"

using namespace subcast;
using namespace subcast::stats;
using Catch::Approx;

TEST_CASE("wilcoxon exact p equals sign enumeration up to n = 10", "[stats][wilcoxon]") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z(0.3, 1.0);
  double worst = 0;
  for (int n = 5; n <= 10; ++n) {
    for (int rep = 0; rep < 40; ++rep) {
      std::vector<double> d(static_cast<std::size_t>(n));
      // every other repetition rounds to one decimal so ties appear
      for (auto& v : d) v = rep % 2 ? std::round(z(rng) * 10) / 10 : z(rng);
      std::size_t nz = 0;
      for (double v : d) nz += v != 0.0;
      if (nz < 5) continue;
      const auto ref = oracle::signed_rank_enumeration(d);
      const auto two = wilcoxon_signed_rank(d, Alternative::two_sided);
      const auto gt = wilcoxon_signed_rank(d, Alternative::greater);
      const auto lt = wilcoxon_signed_rank(d, Alternative::less);
      CHECK(two.exact);
      CHECK(two.statistic == Approx(ref.w_plus).margin(1e-12));
      worst = std::max({worst, std::fabs(gt.p_value - ref.upper), std::fabs(lt.p_value - ref.lower),
                        std::fabs(two.p_value - oracle::signed_rank_two_sided(d))});
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("wilcoxon at n = 8 covers every achievable statistic", "[stats][wilcoxon]") {
  // ranks 1..8 with every sign pattern realise all W+ in 0..36
  std::set<double> seen;
  for (unsigned mask = 0; mask < 256; ++mask) {
    std::vector<double> d(8);
    for (int i = 0; i < 8; ++i) d[static_cast<std::size_t>(i)] = (mask >> i & 1U) ? i + 1.0 : -(i + 1.0);
    const auto res = wilcoxon_signed_rank(d, Alternative::greater);
    const auto ref = oracle::signed_rank_enumeration(d);
    CHECK(res.p_value == Approx(ref.upper).margin(1e-15));
    CHECK(res.p_value * 256 == Approx(std::round(res.p_value * 256)).margin(1e-9));
    seen.insert(res.statistic);
  }
  CHECK(seen.size() == 37);
}

TEST_CASE("wilcoxon small examples", "[stats][wilcoxon]") {
  std::vector<double> pos{0.5, 1.2, 0.3, 2.0, 0.9};
  CHECK(wilcoxon_signed_rank(pos, Alternative::greater).p_value == 0.03125);
  CHECK(wilcoxon_signed_rank(pos, Alternative::two_sided).p_value == 0.0625);
  CHECK(wilcoxon_signed_rank(pos, Alternative::less).p_value == 1.0);

  std::vector<double> sym{1, -1, 2, -2, 3, -3};
  CHECK(wilcoxon_signed_rank(sym).p_value == 1.0);

  std::vector<double> zeros(7, 0.0);
  const auto z = wilcoxon_signed_rank(zeros);
  CHECK(z.p_value == 1.0);
  CHECK(std::find(z.flags.begin(), z.flags.end(), "all_zero") != z.flags.end());

  std::vector<double> short_{1, 2, 0, 0, 3, -1};
  CHECK_THROWS_AS(wilcoxon_signed_rank(short_), InputError);

  std::vector<double> x{3, 4, 5, 6, 7, 8}, y{1, 1, 1, 1, 1, 1};
  CHECK(wilcoxon_paired(x, y, Alternative::greater).p_value == Approx(1.0 / 64));
  CHECK(wilcoxon_paired(y, x, Alternative::less).p_value == Approx(1.0 / 64));
}

TEST_CASE("wilcoxon normal approximation tracks the exact tail", "[stats][wilcoxon]") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> z(0.2, 1.0);
  WilcoxonOptions exact_opt;
  exact_opt.exact_max_n = 40;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> d(30);
    for (auto& v : d) v = z(rng);
    const auto approx = wilcoxon_signed_rank(d);
    const auto exact = wilcoxon_signed_rank(d, Alternative::two_sided, exact_opt);
    CHECK_FALSE(approx.exact);
    CHECK(exact.exact);
    CHECK(std::fabs(approx.p_value - exact.p_value) < 0.02);
  }
  // the 2^20 enumeration at n = 20 agrees with the dynamic programme
  std::vector<double> d20(20);
  for (auto& v : d20) v = z(rng);
  CHECK(wilcoxon_signed_rank(d20).p_value == Approx(oracle::signed_rank_two_sided(d20)).margin(1e-12));
}

TEST_CASE("friedman matches a hand-ranked fixture", "[stats][friedman]") {
  // ranks per block: (1,2,3) (2,1,3) (1,3,2) (1,3,2); rank sums 5, 9, 10
  // Q = 12 / (4 * 3 * 4) * (25 + 81 + 100) - 3 * 4 * 4 = 3.5
  const std::vector<std::vector<double>> blocks{{1.0, 2.0, 3.0}, {2.0, 1.0, 3.0}, {1.5, 2.5, 2.0}, {1.0, 3.0, 2.0}};
  const auto r = friedman(blocks);
  CHECK(r.statistic == 3.5);
  CHECK(r.p_value == Approx(std::exp(-1.75)).epsilon(1e-12));
  CHECK(r.n == 4);

  const std::vector<std::vector<double>> tied{{1, 1, 2, 4}, {3, 2, 2, 1}, {1, 2, 3, 4}, {5, 5, 5, 1}, {2, 3, 1, 3}};
  CHECK(friedman(tied).statistic == Approx(oracle::friedman_statistic(tied)).epsilon(1e-13));
}

TEST_CASE("friedman degenerate and strong inputs", "[stats][friedman]") {
  std::vector<std::vector<double>> same(6, std::vector<double>{1.5, 1.5, 1.5});
  const auto c = friedman(same);
  CHECK(c.statistic == 0.0);
  CHECK(c.p_value == 1.0);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> ident;
  for (int i = 0; i < 8; ++i) {
    const double v = u(rng);
    ident.push_back({v, v, v});
  }
  CHECK(friedman(ident).statistic == 0.0);

  std::vector<std::vector<double>> best;
  for (int i = 0; i < 10; ++i) best.push_back({0.1 * u(rng), 1 + u(rng), 1 + u(rng)});
  CHECK(friedman(best).p_value < 0.01);
}

TEST_CASE("friedman exact mode against direct enumeration", "[stats][friedman]") {
  const std::vector<std::vector<double>> blocks{{1.0, 2.0, 3.0}, {2.0, 1.0, 3.0}, {1.5, 2.5, 2.0}};
  FriedmanOptions opt;
  opt.exact = true;
  const auto r = friedman(blocks, opt);
  CHECK(r.exact);

  // all 6^3 relabellings of the treatments within each block
  const double q_obs = oracle::friedman_statistic(blocks);
  std::vector<int> p0{0, 1, 2}, p1{0, 1, 2}, p2{0, 1, 2};
  int hits = 0, total = 0;
  do {
    do {
      do {
        std::vector<std::vector<double>> b(3, std::vector<double>(3));
        for (int j = 0; j < 3; ++j) {
          b[0][static_cast<std::size_t>(j)] = blocks[0][static_cast<std::size_t>(p0[static_cast<std::size_t>(j)])];
          b[1][static_cast<std::size_t>(j)] = blocks[1][static_cast<std::size_t>(p1[static_cast<std::size_t>(j)])];
          b[2][static_cast<std::size_t>(j)] = blocks[2][static_cast<std::size_t>(p2[static_cast<std::size_t>(j)])];
        }
        hits += oracle::friedman_statistic(b) >= q_obs - 1e-9;
        ++total;
      } while (std::next_permutation(p2.begin(), p2.end()));
    } while (std::next_permutation(p1.begin(), p1.end()));
  } while (std::next_permutation(p0.begin(), p0.end()));
  CHECK(total == 216);
  CHECK(r.p_value == Approx(static_cast<double>(hits) / total).margin(1e-15));

  std::vector<std::vector<double>> large(12, std::vector<double>{1, 2, 3, 4, 5});
  CHECK_THROWS_AS(friedman(large, opt), InputError);
}

TEST_CASE("friedman is invariant to monotone transforms within blocks", "[stats][friedman]") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.1, 3);
  std::vector<std::vector<double>> a, b;
  for (int i = 0; i < 9; ++i) {
    std::vector<double> row;
    for (int j = 0; j < 6; ++j) row.push_back(std::round(u(rng) * 4) / 4);
    a.push_back(row);
    for (auto& v : row) v = i % 2 ? std::exp(v) : v * v * v + 7 * v;
    b.push_back(row);
  }
  const auto ra = friedman(a), rb = friedman(b);
  CHECK(ra.statistic == rb.statistic);
  CHECK(ra.p_value == rb.p_value);
}

TEST_CASE("bonferroni correction", "[stats]") {
  std::vector<double> p{0.01, 0.5, 0.002, 0.2, 0.04};
  const auto c = bonferroni(p, 5);
  CHECK(c[0] == 0.05);
  CHECK(c[1] == 1.0);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(c[i] == std::min(1.0, 5 * p[i]));
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      if (p[i] <= p[j]) CHECK(c[i] <= c[j]);
  CHECK_THROWS_AS(bonferroni(p, 4), InputError);

  std::vector<TestResult> tests(2);
  tests[0].p_value = 0.004;
  tests[1].p_value = 0.3;
  apply_bonferroni(tests, 5);
  CHECK(*tests[0].corrected_p == 0.02);
  CHECK(tests[0].significant());
  CHECK(*tests[1].corrected_p == 1.0);
  const auto j = tests[0].to_json();
  CHECK(j["m"] == 5);
  CHECK(j["decision_0_05"] == "reject");
}

TEST_CASE("pearson and spearman correlations", "[stats]") {
  std::vector<double> x{1, 2, 3, 4, 5, 6}, y;
  for (double v : x) y.push_back(2 * v + 1);
  auto c = correlations(x, y);
  CHECK(c.defined);
  CHECK(c.pearson == Approx(1.0).epsilon(1e-15));
  CHECK(c.spearman == Approx(1.0).epsilon(1e-15));

  std::vector<double> cx{-2, -1, 0, 1, 2}, cy{-8, -1, 0, 1, 8};
  c = correlations(cx, cy);
  CHECK(c.spearman == Approx(1.0));
  CHECK(c.pearson < 1.0);
  CHECK(c.pearson == Approx(34.0 / std::sqrt(10.0 * 130.0)).epsilon(1e-14));

  std::mt19937_64 rng(41);
  std::normal_distribution<double> z;
  std::vector<double> rx(50), ry(50);
  for (std::size_t i = 0; i < 50; ++i) {
    rx[i] = z(rng);
    ry[i] = 0.4 * rx[i] + z(rng);
  }
  // computational form of r
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    sx += rx[i];
    sy += ry[i];
    sxx += rx[i] * rx[i];
    syy += ry[i] * ry[i];
    sxy += rx[i] * ry[i];
  }
  const double r = (50 * sxy - sx * sy) / std::sqrt((50 * sxx - sx * sx) * (50 * syy - sy * sy));
  c = correlations(rx, ry);
  CHECK(std::fabs(c.pearson - r) < 1e-12);
  // Spearman without ties: 1 - 6 sum d^2 / (n (n^2 - 1))
  const auto ax = oracle::mid_ranks(rx), ay = oracle::mid_ranks(ry);
  double d2 = 0;
  for (std::size_t i = 0; i < 50; ++i) d2 += (ax[i] - ay[i]) * (ax[i] - ay[i]);
  CHECK(std::fabs(c.spearman - (1 - 6 * d2 / (50.0 * (2500 - 1)))) < 1e-12);

  std::vector<double> flat(6, 3.0);
  c = correlations(x, flat);
  CHECK_FALSE(c.defined);
  CHECK(std::isnan(c.pearson));
  CHECK_THROWS_AS(correlations(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InputError);
}

TEST_CASE("neighbor overlap", "[stats]") {
  std::vector<std::vector<int>> a{{1, 2, 3}, {4, 5, 6}}, b{{7, 8, 9}, {10, 11, 12}}, c{{3, 4, 5}, {6, 5, 4}};
  CHECK(neighbor_overlap(a, a) == 1.0);
  CHECK(neighbor_overlap(a, b) == 0.0);
  CHECK(neighbor_overlap(a, c) == Approx((1.0 / 3 + 1.0) / 2));
  CHECK_THROWS_AS(neighbor_overlap(a, {{1, 2}, {3, 4}}), InputError);
  CHECK_THROWS_AS(neighbor_overlap(a, {{1, 2, 3}}), InputError);
}
