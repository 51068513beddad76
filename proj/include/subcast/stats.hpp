#pragma once

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "subcast/common.hpp"

namespace subcast::stats {

// Direction refers to the paired differences d = x - y: `less` means x tends
// to be smaller (an improvement when x are the errors of the candidate).
enum class Alternative { two_sided, less, greater };

inline const char* alternative_name(Alternative a) {
  switch (a) {
    case Alternative::two_sided: return "two_sided";
    case Alternative::less: return "less";
    case Alternative::greater: return "greater";
  }
  return "?";
}

inline Alternative parse_alternative(const std::string& s) {
  if (s == "two_sided") return Alternative::two_sided;
  if (s == "less") return Alternative::less;
  if (s == "greater") return Alternative::greater;
  throw InputError("unknown alternative '" + s + "' (expected two_sided, less or greater)");
}

struct TestResult {
  std::string name;
  double statistic = 0.0;
  double p_value = 1.0;
  std::optional<double> corrected_p;
  Alternative alternative = Alternative::two_sided;
  int n = 0;
  int m = 1;
  bool exact = false;
  std::vector<std::string> flags;
  std::string inputs_digest;

  double decision_p() const { return corrected_p.value_or(p_value); }
  bool significant(double level = 0.05) const { return decision_p() < level; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"name", name},
                     {"inputs_digest", inputs_digest},
                     {"statistic", statistic},
                     {"p", p_value},
                     {"corrected_p", corrected_p ? nlohmann::json(*corrected_p) : nlohmann::json(nullptr)},
                     {"decision_0_05", significant() ? "reject" : "retain"},
                     {"alternative", alternative_name(alternative)},
                     {"m", m},
                     {"n", n},
                     {"exact", exact}};
    if (!flags.empty()) j["flags"] = flags;
    return j;
  }
};

inline std::string digest_of(std::span<const double> v) {
  Fnv1a h;
  h.add(static_cast<std::uint64_t>(v.size()));
  for (double x : v) h.add(x);
  return h.hex();
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

struct WilcoxonOptions {
  int min_n = 5;         // nonzero differences required
  int exact_max_n = 25;  // exact null distribution up to this n
};

namespace detail {

// Null distribution of the doubled positive-rank sum: count[s] sign patterns.
inline std::vector<double> signed_rank_counts(std::span<const int> doubled_ranks) {
  int total = 0;
  for (int r : doubled_ranks) total += r;
  std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
  count[0] = 1.0;
  int reach = 0;
  for (int r : doubled_ranks) {
    for (int s = reach; s >= 0; --s)
      if (count[static_cast<std::size_t>(s)] != 0.0) count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
    reach += r;
  }
  return count;
}

}  // namespace detail

// Signed-rank test on paired differences. Zero differences are dropped;
// ties in |d| share average ranks. The statistic is W+, the positive-rank sum.
inline TestResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alt = Alternative::two_sided,
                                       const WilcoxonOptions& opt = {}) {
  TestResult res;
  res.name = "wilcoxon_signed_rank";
  res.alternative = alt;
  res.inputs_digest = digest_of(diffs);
  std::vector<double> nz;
  for (double d : diffs) {
    if (!std::isfinite(d)) throw InputError("wilcoxon: non-finite difference");
    if (d != 0.0) nz.push_back(d);
  }
  res.n = static_cast<int>(nz.size());
  if (nz.empty()) {
    res.p_value = 1.0;
    res.flags.push_back("all_zero");
    return res;
  }
  if (res.n < opt.min_n)
    throw InputError("wilcoxon: " + std::to_string(res.n) + " nonzero differences, need at least " +
                     std::to_string(opt.min_n));
  if (static_cast<std::size_t>(res.n) < diffs.size()) res.flags.push_back("zeros_dropped");

  std::vector<double> absd(nz.size());
  for (std::size_t i = 0; i < nz.size(); ++i) absd[i] = std::fabs(nz[i]);
  const auto ranks = average_ranks(absd);
  double wplus = 0.0;
  for (std::size_t i = 0; i < nz.size(); ++i)
    if (nz[i] > 0) wplus += ranks[i];
  res.statistic = wplus;
  const double n = res.n;

  if (res.n <= opt.exact_max_n) {
    res.exact = true;
    std::vector<int> doubled(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
    const auto count = detail::signed_rank_counts(doubled);
    const int obs = static_cast<int>(std::lround(2.0 * wplus));
    const double total = std::ldexp(1.0, res.n);
    double ge = 0.0, le = 0.0;
    for (std::size_t s = 0; s < count.size(); ++s) {
      if (static_cast<int>(s) >= obs) ge += count[s];
      if (static_cast<int>(s) <= obs) le += count[s];
    }
    const double pg = ge / total, pl = le / total;
    res.p_value = alt == Alternative::greater ? pg : alt == Alternative::less ? pl : std::min(1.0, 2.0 * std::min(pg, pl));
    return res;
  }

  double tie = 0.0;
  std::vector<double> sorted = absd;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie += t * t * t - t;
    i = j;
  }
  const double mu = n * (n + 1) / 4.0;
  const double sd = std::sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - tie / 48.0);
  if (alt == Alternative::greater) {
    res.p_value = normal_sf((wplus - mu - 0.5) / sd);
  } else if (alt == Alternative::less) {
    res.p_value = normal_sf((mu - wplus - 0.5) / sd);
  } else {
    res.p_value = std::min(1.0, 2.0 * normal_sf(std::max(0.0, std::fabs(wplus - mu) - 0.5) / sd));
  }
  return res;
}

inline TestResult wilcoxon_paired(std::span<const double> x, std::span<const double> y,
                                  Alternative alt = Alternative::two_sided, const WilcoxonOptions& opt = {}) {
  if (x.size() != y.size()) throw InputError("wilcoxon: paired samples differ in length");
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  return wilcoxon_signed_rank(d, alt, opt);
}

struct FriedmanOptions {
  bool tie_correction = true;
  bool exact = false;                 // permutation p-value
  double max_permutations = 5e7;      // guard for the exact mode
};

namespace detail {

inline double rank_sum_square(std::span<const double> sums) {
  double s = 0.0;
  for (double r : sums) s += r * r;
  return s;
}

}  // namespace detail

// blocks[i][j]: block (region) i, treatment j. Ranks within blocks, ties
// averaged; chi-square with k - 1 degrees of freedom.
inline TestResult friedman(const std::vector<std::vector<double>>& blocks, const FriedmanOptions& opt = {}) {
  TestResult res;
  res.name = "friedman";
  const std::size_t n = blocks.size();
  if (n < 2) throw InputError("friedman: need at least 2 blocks");
  const std::size_t k = blocks.front().size();
  if (k < 2) throw InputError("friedman: need at least 2 treatments");
  std::vector<double> flat;
  std::vector<std::vector<double>> ranks;
  std::vector<double> sums(k, 0.0);
  double tie = 0.0;
  for (const auto& b : blocks) {
    if (b.size() != k) throw InputError("friedman: blocks differ in treatment count");
    for (double v : b) {
      if (!std::isfinite(v)) throw InputError("friedman: non-finite value");
      flat.push_back(v);
    }
    ranks.push_back(average_ranks(b));
    for (std::size_t j = 0; j < k; ++j) sums[j] += ranks.back()[j];
    std::vector<double> s = b;
    std::sort(s.begin(), s.end());
    for (std::size_t i = 0; i < k;) {
      std::size_t j = i;
      while (j < k && s[j] == s[i]) ++j;
      const double t = static_cast<double>(j - i);
      tie += t * t * t - t;
      i = j;
    }
  }
  res.inputs_digest = digest_of(flat);
  res.n = static_cast<int>(n);
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  const double base = 12.0 / (nn * kk * (kk + 1.0)) * detail::rank_sum_square(sums) - 3.0 * nn * (kk + 1.0);
  double denom = 1.0;
  if (opt.tie_correction) denom = 1.0 - tie / (nn * (kk * kk * kk - kk));
  if (denom <= 0.0) {
    res.statistic = 0.0;
    res.p_value = 1.0;
    res.flags.push_back("all_blocks_constant");
    return res;
  }
  res.statistic = std::max(0.0, base / denom);

  if (!opt.exact) {
    res.p_value = boost::math::gamma_q((kk - 1.0) / 2.0, res.statistic / 2.0);
    return res;
  }

  // Exact: every block's ranks permuted independently under the null.
  std::vector<std::vector<std::vector<double>>> perms(n);
  double total = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r = ranks[i];
    std::sort(r.begin(), r.end());
    do perms[i].push_back(r);
    while (std::next_permutation(r.begin(), r.end()));
    total *= static_cast<double>(perms[i].size());
  }
  if (total > opt.max_permutations)
    throw InputError("friedman: exact mode would enumerate " + std::to_string(total) + " rank arrangements");
  const double obs = detail::rank_sum_square(sums);
  const double eps = 1e-9 * std::max(1.0, obs);
  double hit = 0.0;
  std::vector<double> acc(k, 0.0);
  auto walk = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      if (detail::rank_sum_square(acc) >= obs - eps) hit += 1.0;
      return;
    }
    for (const auto& p : perms[i]) {
      for (std::size_t j = 0; j < k; ++j) acc[j] += p[j];
      self(self, i + 1);
      for (std::size_t j = 0; j < k; ++j) acc[j] -= p[j];
    }
  };
  walk(walk, 0);
  res.exact = true;
  res.p_value = hit / total;
  return res;
}

inline std::vector<double> bonferroni(std::span<const double> p, int m) {
  if (m < static_cast<int>(p.size()))
    throw InputError("bonferroni: m = " + std::to_string(m) + " is below the number of tests " +
                     std::to_string(p.size()));
  std::vector<double> out;
  for (double v : p) out.push_back(std::min(1.0, m * v));
  return out;
}

inline void apply_bonferroni(std::vector<TestResult>& tests, int m) {
  std::vector<double> p;
  for (const auto& t : tests) p.push_back(t.p_value);
  const auto c = bonferroni(p, m);
  for (std::size_t i = 0; i < tests.size(); ++i) {
    tests[i].corrected_p = c[i];
    tests[i].m = m;
  }
}

struct Correlation {
  double pearson = std::numeric_limits<double>::quiet_NaN();
  double spearman = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;  // false when either input has zero variance
};

inline double pearson_r(std::span<const double> x, std::span<const double> y) {
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

inline Correlation correlations(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("correlations: inputs differ in length");
  if (x.size() < 3) throw InputError("correlations: need at least 3 pairs");
  Correlation c;
  c.pearson = pearson_r(x, y);
  if (std::isnan(c.pearson)) return c;
  const auto rx = average_ranks(x), ry = average_ranks(y);
  c.spearman = pearson_r(rx, ry);
  c.defined = true;
  return c;
}

// Mean over queries of |A ∩ B| / k.
inline double neighbor_overlap(const std::vector<std::vector<int>>& a, const std::vector<std::vector<int>>& b) {
  if (a.size() != b.size()) throw InputError("neighbor_overlap: query counts differ");
  if (a.empty()) throw InputError("neighbor_overlap: no queries");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size() || a[i].empty())
      throw InputError("neighbor_overlap: neighbor counts differ at query " + std::to_string(i));
    const std::set<int> sa(a[i].begin(), a[i].end());
    int common = 0;
    for (int v : std::set<int>(b[i].begin(), b[i].end())) common += sa.count(v) ? 1 : 0;
    s += static_cast<double>(common) / static_cast<double>(a[i].size());
  }
  return s / static_cast<double>(a.size());
}

}  // namespace subcast::stats
