#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace subcast::models {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SimplexOptions {
  double ftol = 1e-10;  // relative spread of simplex values
  double xtol = 1e-8;   // largest vertex distance from the best, per coordinate
  int max_iter = 0;     // 0: 1000 per dimension
};

// Nelder-Mead with the standard coefficients (1, 2, 0.5, 0.5).
template <class F>
SimplexResult nelder_mead(F&& f, std::vector<double> x0, const std::vector<double>& step,
                          const SimplexOptions& opt = {}) {
  const std::size_t n = x0.size();
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };
  if (n == 0) return {x0, eval(x0), 0, true};
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : 1000 * static_cast<int>(n);

  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
  std::vector<double> val(n + 1);
  for (std::size_t i = 0; i <= n; ++i) val[i] = eval(pts[i]);
  std::vector<std::size_t> idx(n + 1);

  auto along = [&](const std::vector<double>& c, const std::vector<double>& worst, double t) {
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = c[j] + t * (worst[j] - c[j]);
    return out;
  };

  SimplexResult res;
  int it = 0;
  for (; it < max_iter; ++it) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    const std::size_t best = idx.front(), worst = idx.back(), second = idx[n - 1];

    double spread = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j) spread = std::max(spread, std::fabs(pts[i][j] - pts[best][j]));
    const double fspread = std::fabs(val[worst] - val[best]);
    if (fspread <= opt.ftol * (std::fabs(val[best]) + std::fabs(val[worst])) + 1e-300 && spread <= opt.xtol) {
      res.converged = true;
      break;
    }

    std::vector<double> c(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) c[j] += pts[i][j];
    }
    for (double& v : c) v /= static_cast<double>(n);

    const auto xr = along(c, pts[worst], -1.0);
    const double fr = eval(xr);
    if (fr < val[best]) {
      const auto xe = along(c, pts[worst], -2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const auto xc = along(c, pts[worst], outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = xc;
      val[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
      val[i] = eval(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
  res.x = pts[best];
  res.value = val[best];
  res.iterations = it;
  return res;
}

}  // namespace subcast::models
