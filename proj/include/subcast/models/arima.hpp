#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "subcast/common.hpp"
#include "subcast/models/optim.hpp"

namespace subcast::models {

struct ArimaOrder {
  int p = 0, d = 0, q = 0;

  bool operator==(const ArimaOrder&) const = default;
  std::string str() const {
    return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
  }
};

struct ArimaParams {
  int max_p = 3;
  int max_d = 1;
  int max_q = 3;
  int min_obs = 60;
  int max_iter = 0;  // simplex iteration cap, 0: automatic

  void validate() const {
    if (max_p < 0 || max_p > 3 || max_q < 0 || max_q > 3) throw InputError("arima: p and q bounds must lie in 0..3");
    if (max_d < 0 || max_d > 1) throw InputError("arima: d bound must be 0 or 1");
    if (min_obs < 20) throw InputError("arima: min_obs must be >= 20");
  }
  // first residual, in original series indices, shared by every order so that
  // likelihoods are computed on the same sample
  int conditioning() const { return max_p + max_d; }
};

struct ArimaModel {
  ArimaOrder order;
  bool intercept = false;
  double mu = 0.0;
  std::vector<double> phi, theta;
  std::vector<double> raw;  // unconstrained simplex coordinates
  double sigma2 = 0.0;
  double loglik = 0.0;
  double aic = 0.0;
  int n_eff = 0;
  int iterations = 0;
  bool converged = false;

  // state for forecasting from the end of the fitted series
  std::vector<double> w_tail, e_tail;
  double last_level = 0.0;
};

namespace detail {

// Partial autocorrelations in (-1, 1) to AR coefficients of a stationary
// polynomial 1 - a_1 z - ... - a_p z^p (Durbin-Levinson recursion).
inline std::vector<double> pacf_to_ar(std::span<const double> r) {
  std::vector<double> a;
  for (std::size_t k = 0; k < r.size(); ++k) {
    std::vector<double> next(k + 1);
    for (std::size_t j = 0; j < k; ++j) next[j] = a[j] - r[k] * a[k - 1 - j];
    next[k] = r[k];
    a = std::move(next);
  }
  return a;
}

inline std::vector<double> difference(std::span<const double> y, int d) {
  std::vector<double> w(y.begin(), y.end());
  for (int i = 0; i < d; ++i) {
    for (std::size_t t = w.size() - 1; t > 0; --t) w[t] -= w[t - 1];
    w.erase(w.begin());
  }
  return w;
}

struct Decoded {
  double mu = 0.0;
  std::vector<double> phi, theta;
  double max_abs_r = 0.0;
};

inline Decoded decode(const std::vector<double>& x, const ArimaOrder& o, bool intercept) {
  Decoded dc;
  std::size_t i = 0;
  if (intercept) dc.mu = x[i++];
  std::vector<double> ra, rm;
  for (int k = 0; k < o.p; ++k) ra.push_back(std::tanh(x[i++]));
  for (int k = 0; k < o.q; ++k) rm.push_back(std::tanh(x[i++]));
  for (double r : ra) dc.max_abs_r = std::max(dc.max_abs_r, std::fabs(r));
  for (double r : rm) dc.max_abs_r = std::max(dc.max_abs_r, std::fabs(r));
  dc.phi = pacf_to_ar(ra);
  // invertible MA: 1 + sum theta_j z^j = 1 - sum a_j z^j
  for (double a : pacf_to_ar(rm)) dc.theta.push_back(-a);
  return dc;
}

// Conditional residuals e_t for t >= start (earlier residuals taken as zero).
inline double css(const std::vector<double>& w, std::size_t start, const Decoded& dc, std::vector<double>* resid) {
  std::vector<double> e(w.size(), 0.0);
  double ssr = 0.0;
  for (std::size_t t = start; t < w.size(); ++t) {
    double v = w[t] - dc.mu;
    for (std::size_t i = 0; i < dc.phi.size(); ++i) v -= dc.phi[i] * (w[t - 1 - i] - dc.mu);
    for (std::size_t j = 0; j < dc.theta.size(); ++j)
      if (t >= start + j + 1) v -= dc.theta[j] * e[t - 1 - j];
    e[t] = v;
    ssr += v * v;
  }
  if (resid) *resid = std::move(e);
  return ssr;
}

}  // namespace detail

// Conditional-sum-of-squares fit. The intercept is estimated only when d = 0.
inline ArimaModel arima_fit(std::span<const double> y, const ArimaOrder& order, const ArimaParams& params = {},
                            const std::vector<double>* warm = nullptr) {
  params.validate();
  if (order.p < 0 || order.p > params.max_p || order.q < 0 || order.q > params.max_q || order.d < 0 ||
      order.d > params.max_d)
    throw InputError("arima: order " + order.str() + " outside the search grid");
  const int m0 = params.conditioning();
  if (static_cast<int>(y.size()) < m0 + 10)
    throw InputError("arima: series of length " + std::to_string(y.size()) + " is too short");
  for (double v : y)
    if (!std::isfinite(v)) throw InputError("arima: series contains non-finite values");

  ArimaModel m;
  m.order = order;
  m.intercept = order.d == 0;
  const auto w = detail::difference(y, order.d);
  const auto start = static_cast<std::size_t>(m0 - order.d);
  m.n_eff = static_cast<int>(w.size() - start);

  const std::span<const double> used(w.data() + start, w.size() - start);
  const double wm = mean_of(used);
  const double ws = sample_std(used);
  std::vector<double> x0, step;
  if (m.intercept) {
    x0.push_back(wm);
    step.push_back(std::max(1e-3, 0.1 * ws));
  }
  for (int k = 0; k < order.p + order.q; ++k) {
    x0.push_back(0.0);
    step.push_back(0.3);
  }
  if (warm && warm->size() == x0.size()) x0 = *warm;

  auto objective = [&](const std::vector<double>& x) {
    return detail::css(w, start, detail::decode(x, order, m.intercept), nullptr);
  };
  SimplexOptions opt;
  opt.max_iter = params.max_iter;
  const auto res = nelder_mead(objective, x0, step, opt);

  const auto dc = detail::decode(res.x, order, m.intercept);
  std::vector<double> e;
  const double ssr = detail::css(w, start, dc, &e);
  m.raw = res.x;
  m.mu = dc.mu;
  m.phi = dc.phi;
  m.theta = dc.theta;
  m.iterations = res.iterations;
  m.sigma2 = ssr / m.n_eff;
  m.loglik = -0.5 * m.n_eff * (std::log(2.0 * std::numbers::pi * m.sigma2) + 1.0);
  const int k = order.p + order.q + 1 + (m.intercept ? 1 : 0);
  m.aic = 2.0 * k - 2.0 * m.loglik;
  m.converged = res.converged && std::isfinite(m.aic) && m.sigma2 > 0.0 && dc.max_abs_r <= 0.9999;

  const std::size_t keep_w = static_cast<std::size_t>(order.p), keep_e = static_cast<std::size_t>(order.q);
  m.w_tail.assign(w.end() - static_cast<std::ptrdiff_t>(keep_w), w.end());
  m.e_tail.assign(e.end() - static_cast<std::ptrdiff_t>(keep_e), e.end());
  m.last_level = y.back();
  return m;
}

// Mean forecasts for 1..steps periods after the end of the fitted series.
inline std::vector<double> arima_forecast(const ArimaModel& m, int steps) {
  if (steps < 1) throw InputError("arima: steps must be >= 1");
  std::vector<double> w = m.w_tail, e = m.e_tail;
  const std::size_t p = m.phi.size(), q = m.theta.size();
  std::vector<double> out;
  double level = m.last_level;
  for (int s = 0; s < steps; ++s) {
    double v = m.mu;
    for (std::size_t i = 0; i < p; ++i) v += m.phi[i] * (w[w.size() - 1 - i] - m.mu);
    for (std::size_t j = 0; j < q; ++j) v += m.theta[j] * e[e.size() - 1 - j];
    w.push_back(v);
    e.push_back(0.0);
    if (m.order.d == 1) {
      level += v;
      out.push_back(level);
    } else {
      out.push_back(v);
    }
  }
  return out;
}

struct ArimaSelection {
  ArimaModel model;
  bool fallback = false;
  int converged_fits = 0;
  std::string warning;
};

// Minimum AIC among converged fits; ties go to smaller p + q, then smaller p.
inline ArimaSelection arima_select(std::span<const double> y, const ArimaParams& params = {}) {
  params.validate();
  if (static_cast<int>(y.size()) < params.min_obs)
    throw InputError("arima: order selection needs at least " + std::to_string(params.min_obs) +
                     " observations, got " + std::to_string(y.size()));
  ArimaSelection sel;
  std::optional<ArimaModel> best;
  auto key = [](const ArimaModel& m) { return std::make_tuple(m.aic, m.order.p + m.order.q, m.order.p); };
  for (int d = 0; d <= params.max_d; ++d)
    for (int p = 0; p <= params.max_p; ++p)
      for (int q = 0; q <= params.max_q; ++q) {
        auto m = arima_fit(y, {p, d, q}, params);
        if (!m.converged) continue;
        ++sel.converged_fits;
        if (!best || key(m) < key(*best)) best = std::move(m);
      }
  if (best) {
    sel.model = std::move(*best);
  } else {
    sel.model = arima_fit(y, {0, std::min(1, params.max_d), 0}, params);
    sel.fallback = true;
    sel.warning = "arima: no converged fit in the order grid; falling back to " + sel.model.order.str();
  }
  return sel;
}

// Refit a selected order on a longer or shorter sample, warm-started from `from`.
inline ArimaModel arima_refit(std::span<const double> y, const ArimaModel& from, const ArimaParams& params = {}) {
  return arima_fit(y, from.order, params, &from.raw);
}

}  // namespace subcast::models
