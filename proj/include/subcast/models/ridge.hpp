#pragma once

#include <Eigen/Dense>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "subcast/common.hpp"

namespace subcast::models {

struct RidgeParams {
  double alpha = 1.0;
  // non-empty: choose alpha per fit on a trailing holdout of the training rows
  std::vector<double> alpha_grid;
  int holdout = 26;

  void validate() const {
    if (!(alpha >= 0.0)) throw InputError("ridge: alpha must be >= 0");
    for (double a : alpha_grid)
      if (!(a >= 0.0)) throw InputError("ridge: alpha grid values must be >= 0");
    if (!alpha_grid.empty() && holdout < 1) throw InputError("ridge: holdout must be >= 1");
  }
};

// Minimizes ||y - X b - c||^2 + alpha ||b||^2 with the intercept c unpenalized.
class Ridge {
 public:
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha) {
    if (!(alpha >= 0.0)) throw InputError("ridge: alpha must be >= 0");
    if (X.rows() != y.size()) throw std::invalid_argument("ridge: X and y row counts differ");
    if (X.rows() < 1) throw InputError("ridge: no training rows");
    alpha_ = alpha;
    const Eigen::RowVectorXd xm = X.colwise().mean();
    const double ym = y.mean();
    const Eigen::MatrixXd Xc = X.rowwise() - xm;
    Eigen::MatrixXd A = Xc.transpose() * Xc;
    A.diagonal().array() += alpha;
    const Eigen::VectorXd rhs = Xc.transpose() * (y.array() - ym).matrix();
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success || (alpha == 0.0 && llt.rcond() < 1e-12))
      throw InputError("ridge: normal equations are singular with alpha = " + format_alpha(alpha) +
                       "; use alpha > 0");
    coef_ = llt.solve(rhs);
    intercept_ = ym - xm.dot(coef_);
  }

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RidgeParams& params) {
    params.validate();
    fit(X, y, params.alpha_grid.empty() ? params.alpha : select_alpha(X, y, params));
  }

  // Smallest holdout MAE over the grid; ties keep the earlier grid value.
  static double select_alpha(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RidgeParams& params) {
    const Eigen::Index h = params.holdout;
    if (X.rows() <= h + 1) throw InputError("ridge: too few rows for the alpha holdout");
    const Eigen::Index m = X.rows() - h;
    double best_alpha = params.alpha_grid.front();
    double best = std::numeric_limits<double>::infinity();
    for (double a : params.alpha_grid) {
      Ridge r;
      try {
        r.fit(X.topRows(m), y.head(m), a);
      } catch (const InputError&) {
        continue;
      }
      const double err = (r.predict(X.bottomRows(h)) - y.tail(h)).cwiseAbs().mean();
      if (err < best) {
        best = err;
        best_alpha = a;
      }
    }
    return best_alpha;
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    return (X * coef_).array() + intercept_;
  }

  const Eigen::VectorXd& coef() const { return coef_; }
  double intercept() const { return intercept_; }
  double alpha() const { return alpha_; }

 private:
  static std::string format_alpha(double a) {
    std::ostringstream os;
    os << a;
    return os.str();
  }
  Eigen::VectorXd coef_;
  double intercept_ = 0.0;
  double alpha_ = 0.0;
};

}  // namespace subcast::models
