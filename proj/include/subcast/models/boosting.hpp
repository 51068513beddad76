#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "subcast/common.hpp"
#include "subcast/models/tree.hpp"

namespace subcast::models {

struct BoostingParams {
  int trees = 600;
  int max_depth = 4;
  double learning_rate = 0.05;
  double subsample = 0.9;
  double colsample = 0.9;
  double lambda = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (trees < 0) throw InputError("gbt: trees must be >= 0");
    if (max_depth < 0) throw InputError("gbt: max_depth must be >= 0");
    if (!(learning_rate > 0.0)) throw InputError("gbt: learning_rate must be positive");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw InputError("gbt: subsample must lie in (0, 1]");
    if (!(colsample > 0.0 && colsample <= 1.0)) throw InputError("gbt: colsample must lie in (0, 1]");
    if (lambda < 0.0) throw InputError("gbt: lambda must be >= 0");
  }
};

// Squared-loss gradient boosting. Rows are subsampled without replacement
// and columns once per tree.
class GradientBoosting {
 public:
  GradientBoosting() = default;

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const BoostingParams& params) {
    params.validate();
    if (X.rows() < 2) throw InputError("gbt: need at least two training rows");
    if (X.rows() != y.size()) throw std::invalid_argument("gbt: X and y row counts differ");
    params_ = params;
    const auto n = static_cast<std::size_t>(X.rows());
    const auto cols = static_cast<std::size_t>(X.cols());
    base_ = mean_of(std::span<const double>(y.data(), n));
    const auto order = presort_columns(X);
    const auto n_rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(params.subsample * n)));
    const auto n_cols = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(params.colsample * cols)));
    TreeGrowth g{params.max_depth, 0.0, params.lambda, 0};

    std::mt19937_64 rng(params.seed);
    Eigen::VectorXd f = Eigen::VectorXd::Constant(X.rows(), base_);
    std::vector<int> rows(n), cols_all(cols);
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols_all.begin(), cols_all.end(), 0);
    std::vector<double> weight(n);
    trees_.clear();
    loss_.assign(1, (y - f).squaredNorm() / static_cast<double>(n));
    for (int t = 0; t < params.trees; ++t) {
      std::fill(weight.begin(), weight.end(), 0.0);
      if (n_rows == n) {
        std::fill(weight.begin(), weight.end(), 1.0);
      } else {
        for (std::size_t j = 0; j < n_rows; ++j) {
          std::uniform_int_distribution<std::size_t> pick(j, n - 1);
          std::swap(rows[j], rows[pick(rng)]);
          weight[static_cast<std::size_t>(rows[j])] = 1.0;
        }
      }
      std::vector<int> allowed = cols_all;
      if (n_cols < cols) {
        for (std::size_t j = 0; j < n_cols; ++j) {
          std::uniform_int_distribution<std::size_t> pick(j, cols - 1);
          std::swap(allowed[j], allowed[pick(rng)]);
        }
        allowed.resize(n_cols);
        std::sort(allowed.begin(), allowed.end());
      }
      const Eigen::VectorXd residual = y - f;
      trees_.push_back(grow_tree(X, order, residual, weight, allowed, g, rng));
      const auto& tree = trees_.back();
      for (Eigen::Index i = 0; i < X.rows(); ++i) f(i) += params.learning_rate * tree.predict(X.row(i));
      loss_.push_back((y - f).squaredNorm() / static_cast<double>(n));
    }
  }

  template <class Row>
  double predict_row(const Row& x) const {
    double out = base_;
    for (const auto& t : trees_) out += params_.learning_rate * t.predict(x);
    return out;
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X.row(i));
    return out;
  }

  double base_score() const { return base_; }
  // mean squared training error after 0, 1, ..., trees rounds
  const std::vector<double>& training_loss() const { return loss_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  BoostingParams params_;
  double base_ = 0.0;
  std::vector<RegressionTree> trees_;
  std::vector<double> loss_;
};

}  // namespace subcast::models
