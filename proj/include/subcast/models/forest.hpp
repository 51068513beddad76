#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "subcast/common.hpp"
#include "subcast/models/tree.hpp"

namespace subcast::models {

struct ForestParams {
  int trees = 300;
  int max_depth = 5;
  int min_leaf = 1;
  int mtry = 0;  // 0: ceil(cols / 3)
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (trees < 1) throw InputError("rf: trees must be >= 1");
    if (max_depth < 0) throw InputError("rf: max_depth must be >= 0");
    if (min_leaf < 1) throw InputError("rf: min_leaf must be >= 1");
    if (mtry < 0) throw InputError("rf: mtry must be >= 0");
  }
};

class RandomForest {
 public:
  RandomForest() = default;

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestParams& params) {
    params.validate();
    if (X.rows() < 2) throw InputError("rf: need at least two training rows");
    if (X.rows() != y.size()) throw std::invalid_argument("rf: X and y row counts differ");
    params_ = params;
    const auto n = static_cast<std::size_t>(X.rows());
    const int cols = static_cast<int>(X.cols());
    const int mtry = params.mtry > 0 ? std::min(params.mtry, cols) : (cols + 2) / 3;
    const auto order = presort_columns(X);
    std::vector<int> all(static_cast<std::size_t>(cols));
    std::iota(all.begin(), all.end(), 0);
    TreeGrowth g{params.max_depth, static_cast<double>(params.min_leaf), 0.0, mtry};

    // a depth-0 forest is the training mean, so skip the resampling
    const bool resample = params.bootstrap && params.max_depth > 0;
    std::mt19937_64 rng(params.seed);
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    trees_.clear();
    trees_.reserve(static_cast<std::size_t>(params.trees));
    std::vector<double> weight(n);
    for (int t = 0; t < params.trees; ++t) {
      if (resample) {
        std::fill(weight.begin(), weight.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) weight[draw(rng)] += 1.0;
      } else {
        std::fill(weight.begin(), weight.end(), 1.0);
      }
      trees_.push_back(grow_tree(X, order, y, weight, all, g, rng));
    }
  }

  template <class Row>
  double predict_row(const Row& x) const {
    // running mean keeps identical tree outputs exact
    double m = 0.0;
    for (std::size_t t = 0; t < trees_.size(); ++t) m += (trees_[t].predict(x) - m) / static_cast<double>(t + 1);
    return m;
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X.row(i));
    return out;
  }

  const std::vector<RegressionTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }

 private:
  ForestParams params_;
  std::vector<RegressionTree> trees_;
};

}  // namespace subcast::models
