#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "subcast/common.hpp"

namespace subcast::models {

struct KnnParams {
  int k = 7;

  void validate() const {
    if (k < 1) throw InputError("knn: k must be >= 1");
  }
};

struct KnnQuery {
  double forecast = 0.0;
  std::vector<int> neighbors;  // decision weeks, nearest first
};

// Unweighted mean of the k nearest training targets under L1 distance.
class Knn {
 public:
  void fit(Eigen::MatrixXd X, Eigen::VectorXd y, std::vector<int> weeks, const KnnParams& params) {
    params.validate();
    if (X.rows() != y.size() || static_cast<std::size_t>(X.rows()) != weeks.size())
      throw std::invalid_argument("knn: X, y and weeks differ in length");
    if (X.rows() < 1) throw InputError("knn: no training rows");
    X_ = std::move(X);
    y_ = std::move(y);
    weeks_ = std::move(weeks);
    k_ = params.k;
    warning_.clear();
    if (X_.rows() < k_) {
      warning_ = "knn: only " + std::to_string(X_.rows()) + " training rows for k = " + std::to_string(k_) +
                 "; using all rows";
      k_ = static_cast<int>(X_.rows());
    }
  }

  template <class Row>
  KnnQuery query(const Row& x) const {
    const auto n = static_cast<std::size_t>(X_.rows());
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      for (Eigen::Index j = 0; j < X_.cols(); ++j) d += std::fabs(X_(static_cast<Eigen::Index>(i), j) - x(j));
      dist[i] = d;
    }
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto closer = [&](int a, int b) {
      const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
      if (dist[ua] != dist[ub]) return dist[ua] < dist[ub];
      return weeks_[ua] < weeks_[ub];
    };
    std::partial_sort(idx.begin(), idx.begin() + k_, idx.end(), closer);
    KnnQuery q;
    double s = 0.0;
    for (int j = 0; j < k_; ++j) {
      const int i = idx[static_cast<std::size_t>(j)];
      s += y_(i);
      q.neighbors.push_back(weeks_[static_cast<std::size_t>(i)]);
    }
    q.forecast = s / k_;
    return q;
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = query(X.row(i)).forecast;
    return out;
  }

  int k() const { return k_; }
  const std::string& warning() const { return warning_; }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  std::vector<int> weeks_;
  int k_ = 7;
  std::string warning_;
};

}  // namespace subcast::models
