#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace subcast::models {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool operator==(const TreeNode&) const = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  template <class Row>
  double predict(const Row& x) const {
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      i = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const { return depth_from(0); }
  bool operator==(const RegressionTree&) const = default;

 private:
  int depth_from(int i) const {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.feature < 0) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }
  std::vector<TreeNode> nodes_;
};

// Row indices sorted by each column, ties by row index.
inline std::vector<std::vector<int>> presort_columns(const Eigen::MatrixXd& X) {
  std::vector<std::vector<int>> order(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    auto& o = order[static_cast<std::size_t>(f)];
    o.resize(static_cast<std::size_t>(X.rows()));
    std::iota(o.begin(), o.end(), 0);
    std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return X(a, f) < X(b, f); });
  }
  return order;
}

struct TreeGrowth {
  int max_depth = 5;
  double min_leaf = 1.0;  // minimum total weight per child
  double lambda = 0.0;    // leaf value = sum(w * t) / (sum(w) + lambda)
  // features examined per node; 0 or >= cols means all of `allowed`
  int features_per_node = 0;
};

// Greedy level-wise growth on presorted columns. Node score is
// (sum w t)^2 / (sum w + lambda); a split is kept when it raises the summed
// score of the children above the parent. Rows with zero weight are ignored.
// With lambda = 0 this is variance reduction; with t the negative gradient and
// unit Hessians it is the second-order boosting gain.
inline RegressionTree grow_tree(const Eigen::MatrixXd& X, const std::vector<std::vector<int>>& order,
                                const Eigen::VectorXd& target, const std::vector<double>& weight,
                                const std::vector<int>& allowed, const TreeGrowth& g, std::mt19937_64& rng) {
  const auto n = static_cast<int>(X.rows());
  struct Stats {
    double a = 0.0, b = 0.0;
  };
  auto score = [&](const Stats& s) { return s.a * s.a / (s.b + g.lambda); };

  std::vector<TreeNode> nodes(1);
  std::vector<int> node_of(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i)
    if (weight[static_cast<std::size_t>(i)] > 0.0) node_of[static_cast<std::size_t>(i)] = 0;

  auto node_stats = [&](int count) {
    std::vector<Stats> st(static_cast<std::size_t>(count));
    for (int i = 0; i < n; ++i) {
      const int nd = node_of[static_cast<std::size_t>(i)];
      if (nd < 0) continue;
      const double w = weight[static_cast<std::size_t>(i)];
      st[static_cast<std::size_t>(nd)].a += w * target(i);
      st[static_cast<std::size_t>(nd)].b += w;
    }
    return st;
  };

  std::vector<int> active{0};
  std::vector<Stats> totals = node_stats(1);
  const int per_node = g.features_per_node > 0 && g.features_per_node < static_cast<int>(allowed.size())
                           ? g.features_per_node
                           : static_cast<int>(allowed.size());
  const auto p = static_cast<std::size_t>(X.cols());

  for (int depth = 0; depth < g.max_depth && !active.empty(); ++depth) {
    // candidate features per active node, drawn in node order
    std::vector<std::vector<char>> cand(active.size(), std::vector<char>(p, 0));
    std::vector<char> any(p, 0);
    std::vector<int> pool = allowed;
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (per_node == static_cast<int>(allowed.size())) {
        for (int f : allowed) cand[k][static_cast<std::size_t>(f)] = 1;
      } else {
        pool = allowed;
        for (int j = 0; j < per_node; ++j) {
          std::uniform_int_distribution<int> pick(j, static_cast<int>(pool.size()) - 1);
          std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick(rng))]);
          cand[k][static_cast<std::size_t>(pool[static_cast<std::size_t>(j)])] = 1;
        }
      }
      for (std::size_t f = 0; f < p; ++f) any[f] |= cand[k][f];
    }
    std::vector<int> slot(nodes.size(), -1);
    for (std::size_t k = 0; k < active.size(); ++k) slot[static_cast<std::size_t>(active[k])] = static_cast<int>(k);

    struct Best {
      double gain = 0.0;
      int feature = -1;
      double threshold = 0.0;
    };
    std::vector<Best> best(active.size());
    struct Scan {
      Stats left;
      double last = 0.0;
      bool started = false;
    };
    std::vector<Scan> scan(active.size());
    for (std::size_t f = 0; f < p; ++f) {
      if (!any[f]) continue;
      std::fill(scan.begin(), scan.end(), Scan{});
      for (int r : order[f]) {
        const int nd = node_of[static_cast<std::size_t>(r)];
        if (nd < 0) continue;
        const int k = slot[static_cast<std::size_t>(nd)];
        if (k < 0 || !cand[static_cast<std::size_t>(k)][f]) continue;
        auto& s = scan[static_cast<std::size_t>(k)];
        const double v = X(r, static_cast<Eigen::Index>(f));
        if (s.started && v > s.last) {
          const Stats& tot = totals[static_cast<std::size_t>(nd)];
          const Stats right{tot.a - s.left.a, tot.b - s.left.b};
          if (s.left.b >= g.min_leaf && right.b >= g.min_leaf) {
            const double gain = score(s.left) + score(right) - score(tot);
            auto& b = best[static_cast<std::size_t>(k)];
            if (gain > b.gain) {
              double thr = 0.5 * (s.last + v);
              if (!(thr < v)) thr = s.last;
              b = {gain, static_cast<int>(f), thr};
            }
          }
        }
        const double w = weight[static_cast<std::size_t>(r)];
        s.left.a += w * target(r);
        s.left.b += w;
        s.last = v;
        s.started = true;
      }
    }

    std::vector<int> next;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const int nd = active[k];
      const auto& b = best[k];
      const double parent = score(totals[static_cast<std::size_t>(nd)]);
      if (b.feature < 0 || !(b.gain > 1e-12 * parent)) continue;
      auto& node = nodes[static_cast<std::size_t>(nd)];
      node.feature = b.feature;
      node.threshold = b.threshold;
      node.left = static_cast<int>(nodes.size());
      node.right = node.left + 1;
      next.push_back(node.left);
      next.push_back(node.right);
      nodes.emplace_back();
      nodes.emplace_back();
    }
    if (next.empty()) break;
    for (int i = 0; i < n; ++i) {
      int& nd = node_of[static_cast<std::size_t>(i)];
      if (nd < 0) continue;
      const auto& node = nodes[static_cast<std::size_t>(nd)];
      if (node.feature < 0) continue;
      nd = X(i, node.feature) <= node.threshold ? node.left : node.right;
    }
    totals = node_stats(static_cast<int>(nodes.size()));
    active = std::move(next);
  }

  // leaf values from row-ordered sums
  std::vector<int> leaf_of(static_cast<std::size_t>(n), -1);
  std::vector<Stats> leaf(nodes.size());
  for (int i = 0; i < n; ++i) {
    if (weight[static_cast<std::size_t>(i)] <= 0.0) continue;
    int nd = 0;
    while (nodes[static_cast<std::size_t>(nd)].feature >= 0) {
      const auto& node = nodes[static_cast<std::size_t>(nd)];
      nd = X(i, node.feature) <= node.threshold ? node.left : node.right;
    }
    const double w = weight[static_cast<std::size_t>(i)];
    leaf[static_cast<std::size_t>(nd)].a += w * target(i);
    leaf[static_cast<std::size_t>(nd)].b += w;
  }
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].feature >= 0) continue;
    const double denom = leaf[k].b + g.lambda;
    nodes[k].value = denom > 0.0 ? leaf[k].a / denom : 0.0;
  }
  return RegressionTree(std::move(nodes));
}

}  // namespace subcast::models
