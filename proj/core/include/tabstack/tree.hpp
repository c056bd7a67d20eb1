#pragma once

#include <cstdint>
#include <vector>

#include "tabstack/matrix.hpp"

namespace tabstack::learners {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double leaf_value = 0.0;  // positive fraction / class index / mean / boost weight
  std::size_t n_samples = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  bool empty() const { return nodes.empty(); }
  int depth() const;

  double predict_row(const double* x) const {
    std::int32_t i = 0;
    while (nodes[i].feature >= 0)
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].leaf_value;
  }
};

struct TreeParams {
  int max_depth = 6;
  std::size_t min_samples_leaf = 1;
  double feature_fraction = 1.0;
  std::uint64_t seed = 0;
};

// Greedy Gini splits over a per-node random feature subset; exact thresholds
// at midpoints of consecutive distinct values; ties break to the lowest
// feature index, then the lowest threshold. Leaves hold the positive-class
// fraction.
Tree fit_tree(const Matrix& X, const std::vector<int>& y, const TreeParams& params);

// Same machinery with k-class Gini; leaves hold the majority class index.
Tree fit_multiclass_tree(const Matrix& X, const std::vector<int>& y, int n_classes,
                         const TreeParams& params);

// Variance-reduction splits; leaves hold the mean target.
Tree fit_regression_tree(const Matrix& X, const std::vector<double>& y,
                         const TreeParams& params);

namespace detail {

// Row-multiset entry points used by the forest: `rows` may contain duplicate
// row ids (bootstrap resamples) and is given pre-sorted by value per feature.
enum class TreeTask { binary, multiclass, regression };

Tree build_tree(const Matrix& X, TreeTask task, const int* y_class, const double* y_real,
                int n_classes, std::vector<std::vector<std::uint32_t>> sorted_rows,
                const TreeParams& params);

std::vector<std::vector<std::uint32_t>> sort_rows_by_feature(
    const Matrix& X, const std::vector<std::uint32_t>& rows);

}  // namespace detail

}  // namespace tabstack::learners
