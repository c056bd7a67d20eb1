#pragma once

#include <cstdint>
#include <vector>

#include "tabstack/matrix.hpp"
#include "tabstack/tree.hpp"

namespace tabstack::learners {

struct ForestParams {
  std::size_t n_trees = 100;
  int max_depth = 14;
  std::size_t min_samples_leaf = 1;
  double feature_fraction = 0.5;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct ForestModel {
  ForestParams params;
  std::size_t n_features = 0;
  detail::TreeTask task = detail::TreeTask::binary;
  int n_classes = 2;
  std::vector<Tree> trees;
};

// Bagged Gini trees; predict_proba averages per-tree leaf positive fractions.
ForestModel fit_random_forest(const Matrix& X, const std::vector<int>& y,
                              const ForestParams& params);

// Variance-split trees with mean leaves; predict averages leaf means.
ForestModel fit_regression_forest(const Matrix& X, const std::vector<double>& y,
                                  const ForestParams& params);

// k-class Gini trees; predict_class takes the majority vote over trees
// (ties to the lowest class index).
ForestModel fit_multiclass_forest(const Matrix& X, const std::vector<int>& y, int n_classes,
                                  const ForestParams& params);

std::vector<double> predict_proba(const ForestModel& model, const Matrix& X);
std::vector<double> predict_mean(const ForestModel& model, const Matrix& X);
std::vector<int> predict_class(const ForestModel& model, const Matrix& X);

}  // namespace tabstack::learners
