#include "tabstack/forest.hpp"

#include <algorithm>
#include <numeric>

#include "tabstack/errors.hpp"
#include "tabstack/parallel.hpp"
#include "tabstack/rng.hpp"

namespace tabstack::learners {

namespace {

using detail::TreeTask;

// Per-feature row order of the full training set, computed once per fit and
// expanded per tree by bootstrap multiplicity (keeps sorted order without
// re-sorting).
std::vector<std::vector<std::uint32_t>> base_order(const Matrix& X) {
  std::vector<std::uint32_t> rows(X.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return detail::sort_rows_by_feature(X, rows);
}

std::vector<std::vector<std::uint32_t>> expand_order(
    const std::vector<std::vector<std::uint32_t>>& base,
    const std::vector<std::uint32_t>& multiplicity) {
  std::vector<std::vector<std::uint32_t>> out(base.size());
  for (std::size_t f = 0; f < base.size(); ++f) {
    auto& column = out[f];
    for (std::uint32_t row : base[f])
      for (std::uint32_t k = 0; k < multiplicity[row]; ++k) column.push_back(row);
  }
  return out;
}

ForestModel fit_impl(const Matrix& X, TreeTask task, const int* y_class, const double* y_real,
                     int n_classes, const ForestParams& params) {
  require(params.n_trees >= 1, Errc::invalid_config, "forest needs at least one tree");
  require(X.rows() > 0, Errc::empty_input, "cannot fit a forest on zero rows");

  ForestModel model;
  model.params = params;
  model.n_features = X.cols();
  model.task = task;
  model.n_classes = n_classes;
  model.trees.resize(params.n_trees);

  const auto base = base_order(X);
  const std::size_t n = X.rows();

  parallel_for(params.n_trees, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(params.seed, t);
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_samples_leaf = params.min_samples_leaf;
    tp.feature_fraction = params.feature_fraction;
    tp.seed = tree_seed;

    std::vector<std::vector<std::uint32_t>> order;
    if (params.bootstrap) {
      Rng rng(derive_seed(tree_seed, 0x0b007ULL));
      std::vector<std::uint32_t> multiplicity(n, 0);
      for (;;) {
        std::fill(multiplicity.begin(), multiplicity.end(), 0);
        for (std::size_t i = 0; i < n; ++i) ++multiplicity[rng.below(n)];
        if (task == TreeTask::regression) break;
        // classification bootstraps are redrawn until both classes appear
        int first = -1;
        bool mixed = false;
        for (std::size_t r = 0; r < n && !mixed; ++r) {
          if (!multiplicity[r]) continue;
          if (first < 0) first = y_class[r];
          mixed = y_class[r] != first;
        }
        if (mixed) break;
      }
      order = expand_order(base, multiplicity);
    } else {
      order = base;
    }
    model.trees[t] =
        detail::build_tree(X, task, y_class, y_real, n_classes, std::move(order), tp);
  });
  return model;
}

}  // namespace

ForestModel fit_random_forest(const Matrix& X, const std::vector<int>& y,
                              const ForestParams& params) {
  require(X.rows() == y.size(), Errc::length_mismatch, "X and y differ in length");
  bool has0 = false, has1 = false;
  for (int v : y) (v ? has1 : has0) = true;
  require(has0 && has1, Errc::single_class, "training labels contain a single class");
  return fit_impl(X, detail::TreeTask::binary, y.data(), nullptr, 2, params);
}

ForestModel fit_regression_forest(const Matrix& X, const std::vector<double>& y,
                                  const ForestParams& params) {
  require(X.rows() == y.size(), Errc::length_mismatch, "X and y differ in length");
  return fit_impl(X, detail::TreeTask::regression, nullptr, y.data(), 0, params);
}

ForestModel fit_multiclass_forest(const Matrix& X, const std::vector<int>& y, int n_classes,
                                  const ForestParams& params) {
  require(X.rows() == y.size(), Errc::length_mismatch, "X and y differ in length");
  return fit_impl(X, detail::TreeTask::multiclass, y.data(), nullptr, n_classes, params);
}

std::vector<double> predict_proba(const ForestModel& model, const Matrix& X) {
  require(X.cols() == model.n_features, Errc::dimension_mismatch,
          "feature count does not match the fitted forest");
  std::vector<double> out(X.rows(), 0.0);
  for (const auto& tree : model.trees)
    for (std::size_t r = 0; r < X.rows(); ++r) out[r] += tree.predict_row(X.row_ptr(r));
  const double inv = 1.0 / static_cast<double>(model.trees.size());
  for (auto& v : out) v *= inv;
  return out;
}

std::vector<double> predict_mean(const ForestModel& model, const Matrix& X) {
  return predict_proba(model, X);
}

std::vector<int> predict_class(const ForestModel& model, const Matrix& X) {
  require(X.cols() == model.n_features, Errc::dimension_mismatch,
          "feature count does not match the fitted forest");
  std::vector<int> out(X.rows());
  std::vector<std::uint32_t> votes(static_cast<std::size_t>(model.n_classes));
  for (std::size_t r = 0; r < X.rows(); ++r) {
    std::fill(votes.begin(), votes.end(), 0);
    for (const auto& tree : model.trees) {
      const auto c = static_cast<std::size_t>(tree.predict_row(X.row_ptr(r)));
      ++votes[c];
    }
    out[r] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

}  // namespace tabstack::learners
