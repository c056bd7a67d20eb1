#include "tabstack/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabstack/errors.hpp"
#include "tabstack/rng.hpp"

namespace tabstack::learners {

int Tree::depth() const {
  if (nodes.empty()) return 0;
  // nodes are stored in construction order; walk via indices
  std::vector<int> depth_of(nodes.size(), 0);
  int max_d = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.feature < 0) continue;
    depth_of[n.left] = depth_of[i] + 1;
    depth_of[n.right] = depth_of[i] + 1;
    max_d = std::max(max_d, depth_of[i] + 1);
  }
  return max_d;
}

namespace detail {

std::vector<std::vector<std::uint32_t>> sort_rows_by_feature(
    const Matrix& X, const std::vector<std::uint32_t>& rows) {
  std::vector<std::vector<std::uint32_t>> sorted(X.cols());
  for (std::size_t f = 0; f < X.cols(); ++f) {
    sorted[f] = rows;
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&, f](std::uint32_t a, std::uint32_t b) { return X(a, f) < X(b, f); });
  }
  return sorted;
}

namespace {

struct Builder {
  const Matrix& X;
  TreeTask task;
  const int* y_class;
  const double* y_real;
  int n_classes;
  TreeParams params;
  std::vector<std::vector<std::uint32_t>> sorted;  // [feature][pos] -> row
  std::vector<std::uint32_t> scratch;
  Tree tree;
  std::uint64_t node_counter = 0;

  // Node class counts (classification) or moments (regression) for the slice.
  struct Stats {
    std::vector<double> counts;  // per class
    double sum = 0, sum_sq = 0, n = 0;
  };

  Stats slice_stats(std::size_t begin, std::size_t end) const {
    Stats s;
    s.n = static_cast<double>(end - begin);
    if (task == TreeTask::regression) {
      for (std::size_t i = begin; i < end; ++i) {
        const double v = y_real[sorted[0][i]];
        s.sum += v;
        s.sum_sq += v * v;
      }
    } else {
      s.counts.assign(static_cast<std::size_t>(n_classes), 0.0);
      for (std::size_t i = begin; i < end; ++i) s.counts[y_class[sorted[0][i]]] += 1.0;
    }
    return s;
  }

  static double gini_score(const std::vector<double>& counts, double n) {
    // n * gini = n - sum c^2 / n; lower is better
    if (n <= 0) return 0.0;
    double sq = 0;
    for (double c : counts) sq += c * c;
    return n - sq / n;
  }

  static double mse_score(double sum, double sum_sq, double n) {
    if (n <= 0) return 0.0;
    return sum_sq - sum * sum / n;
  }

  double node_score(const Stats& s) const {
    return task == TreeTask::regression ? mse_score(s.sum, s.sum_sq, s.n)
                                        : gini_score(s.counts, s.n);
  }

  double leaf_value(const Stats& s) const {
    switch (task) {
      case TreeTask::binary:
        return s.counts[1] / s.n;
      case TreeTask::multiclass: {
        std::size_t best = 0;
        for (std::size_t c = 1; c < s.counts.size(); ++c)
          if (s.counts[c] > s.counts[best]) best = c;
        return static_cast<double>(best);
      }
      case TreeTask::regression:
        return s.sum / s.n;
    }
    return 0.0;
  }

  bool is_pure(const Stats& s, std::size_t begin, std::size_t end) const {
    if (task == TreeTask::regression) {
      const double first = y_real[sorted[0][begin]];
      for (std::size_t i = begin + 1; i < end; ++i)
        if (y_real[sorted[0][i]] != first) return false;
      return true;
    }
    for (double c : s.counts)
      if (c == s.n) return true;
    return false;
  }

  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0;
    double score = 0;  // summed child score; lower is better
  };

  // Scan one feature's sorted slice for the best boundary.
  void scan_feature(std::size_t f, std::size_t begin, std::size_t end, const Stats& total,
                    Split& best) const {
    const auto& idx = sorted[f];
    const std::size_t n = end - begin;
    const std::size_t msl = params.min_samples_leaf;

    if (task == TreeTask::regression) {
      double lsum = 0, lsq = 0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        const double v = y_real[idx[i]];
        lsum += v;
        lsq += v * v;
        const std::size_t nl = i - begin + 1;
        const double cur = X(idx[i], f);
        const double nxt = X(idx[i + 1], f);
        if (cur == nxt) continue;
        if (nl < msl || n - nl < msl) continue;
        const double score = mse_score(lsum, lsq, static_cast<double>(nl)) +
                             mse_score(total.sum - lsum, total.sum_sq - lsq,
                                       static_cast<double>(n - nl));
        if (!best.found || score < best.score) {
          best = {true, f, cur + (nxt - cur) / 2.0, score};
        }
      }
      return;
    }

    std::vector<double> lcounts(static_cast<std::size_t>(n_classes), 0.0);
    for (std::size_t i = begin; i + 1 < end; ++i) {
      lcounts[y_class[idx[i]]] += 1.0;
      const std::size_t nl = i - begin + 1;
      const double cur = X(idx[i], f);
      const double nxt = X(idx[i + 1], f);
      if (cur == nxt) continue;
      if (nl < msl || n - nl < msl) continue;
      double rsq = 0, lsq = 0;
      for (std::size_t c = 0; c < lcounts.size(); ++c) {
        lsq += lcounts[c] * lcounts[c];
        const double rc = total.counts[c] - lcounts[c];
        rsq += rc * rc;
      }
      const double nl_d = static_cast<double>(nl);
      const double nr_d = static_cast<double>(n - nl);
      const double score = (nl_d - lsq / nl_d) + (nr_d - rsq / nr_d);
      if (!best.found || score < best.score) {
        best = {true, f, cur + (nxt - cur) / 2.0, score};
      }
    }
  }

  std::int32_t grow(std::size_t begin, std::size_t end, int depth) {
    const Stats total = slice_stats(begin, end);
    const std::size_t node_id = tree.nodes.size();
    tree.nodes.push_back({});
    tree.nodes[node_id].n_samples = end - begin;
    const std::uint64_t node_seq = node_counter++;

    const std::size_t n = end - begin;
    const bool can_split = depth < params.max_depth && n >= 2 * params.min_samples_leaf &&
                           !is_pure(total, begin, end);
    Split best;
    if (can_split) {
      const std::size_t n_features = X.cols();
      std::size_t k = static_cast<std::size_t>(
          std::llround(params.feature_fraction * static_cast<double>(n_features)));
      k = std::clamp<std::size_t>(k, 1, n_features);
      std::vector<std::size_t> feats;
      if (k == n_features) {
        feats.resize(n_features);
        std::iota(feats.begin(), feats.end(), 0);
      } else {
        Rng rng(derive_seed(params.seed, node_seq));
        feats = rng.sample_without_replacement(n_features, k);
        std::sort(feats.begin(), feats.end());
      }
      const double parent_score = node_score(total);
      for (std::size_t f : feats) scan_feature(f, begin, end, total, best);
      // Gini/MSE gains are never negative; equal-score splits are allowed so
      // parity patterns (zero first-level gain) can still be separated.
      if (best.found && best.score > parent_score) best.found = false;
    }

    if (!best.found) {
      tree.nodes[node_id].leaf_value = leaf_value(total);
      return static_cast<std::int32_t>(node_id);
    }

    // Stable partition of every feature's slice by the chosen predicate.
    const std::size_t split_f = best.feature;
    const double thr = best.threshold;
    std::size_t n_left = 0;
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      auto& idx = sorted[f];
      std::size_t l = 0, r = 0;
      scratch.resize(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        if (X(idx[i], split_f) <= thr)
          idx[begin + l++] = idx[i];
        else
          scratch[r++] = idx[i];
      }
      for (std::size_t i = 0; i < r; ++i) idx[begin + l + i] = scratch[i];
      n_left = l;
    }

    tree.nodes[node_id].feature = static_cast<std::int32_t>(split_f);
    tree.nodes[node_id].threshold = thr;
    const std::int32_t left = grow(begin, begin + n_left, depth + 1);
    const std::int32_t right = grow(begin + n_left, end, depth + 1);
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = right;
    return static_cast<std::int32_t>(node_id);
  }
};

}  // namespace

Tree build_tree(const Matrix& X, TreeTask task, const int* y_class, const double* y_real,
                int n_classes, std::vector<std::vector<std::uint32_t>> sorted_rows,
                const TreeParams& params) {
  Builder builder{X, task, y_class, y_real, n_classes, params, std::move(sorted_rows), {}, {}, 0};
  require(!builder.sorted.empty() && !builder.sorted[0].empty(), Errc::empty_input,
          "cannot fit a tree on zero rows");
  builder.grow(0, builder.sorted[0].size(), 0);
  return std::move(builder.tree);
}

}  // namespace detail

namespace {

std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

void check_classification_input(const Matrix& X, const std::vector<int>& y, int n_classes) {
  require(X.rows() == y.size(), Errc::length_mismatch, "X and y differ in length");
  require(X.rows() > 0, Errc::empty_input, "cannot fit a tree on zero rows");
  std::vector<bool> seen(static_cast<std::size_t>(n_classes), false);
  for (int v : y) {
    require(v >= 0 && v < n_classes, Errc::invalid_spec, "class label out of range");
    seen[static_cast<std::size_t>(v)] = true;
  }
  std::size_t observed = 0;
  for (bool s : seen) observed += s;
  require(observed >= 2, Errc::single_class, "training labels contain a single class");
}

}  // namespace

Tree fit_tree(const Matrix& X, const std::vector<int>& y, const TreeParams& params) {
  check_classification_input(X, y, 2);
  return detail::build_tree(X, detail::TreeTask::binary, y.data(), nullptr, 2,
                            detail::sort_rows_by_feature(X, all_rows(X.rows())), params);
}

Tree fit_multiclass_tree(const Matrix& X, const std::vector<int>& y, int n_classes,
                         const TreeParams& params) {
  check_classification_input(X, y, n_classes);
  return detail::build_tree(X, detail::TreeTask::multiclass, y.data(), nullptr, n_classes,
                            detail::sort_rows_by_feature(X, all_rows(X.rows())), params);
}

Tree fit_regression_tree(const Matrix& X, const std::vector<double>& y,
                         const TreeParams& params) {
  require(X.rows() == y.size(), Errc::length_mismatch, "X and y differ in length");
  require(X.rows() > 0, Errc::empty_input, "cannot fit a tree on zero rows");
  return detail::build_tree(X, detail::TreeTask::regression, nullptr, y.data(), 0,
                            detail::sort_rows_by_feature(X, all_rows(X.rows())), params);
}

}  // namespace tabstack::learners
