#include "tabstack/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabstack/errors.hpp"
#include "tabstack/parallel.hpp"

namespace tabstack::learners {

const char* gbt_variant_name(GbtVariant v) {
  switch (v) {
    case GbtVariant::levelwise: return "levelwise";
    case GbtVariant::leafwise: return "leafwise";
    case GbtVariant::oblivious: return "oblivious";
  }
  return "?";
}

GbtVariant parse_gbt_variant(const std::string& s) {
  if (s == "levelwise") return GbtVariant::levelwise;
  if (s == "leafwise") return GbtVariant::leafwise;
  if (s == "oblivious") return GbtVariant::oblivious;
  fail(Errc::invalid_config, "unknown gbt variant: " + s);
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Equal-frequency candidate edges; deduplicated midpoints between adjacent
// distinct values.
std::vector<double> equal_frequency_edges(std::vector<double> values, int n_bins) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::vector<double> edges;
  for (int b = 1; b < n_bins; ++b) {
    const std::size_t pos = static_cast<std::size_t>(
        static_cast<double>(b) * static_cast<double>(n) / static_cast<double>(n_bins));
    if (pos == 0 || pos >= n) continue;
    if (values[pos - 1] == values[pos]) continue;
    const double edge = values[pos - 1] + (values[pos] - values[pos - 1]) / 2.0;
    if (edges.empty() || edge > edges.back()) edges.push_back(edge);
  }
  return edges;
}

struct BinnedData {
  std::vector<std::vector<double>> edges;  // per feature
  std::vector<std::uint8_t> bins;          // row-major n x f
  std::size_t n = 0, f = 0;

  std::uint8_t bin(std::size_t row, std::size_t feature) const {
    return bins[row * f + feature];
  }
};

BinnedData bin_features(const Matrix& X, int n_bins) {
  BinnedData out;
  out.n = X.rows();
  out.f = X.cols();
  out.edges.resize(out.f);
  out.bins.resize(out.n * out.f);
  for (std::size_t j = 0; j < out.f; ++j)
    out.edges[j] = equal_frequency_edges(X.column(j), n_bins);
  for (std::size_t r = 0; r < out.n; ++r)
    for (std::size_t j = 0; j < out.f; ++j) {
      const auto& e = out.edges[j];
      const auto it = std::lower_bound(e.begin(), e.end(), X(r, j));
      out.bins[r * out.f + j] = static_cast<std::uint8_t>(it - e.begin());
    }
  return out;
}

struct SplitGain {
  bool found = false;
  std::size_t feature = 0;
  int bin = 0;  // go left when bin(x) <= bin, i.e. x <= edges[bin]
  double gain = 0.0;
};

double leaf_objective(double g, double h, double lambda) { return g * g / (h + lambda); }

// Shared split scan over one node's histogram for one feature.
void scan_bins(const double* hist_g, const double* hist_h, const double* hist_n,
               std::size_t n_edges, double total_g, double total_h, const GbtParams& p,
               std::size_t feature, SplitGain& best) {
  const double parent = leaf_objective(total_g, total_h, p.l2_lambda);
  double gl = 0, hl = 0, nl = 0;
  double nr_total = 0;
  for (std::size_t b = 0; b < n_edges; ++b) nr_total += hist_n[b];
  nr_total += hist_n[n_edges];
  for (std::size_t b = 0; b < n_edges; ++b) {
    gl += hist_g[b];
    hl += hist_h[b];
    nl += hist_n[b];
    const double gr = total_g - gl;
    const double hr = total_h - hl;
    const double nr = nr_total - nl;
    if (nl < 1 || nr < 1) continue;
    if (hl < p.min_child_weight || hr < p.min_child_weight) continue;
    const double gain = 0.5 * (leaf_objective(gl, hl, p.l2_lambda) +
                               leaf_objective(gr, hr, p.l2_lambda) - parent) -
                        p.gamma;
    if (gain > 0 && (!best.found || gain > best.gain)) {
      best = {true, feature, static_cast<int>(b), gain};
    }
  }
}

struct NodeBuild {
  std::vector<std::uint32_t> rows;
  double g = 0, h = 0;
  std::int32_t tree_index = -1;
  int depth = 0;
  SplitGain best;  // leafwise cache
};

void node_totals(NodeBuild& node, const std::vector<double>& g, const std::vector<double>& h) {
  node.g = node.h = 0;
  for (auto r : node.rows) {
    node.g += g[r];
    node.h += h[r];
  }
}

// Best split for one node: features scanned in parallel, reduced in feature
// order so ties resolve to the lowest feature then lowest bin.
SplitGain best_split(const NodeBuild& node, const BinnedData& data,
                     const std::vector<double>& g, const std::vector<double>& h,
                     const GbtParams& params) {
  const std::size_t f = data.f;
  std::vector<SplitGain> per_feature(f);
  parallel_for(f, [&](std::size_t j) {
    const std::size_t n_edges = data.edges[j].size();
    if (n_edges == 0) return;
    std::vector<double> hg(n_edges + 1, 0.0), hh(n_edges + 1, 0.0), hn(n_edges + 1, 0.0);
    for (auto r : node.rows) {
      const auto b = data.bin(r, j);
      hg[b] += g[r];
      hh[b] += h[r];
      hn[b] += 1.0;
    }
    scan_bins(hg.data(), hh.data(), hn.data(), n_edges, node.g, node.h, params, j,
              per_feature[j]);
  });
  SplitGain best;
  for (std::size_t j = 0; j < f; ++j) {
    if (per_feature[j].found && (!best.found || per_feature[j].gain > best.gain)) {
      best = per_feature[j];
    }
  }
  return best;
}

void split_rows(const NodeBuild& node, const BinnedData& data, const SplitGain& split,
                std::vector<std::uint32_t>& left, std::vector<std::uint32_t>& right) {
  for (auto r : node.rows) {
    if (data.bin(r, split.feature) <= split.bin)
      left.push_back(r);
    else
      right.push_back(r);
  }
}

double leaf_weight(double g, double h, double lambda) { return -g / (h + lambda); }

Tree grow_levelwise(const BinnedData& data, const std::vector<double>& g,
                    const std::vector<double>& h, const GbtParams& params) {
  Tree tree;
  std::vector<NodeBuild> level;
  NodeBuild root;
  root.rows.resize(data.n);
  std::iota(root.rows.begin(), root.rows.end(), 0);
  node_totals(root, g, h);
  tree.nodes.push_back({});
  tree.nodes[0].n_samples = data.n;
  root.tree_index = 0;
  level.push_back(std::move(root));

  for (int depth = 0; depth < params.max_depth && !level.empty(); ++depth) {
    std::vector<NodeBuild> next;
    for (auto& node : level) {
      const SplitGain split = best_split(node, data, g, h, params);
      if (!split.found) {
        tree.nodes[node.tree_index].leaf_value = leaf_weight(node.g, node.h, params.l2_lambda);
        continue;
      }
      NodeBuild left, right;
      split_rows(node, data, split, left.rows, right.rows);
      node_totals(left, g, h);
      node_totals(right, g, h);
      auto& tnode = tree.nodes[node.tree_index];
      tnode.feature = static_cast<std::int32_t>(split.feature);
      tnode.threshold = data.edges[split.feature][split.bin];
      tnode.left = static_cast<std::int32_t>(tree.nodes.size());
      tnode.right = tnode.left + 1;
      tree.nodes.push_back({});
      tree.nodes.back().n_samples = left.rows.size();
      tree.nodes.push_back({});
      tree.nodes.back().n_samples = right.rows.size();
      left.tree_index = tree.nodes[node.tree_index].left;
      right.tree_index = tree.nodes[node.tree_index].right;
      next.push_back(std::move(left));
      next.push_back(std::move(right));
    }
    level = std::move(next);
  }
  for (auto& node : level)
    tree.nodes[node.tree_index].leaf_value = leaf_weight(node.g, node.h, params.l2_lambda);
  return tree;
}

Tree grow_leafwise(const BinnedData& data, const std::vector<double>& g,
                   const std::vector<double>& h, const GbtParams& params) {
  Tree tree;
  std::vector<NodeBuild> leaves;
  NodeBuild root;
  root.rows.resize(data.n);
  std::iota(root.rows.begin(), root.rows.end(), 0);
  node_totals(root, g, h);
  root.best = best_split(root, data, g, h, params);
  tree.nodes.push_back({});
  tree.nodes[0].n_samples = data.n;
  root.tree_index = 0;
  leaves.push_back(std::move(root));

  int n_leaves = 1;
  while (n_leaves < params.max_leaves) {
    // max gain; ties resolve to the earliest-created leaf
    std::size_t pick = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].best.found) continue;
      if (pick == leaves.size() || leaves[i].best.gain > leaves[pick].best.gain) pick = i;
    }
    if (pick == leaves.size()) break;

    NodeBuild node = std::move(leaves[pick]);
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
    NodeBuild left, right;
    split_rows(node, data, node.best, left.rows, right.rows);
    node_totals(left, g, h);
    node_totals(right, g, h);
    auto& tnode = tree.nodes[node.tree_index];
    tnode.feature = static_cast<std::int32_t>(node.best.feature);
    tnode.threshold = data.edges[node.best.feature][node.best.bin];
    tnode.left = static_cast<std::int32_t>(tree.nodes.size());
    tnode.right = tnode.left + 1;
    tree.nodes.push_back({});
    tree.nodes.back().n_samples = left.rows.size();
    tree.nodes.push_back({});
    tree.nodes.back().n_samples = right.rows.size();
    left.tree_index = tree.nodes[node.tree_index].left;
    right.tree_index = tnode.right;
    left.best = best_split(left, data, g, h, params);
    right.best = best_split(right, data, g, h, params);
    leaves.push_back(std::move(left));
    leaves.push_back(std::move(right));
    ++n_leaves;
  }
  for (auto& node : leaves)
    tree.nodes[node.tree_index].leaf_value = leaf_weight(node.g, node.h, params.l2_lambda);
  return tree;
}

// One (feature, bin) shared by every node of a level; empty children carry
// weight 0.
Tree grow_oblivious(const BinnedData& data, const std::vector<double>& g,
                    const std::vector<double>& h, const GbtParams& params) {
  Tree tree;
  std::vector<NodeBuild> level;
  NodeBuild root;
  root.rows.resize(data.n);
  std::iota(root.rows.begin(), root.rows.end(), 0);
  node_totals(root, g, h);
  tree.nodes.push_back({});
  tree.nodes[0].n_samples = data.n;
  root.tree_index = 0;
  level.push_back(std::move(root));

  for (int depth = 0; depth < params.max_depth; ++depth) {
    // total gain per (feature, bin) summed over nodes; a node contributes 0
    // when the split is invalid for it
    const std::size_t f = data.f;
    std::vector<SplitGain> per_feature(f);
    parallel_for(f, [&](std::size_t j) {
      const std::size_t n_edges = data.edges[j].size();
      if (n_edges == 0) return;
      std::vector<double> totals(n_edges, 0.0);
      std::vector<double> hg(n_edges + 1), hh(n_edges + 1), hn(n_edges + 1);
      for (const auto& node : level) {
        std::fill(hg.begin(), hg.end(), 0.0);
        std::fill(hh.begin(), hh.end(), 0.0);
        std::fill(hn.begin(), hn.end(), 0.0);
        for (auto r : node.rows) {
          const auto b = data.bin(r, j);
          hg[b] += g[r];
          hh[b] += h[r];
          hn[b] += 1.0;
        }
        const double parent = leaf_objective(node.g, node.h, params.l2_lambda);
        double gl = 0, hl = 0, nl = 0;
        for (std::size_t b = 0; b < n_edges; ++b) {
          gl += hg[b];
          hl += hh[b];
          nl += hn[b];
          const double nr = static_cast<double>(node.rows.size()) - nl;
          if (nl < 1 || nr < 1) continue;
          if (hl < params.min_child_weight || node.h - hl < params.min_child_weight) continue;
          const double gain = 0.5 * (leaf_objective(gl, hl, params.l2_lambda) +
                                     leaf_objective(node.g - gl, node.h - hl, params.l2_lambda) -
                                     parent) -
                              params.gamma;
          if (gain > 0) totals[b] += gain;
        }
      }
      for (std::size_t b = 0; b < n_edges; ++b) {
        if (totals[b] > 0 && (!per_feature[j].found || totals[b] > per_feature[j].gain)) {
          per_feature[j] = {true, j, static_cast<int>(b), totals[b]};
        }
      }
    });
    SplitGain best;
    for (std::size_t j = 0; j < f; ++j) {
      if (per_feature[j].found && (!best.found || per_feature[j].gain > best.gain)) {
        best = per_feature[j];
      }
    }
    if (!best.found) break;

    std::vector<NodeBuild> next;
    next.reserve(level.size() * 2);
    for (auto& node : level) {
      NodeBuild left, right;
      split_rows(node, data, best, left.rows, right.rows);
      node_totals(left, g, h);
      node_totals(right, g, h);
      auto& tnode = tree.nodes[node.tree_index];
      tnode.feature = static_cast<std::int32_t>(best.feature);
      tnode.threshold = data.edges[best.feature][best.bin];
      tnode.left = static_cast<std::int32_t>(tree.nodes.size());
      tnode.right = tnode.left + 1;
      tree.nodes.push_back({});
      tree.nodes.back().n_samples = left.rows.size();
      tree.nodes.push_back({});
      tree.nodes.back().n_samples = right.rows.size();
      left.tree_index = tree.nodes[node.tree_index].left;
      right.tree_index = tree.nodes[node.tree_index].right;
      next.push_back(std::move(left));
      next.push_back(std::move(right));
    }
    level = std::move(next);
  }
  for (auto& node : level)
    tree.nodes[node.tree_index].leaf_value = leaf_weight(node.g, node.h, params.l2_lambda);
  return tree;
}

}  // namespace

GbtModel fit_gbt(const Matrix& X, const std::vector<int>& y, GbtVariant variant,
                 const GbtParams& params) {
  require(X.rows() == y.size(), Errc::length_mismatch, "X and y differ in length");
  require(X.rows() > 0, Errc::empty_input, "cannot fit on zero rows");
  require(params.n_bins >= 2 && params.n_bins <= 256, Errc::invalid_config,
          "n_bins must be in [2, 256]");
  std::size_t positives = 0;
  for (int v : y) positives += v != 0;
  require(positives != 0 && positives != y.size(), Errc::single_class,
          "training labels contain a single class");

  GbtModel model;
  model.variant = variant;
  model.params = params;
  model.n_features = X.cols();

  const std::size_t n = X.rows();
  const double p0 = static_cast<double>(positives) / static_cast<double>(n);
  model.base_score = std::log(p0 / (1.0 - p0));

  const BinnedData data = bin_features(X, params.n_bins);
  model.bin_edges = data.edges;

  std::vector<double> margin(n, model.base_score);
  std::vector<double> g(n), h(n);

  const auto log_loss = [&]() {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      total -= y[i] ? std::log(std::max(p, 1e-15)) : std::log(std::max(1.0 - p, 1e-15));
    }
    return total / static_cast<double>(n);
  };
  model.train_log_loss.push_back(log_loss());

  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      g[i] = p - static_cast<double>(y[i]);
      h[i] = p * (1.0 - p);
      if (!std::isfinite(g[i]) || !std::isfinite(h[i]))
        fail(Errc::non_finite_gradient,
             "non-finite gradient at round " + std::to_string(round) + ", row " +
                 std::to_string(i) + " (margin=" + std::to_string(margin[i]) + ")");
    }
    Tree tree;
    switch (variant) {
      case GbtVariant::levelwise: tree = grow_levelwise(data, g, h, params); break;
      case GbtVariant::leafwise: tree = grow_leafwise(data, g, h, params); break;
      case GbtVariant::oblivious: tree = grow_oblivious(data, g, h, params); break;
    }
    for (std::size_t i = 0; i < n; ++i)
      margin[i] += params.learning_rate * tree.predict_row(X.row_ptr(i));
    model.trees.push_back(std::move(tree));
    model.train_log_loss.push_back(log_loss());
  }
  return model;
}

std::vector<double> predict_margin(const GbtModel& model, const Matrix& X) {
  require(X.cols() == model.n_features, Errc::dimension_mismatch,
          "feature count does not match the fitted booster");
  std::vector<double> out(X.rows(), 0.0);
  for (const auto& tree : model.trees)
    for (std::size_t r = 0; r < X.rows(); ++r) out[r] += tree.predict_row(X.row_ptr(r));
  for (auto& v : out) v = model.base_score + model.params.learning_rate * v;
  return out;
}

std::vector<double> predict_proba(const GbtModel& model, const Matrix& X) {
  auto out = predict_margin(model, X);
  for (auto& v : out) v = sigmoid(v);
  return out;
}

}  // namespace tabstack::learners
