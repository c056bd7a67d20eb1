#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabstack/matrix.hpp"
#include "tabstack/tree.hpp"

namespace tabstack::learners {

enum class GbtVariant { levelwise, leafwise, oblivious };

const char* gbt_variant_name(GbtVariant v);
GbtVariant parse_gbt_variant(const std::string& s);

struct GbtParams {
  int n_rounds = 150;
  double learning_rate = 0.1;
  int max_depth = 3;    // levelwise / oblivious
  int max_leaves = 16;  // leafwise
  double l2_lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  int n_bins = 256;
  std::uint64_t seed = 0;  // reserved for stochastic extensions
};

struct GbtModel {
  GbtVariant variant = GbtVariant::levelwise;
  GbtParams params;
  std::size_t n_features = 0;
  double base_score = 0.0;  // log-odds of training positive rate
  std::vector<Tree> trees;  // leaf_value = raw weight; threshold = bin edge value
  std::vector<std::vector<double>> bin_edges;
  std::vector<double> train_log_loss;  // per round; index 0 = base score only
};

// Logistic loss, second-order histogram splits:
//   gain = 1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - (G_L+G_R)^2/(H_L+H_R+l)] - gamma
// over <=256 equal-frequency bins. levelwise grows every node per depth,
// leafwise splits the max-gain leaf up to max_leaves, oblivious picks one
// (feature, threshold) per level shared by all nodes.
GbtModel fit_gbt(const Matrix& X, const std::vector<int>& y, GbtVariant variant,
                 const GbtParams& params);

// base_score + learning_rate * sum of tree outputs.
std::vector<double> predict_margin(const GbtModel& model, const Matrix& X);
std::vector<double> predict_proba(const GbtModel& model, const Matrix& X);

}  // namespace tabstack::learners
