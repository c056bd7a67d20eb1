#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tabstack/forest.hpp"
#include "tabstack/gbt.hpp"
#include "tabstack/gnb.hpp"
#include "tabstack/matrix.hpp"
#include "tabstack/model_spec.hpp"

namespace tabstack::ensemble {

struct BaseParams {
  learners::ForestParams forest;
  learners::GbtParams gbt_levelwise;
  learners::GbtParams gbt_leafwise;
  learners::GbtParams gbt_oblivious;
};

// Tuned-by-hand defaults used when no hyperparameter search is requested.
BaseParams default_base_params();

// Base layer (4 tree models) -> soft-voting average -> Gaussian Naive Bayes
// meta-learner trained on out-of-fold base outputs.
struct StackedModel {
  BaseParams params;
  learners::ForestModel forest;
  learners::GbtModel gbt_levelwise;
  learners::GbtModel gbt_leafwise;
  learners::GbtModel gbt_oblivious;
  learners::GnbModel meta;
  int k_oof = 5;
  std::uint64_t oof_seed = 0;
  int meta_input_arity = 1;  // 1 = averaged probability (default); 4 = all base outputs
  std::size_t n_features = 0;
};

inline constexpr int kNumBaseModels = 4;
inline const char* base_model_names[kNumBaseModels] = {"forest", "gbt-levelwise",
                                                       "gbt-leafwise", "gbt-oblivious"};

// n x 4 matrix of out-of-fold positive-class probabilities: fold f's rows are
// predicted by base models fitted on the other folds, so row i's value never
// depends on y[i].
Matrix oof_base_probabilities(const Matrix& X, const std::vector<int>& y,
                              const BaseParams& params, int k_oof, std::uint64_t seed);

StackedModel fit_stacking(const Matrix& X, const std::vector<int>& y, const BaseParams& params,
                          int k_oof = 5, std::uint64_t seed = 0, int meta_input_arity = 1);

// n x 4 base probabilities from the refit base models.
Matrix predict_base(const StackedModel& model, const Matrix& X);

// Soft vote: per-row mean across base models.
std::vector<double> soft_vote(const Matrix& base_probs);

std::vector<double> predict_stacking(const StackedModel& model, const Matrix& X);

// prolonged iff probability >= threshold
std::vector<int> classify(const std::vector<double>& probabilities, double threshold = 0.500);

// Hyperparameter search ------------------------------------------------------

struct ParamDist {
  enum class Type { int_range, real_range, choice };
  Type type = Type::real_range;
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;
  std::vector<double> choices;

  static ParamDist ints(double lo, double hi, bool log_scale = false) {
    return {Type::int_range, lo, hi, log_scale, {}};
  }
  static ParamDist reals(double lo, double hi, bool log_scale = false) {
    return {Type::real_range, lo, hi, log_scale, {}};
  }
  static ParamDist pick(std::vector<double> choices) {
    return {Type::choice, 0, 0, false, std::move(choices)};
  }
};

struct SearchSpace {
  std::map<std::string, ParamDist> dists;
  int n_iter = 30;
  int k_folds = 5;
  std::uint64_t seed = 0;
};

struct SearchTrial {
  models::ParamMap params;
  double mean_auc = 0.0;
};

struct SearchResult {
  models::ParamMap best_params;
  double best_auc = 0.0;
  std::vector<SearchTrial> trials;
};

// n_iter seeded samples; per candidate the mean validation AUC over k
// stratified folds; argmax with ties to the first sampled.
SearchResult random_search(models::ModelKind kind, const SearchSpace& space, const Matrix& X,
                           const std::vector<int>& y);

SearchSpace default_search_space(models::ModelKind kind);

}  // namespace tabstack::ensemble
