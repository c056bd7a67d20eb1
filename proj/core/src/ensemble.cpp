#include "tabstack/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "tabstack/data.hpp"
#include "tabstack/errors.hpp"
#include "tabstack/eval.hpp"
#include "tabstack/models.hpp"
#include "tabstack/parallel.hpp"
#include "tabstack/rng.hpp"

namespace tabstack::ensemble {

BaseParams default_base_params() {
  BaseParams p;
  p.forest.n_trees = 120;
  p.forest.max_depth = 12;
  p.forest.feature_fraction = 0.35;
  p.forest.min_samples_leaf = 4;
  p.gbt_levelwise.n_rounds = 300;
  p.gbt_levelwise.max_depth = 4;
  p.gbt_levelwise.learning_rate = 0.07;
  p.gbt_levelwise.l2_lambda = 3.0;
  p.gbt_levelwise.min_child_weight = 2.0;
  p.gbt_leafwise.n_rounds = 300;
  p.gbt_leafwise.max_leaves = 16;
  p.gbt_leafwise.max_depth = 10;  // depth cap while growing leafwise
  p.gbt_leafwise.learning_rate = 0.07;
  p.gbt_leafwise.l2_lambda = 3.0;
  p.gbt_leafwise.min_child_weight = 2.0;
  p.gbt_oblivious.n_rounds = 300;
  p.gbt_oblivious.max_depth = 5;
  p.gbt_oblivious.learning_rate = 0.07;
  p.gbt_oblivious.l2_lambda = 3.0;
  p.gbt_oblivious.min_child_weight = 2.0;
  return p;
}

namespace {

// Fit base model m (0..3) on (x_train, y_train) and score x_out.
std::vector<double> fit_and_predict_one(int m, const BaseParams& params, const Matrix& x_train,
                                        const std::vector<int>& y_train, const Matrix& x_out,
                                        std::uint64_t seed) {
  switch (m) {
    case 0: {
      auto p = params.forest;
      p.seed = seed;
      return learners::predict_proba(learners::fit_random_forest(x_train, y_train, p), x_out);
    }
    case 1: {
      auto p = params.gbt_levelwise;
      p.seed = seed;
      return learners::predict_proba(
          learners::fit_gbt(x_train, y_train, learners::GbtVariant::levelwise, p), x_out);
    }
    case 2: {
      auto p = params.gbt_leafwise;
      p.seed = seed;
      return learners::predict_proba(
          learners::fit_gbt(x_train, y_train, learners::GbtVariant::leafwise, p), x_out);
    }
    default: {
      auto p = params.gbt_oblivious;
      p.seed = seed;
      return learners::predict_proba(
          learners::fit_gbt(x_train, y_train, learners::GbtVariant::oblivious, p), x_out);
    }
  }
}

}  // namespace

Matrix oof_base_probabilities(const Matrix& X, const std::vector<int>& y,
                              const BaseParams& params, int k_oof, std::uint64_t seed) {
  require(X.rows() == y.size(), Errc::length_mismatch, "X and y differ in length");
  require(X.rows() >= 10 * static_cast<std::size_t>(k_oof), Errc::too_few_rows,
          "need at least 10*k rows for out-of-fold stacking");
  const auto fold_of = data::stratified_folds(y, k_oof, derive_seed(seed, 0xf01d5ULL));

  Matrix oof(X.rows(), kNumBaseModels);
  const std::size_t n_tasks = static_cast<std::size_t>(k_oof) * kNumBaseModels;
  parallel_for(n_tasks, [&](std::size_t task) {
    const int fold = static_cast<int>(task) / kNumBaseModels;
    const int m = static_cast<int>(task) % kNumBaseModels;
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      (fold_of[i] == fold ? val_idx : train_idx).push_back(i);
    const Matrix x_train = take_rows(X, train_idx);
    const auto y_train = take(y, std::span<const std::size_t>(train_idx));
    const Matrix x_val = take_rows(X, val_idx);
    const auto preds = fit_and_predict_one(
        m, params, x_train, y_train, x_val,
        derive_seed(seed, static_cast<std::uint64_t>(fold) * kNumBaseModels +
                              static_cast<std::uint64_t>(m)));
    for (std::size_t i = 0; i < val_idx.size(); ++i)
      oof(val_idx[i], static_cast<std::size_t>(m)) = preds[i];
  });
  return oof;
}

std::vector<double> soft_vote(const Matrix& base_probs) {
  std::vector<double> out(base_probs.rows());
  const double inv = 1.0 / static_cast<double>(base_probs.cols());
  for (std::size_t r = 0; r < base_probs.rows(); ++r) {
    double sum = 0;
    for (std::size_t c = 0; c < base_probs.cols(); ++c) sum += base_probs(r, c);
    out[r] = sum * inv;
  }
  return out;
}

StackedModel fit_stacking(const Matrix& X, const std::vector<int>& y, const BaseParams& params,
                          int k_oof, std::uint64_t seed, int meta_input_arity) {
  require(meta_input_arity == 1 || meta_input_arity == kNumBaseModels, Errc::invalid_config,
          "meta_input_arity must be 1 (averaged) or 4 (all base outputs)");

  StackedModel model;
  model.params = params;
  model.k_oof = k_oof;
  model.oof_seed = seed;
  model.meta_input_arity = meta_input_arity;
  model.n_features = X.cols();

  // (1)-(2) out-of-fold base outputs, soft vote
  const Matrix oof = oof_base_probabilities(X, y, params, k_oof, seed);

  // (3) GNB meta on the averaged probability (or all four, when configured)
  Matrix meta_input;
  if (meta_input_arity == 1) {
    const auto averaged = soft_vote(oof);
    meta_input = Matrix(averaged.size(), 1);
    for (std::size_t i = 0; i < averaged.size(); ++i) meta_input(i, 0) = averaged[i];
  } else {
    meta_input = oof;
  }
  model.meta = learners::fit_gnb(meta_input, y);

  // (4) refit the base layer on the full training set
  parallel_for(kNumBaseModels, [&](std::size_t m) {
    const std::uint64_t refit_seed =
        derive_seed(seed, static_cast<std::uint64_t>(k_oof) * kNumBaseModels + m);
    switch (m) {
      case 0: {
        auto p = params.forest;
        p.seed = refit_seed;
        model.forest = learners::fit_random_forest(X, y, p);
        break;
      }
      case 1: {
        auto p = params.gbt_levelwise;
        p.seed = refit_seed;
        model.gbt_levelwise = learners::fit_gbt(X, y, learners::GbtVariant::levelwise, p);
        break;
      }
      case 2: {
        auto p = params.gbt_leafwise;
        p.seed = refit_seed;
        model.gbt_leafwise = learners::fit_gbt(X, y, learners::GbtVariant::leafwise, p);
        break;
      }
      default: {
        auto p = params.gbt_oblivious;
        p.seed = refit_seed;
        model.gbt_oblivious = learners::fit_gbt(X, y, learners::GbtVariant::oblivious, p);
        break;
      }
    }
  });
  return model;
}

Matrix predict_base(const StackedModel& model, const Matrix& X) {
  require(X.cols() == model.n_features, Errc::dimension_mismatch,
          "feature count does not match the fitted ensemble");
  Matrix base(X.rows(), kNumBaseModels);
  const auto fill = [&](std::size_t m, const std::vector<double>& preds) {
    for (std::size_t r = 0; r < preds.size(); ++r) base(r, m) = preds[r];
  };
  fill(0, learners::predict_proba(model.forest, X));
  fill(1, learners::predict_proba(model.gbt_levelwise, X));
  fill(2, learners::predict_proba(model.gbt_leafwise, X));
  fill(3, learners::predict_proba(model.gbt_oblivious, X));
  return base;
}

std::vector<double> predict_stacking(const StackedModel& model, const Matrix& X) {
  const Matrix base = predict_base(model, X);
  Matrix meta_input;
  if (model.meta_input_arity == 1) {
    const auto averaged = soft_vote(base);
    meta_input = Matrix(averaged.size(), 1);
    for (std::size_t i = 0; i < averaged.size(); ++i) meta_input(i, 0) = averaged[i];
  } else {
    meta_input = base;
  }
  return learners::predict_proba(model.meta, meta_input);
}

std::vector<int> classify(const std::vector<double>& probabilities, double threshold) {
  std::vector<int> out(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i)
    out[i] = probabilities[i] >= threshold ? 1 : 0;
  return out;
}

// Hyperparameter search ------------------------------------------------------

namespace {

double sample_dist(const ParamDist& dist, Rng& rng) {
  switch (dist.type) {
    case ParamDist::Type::int_range: {
      if (dist.log_scale) {
        const double v = std::exp(rng.uniform(std::log(dist.lo), std::log(dist.hi)));
        return std::clamp(std::round(v), dist.lo, dist.hi);
      }
      return static_cast<double>(
          rng.uniform_int(static_cast<std::int64_t>(dist.lo), static_cast<std::int64_t>(dist.hi)));
    }
    case ParamDist::Type::real_range:
      if (dist.log_scale) return std::exp(rng.uniform(std::log(dist.lo), std::log(dist.hi)));
      return rng.uniform(dist.lo, dist.hi);
    case ParamDist::Type::choice:
      return dist.choices[rng.below(dist.choices.size())];
  }
  return 0.0;
}

}  // namespace

SearchResult random_search(models::ModelKind kind, const SearchSpace& space, const Matrix& X,
                           const std::vector<int>& y) {
  require(space.n_iter >= 1, Errc::invalid_config, "random_search needs n_iter >= 1");

  // Sample all candidates up front from one stream (deterministic sequence).
  Rng rng(derive_seed(space.seed, 0x5ea7c4ULL));
  std::vector<models::ParamMap> candidates(static_cast<std::size_t>(space.n_iter));
  for (auto& params : candidates)
    for (const auto& [name, dist] : space.dists) params[name] = sample_dist(dist, rng);

  const auto fold_of = data::stratified_folds(y, space.k_folds, derive_seed(space.seed, 1));

  SearchResult out;
  out.trials.resize(candidates.size());
  const auto k = static_cast<std::size_t>(space.k_folds);
  std::vector<double> fold_auc(candidates.size() * k, 0.0);
  parallel_for(candidates.size() * k, [&](std::size_t task) {
    const std::size_t cand = task / k;
    const int fold = static_cast<int>(task % k);
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      (fold_of[i] == fold ? val_idx : train_idx).push_back(i);
    const Matrix x_train = take_rows(X, train_idx);
    const auto y_train = take(y, std::span<const std::size_t>(train_idx));
    const Matrix x_val = take_rows(X, val_idx);
    const auto y_val = take(y, std::span<const std::size_t>(val_idx));
    const auto model = models::fit_model({kind, candidates[cand]}, x_train, y_train,
                                         derive_seed(space.seed, task + 7000));
    fold_auc[task] = eval::auc(models::predict_proba(model, x_val), y_val);
  });
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    out.trials[c].params = candidates[c];
    double sum = 0;
    for (std::size_t f = 0; f < k; ++f) sum += fold_auc[c * k + f];
    out.trials[c].mean_auc = sum / static_cast<double>(k);
  }

  std::size_t best = 0;
  for (std::size_t c = 1; c < out.trials.size(); ++c)
    if (out.trials[c].mean_auc > out.trials[best].mean_auc) best = c;
  out.best_params = out.trials[best].params;
  out.best_auc = out.trials[best].mean_auc;
  return out;
}

SearchSpace default_search_space(models::ModelKind kind) {
  using models::ModelKind;
  SearchSpace space;
  switch (kind) {
    case ModelKind::forest:
      space.dists["n_trees"] = ParamDist::ints(60, 200, true);
      space.dists["max_depth"] = ParamDist::ints(6, 16);
      space.dists["min_samples_leaf"] = ParamDist::ints(1, 20, true);
      space.dists["feature_fraction"] = ParamDist::pick({0.2, 0.3, 0.5, 0.7, 1.0});
      break;
    case ModelKind::gbt_levelwise:
    case ModelKind::gbt_oblivious:
      space.dists["n_rounds"] = ParamDist::ints(50, 300, true);
      space.dists["learning_rate"] = ParamDist::reals(0.02, 0.3, true);
      space.dists["max_depth"] = ParamDist::ints(2, 6);
      space.dists["l2_lambda"] = ParamDist::reals(1e-2, 10.0, true);
      space.dists["min_child_weight"] = ParamDist::reals(0.5, 30.0, true);
      break;
    case ModelKind::gbt_leafwise:
      space.dists["n_rounds"] = ParamDist::ints(50, 300, true);
      space.dists["learning_rate"] = ParamDist::reals(0.02, 0.3, true);
      space.dists["max_leaves"] = ParamDist::ints(8, 64, true);
      space.dists["l2_lambda"] = ParamDist::reals(1e-2, 10.0, true);
      space.dists["min_child_weight"] = ParamDist::reals(0.5, 30.0, true);
      break;
    case ModelKind::logistic:
      space.dists["l2_lambda"] = ParamDist::reals(1e-4, 10.0, true);
      break;
    case ModelKind::stacking:
      fail(Errc::invalid_config,
           "search the base models individually, then stack the winners");
  }
  return space;
}

}  // namespace tabstack::ensemble
