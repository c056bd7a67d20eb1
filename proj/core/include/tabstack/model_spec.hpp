#pragma once

#include <map>
#include <string>

namespace tabstack::models {

enum class ModelKind {
  logistic,
  forest,
  gbt_levelwise,
  gbt_leafwise,
  gbt_oblivious,
  stacking,
};

const char* model_kind_name(ModelKind k);
ModelKind parse_model_kind(const std::string& s);

// Flat hyperparameter assignment; stacking uses prefixed keys
// ("forest.n_trees", "gbt_leafwise.max_leaves", "k_oof", ...).
using ParamMap = std::map<std::string, double>;

struct ModelSpec {
  ModelKind kind = ModelKind::logistic;
  ParamMap params;
};

}  // namespace tabstack::models
