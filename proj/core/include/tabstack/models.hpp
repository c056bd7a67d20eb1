#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tabstack/ensemble.hpp"
#include "tabstack/logistic.hpp"
#include "tabstack/model_spec.hpp"

namespace tabstack::models {

using AnyModel = std::variant<learners::LogisticModel, learners::ForestModel,
                              learners::GbtModel, learners::GnbModel, ensemble::StackedModel>;

// Builds learner params from a flat ParamMap (unknown keys rejected) and
// fits. `seed` feeds every stochastic component unless overridden by a
// "seed" entry.
AnyModel fit_model(const ModelSpec& spec, const Matrix& X, const std::vector<int>& y,
                   std::uint64_t seed);

std::vector<double> predict_proba(const AnyModel& model, const Matrix& X);

std::string model_kind_of(const AnyModel& model);

// Versioned JSON with scalars as decimal strings so round-trips reproduce
// bit-identical predictions.
std::string to_json(const AnyModel& model);
AnyModel model_from_json(const std::string& text);
void save_model(const AnyModel& model, const std::string& path);
AnyModel load_model(const std::string& path);

// ParamMap binders (shared with random_search).
learners::ForestParams forest_params_from(const ParamMap& params, std::uint64_t seed);
learners::GbtParams gbt_params_from(const ParamMap& params, std::uint64_t seed);
learners::LogisticParams logistic_params_from(const ParamMap& params);
ensemble::BaseParams base_params_from(const ParamMap& params, std::uint64_t seed);

}  // namespace tabstack::models
