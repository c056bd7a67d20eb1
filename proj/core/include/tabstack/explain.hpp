#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tabstack/data.hpp"
#include "tabstack/matrix.hpp"

namespace tabstack::explain {

// Batch model evaluation: one probability (or score) per input row.
using PredictFn = std::function<std::vector<double>(const Matrix&)>;

struct ShapValues {
  std::vector<double> phi;
  double base_value = 0.0;  // mean model output over the background set
};

// Exact Shapley attribution with the interventional value function
//   v(S) = mean over background rows b of f(x_S combined with b outside S).
// Enumerates all 2^F subsets; guarded at F <= 15.
ShapValues shap_exact(const PredictFn& predict, std::span<const double> x,
                      const Matrix& background);

// Monte-Carlo estimate over seeded random feature orderings; same value
// function, unbiased for the exact attribution.
ShapValues shap_permutation(const PredictFn& predict, std::span<const double> x,
                            const Matrix& background, std::size_t n_permutations,
                            std::uint64_t seed);

struct ShapMatrix {
  Matrix values;  // explained rows x features
  double base_value = 0.0;
  std::vector<std::string> feature_names;
  std::size_t background_size = 0;
  std::string method;  // "exact" | "permutation"
  std::size_t n_permutations = 0;
};

// Explains each row of X independently (rows run in parallel; per-row seeds
// derive from the master seed). method: "auto" picks exact for <= 15
// features.
ShapMatrix shap_matrix(const PredictFn& predict, const Matrix& X, const Matrix& background,
                       const std::vector<std::string>& feature_names,
                       const std::string& method = "auto", std::size_t n_permutations = 200,
                       std::uint64_t seed = 0);

enum class Direction { prolonged, short_stay, either };
const char* direction_name(Direction d);

struct ShapSummaryRow {
  std::string feature;
  double mean_abs = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  int rank = 0;
  Direction direction = Direction::either;
};

struct ShapSummary {
  std::vector<ShapSummaryRow> rows;  // sorted by rank
};

// Mean |phi| per feature with a percentile bootstrap CI over rows. Direction,
// for binary features: "prolonged" when presence pushes the prediction up
// (mean phi|x=1 > mean phi|x=0 and positive), "short" for the mirror, else
// "either" (and always "either" for continuous features).
ShapSummary shap_summarize(const ShapMatrix& matrix, const Matrix& feature_values,
                           std::size_t n_boot = 1000, std::uint64_t seed = 0);

struct BeeswarmPoint {
  int feature_rank = 0;
  double phi = 0.0;
  double normalized_value = 0.0;  // per-feature min-max over the explained rows
};

std::vector<BeeswarmPoint> beeswarm_points(const ShapMatrix& matrix,
                                           const Matrix& feature_values,
                                           const ShapSummary& summary);

}  // namespace tabstack::explain
