#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tabstack/data.hpp"

namespace tabstack::prep {

enum class MissingAction { keep, impute_median, impute_mode, impute_forest, drop };
enum class RebalanceAction { keep, drop_dominant, merge_rare };

const char* missing_action_name(MissingAction a);
const char* rebalance_action_name(RebalanceAction a);

struct ColumnPlan {
  MissingAction missing_action = MissingAction::keep;
  double missing_fraction = 0.0;
  RebalanceAction rebalance = RebalanceAction::keep;
  double dominant_fraction = 0.0;
  // realized at apply time: old category -> category it was merged into
  std::map<std::string, std::string> merge_map;
  // a <2% category in a two-category column is left intact and flagged
  bool binary_rare_flag = false;
};

// Mapping is exhaustive: every (missingness, kind) pair lands on exactly one
// action. Boundaries read the inequalities literally: >15% drop, <2% simple,
// 2%-15% inclusive forest.
struct PrepPlan {
  double drop_missing_threshold = 0.15;
  double simple_impute_threshold = 0.02;
  double dominant_threshold = 0.98;
  double rare_threshold = 0.02;
  std::map<std::string, ColumnPlan> columns;
};

// The outcome column is excluded from planning (and is never used as an
// imputation predictor).
PrepPlan plan_prep(const data::Table& table);

struct ForestImputeParams {
  int max_iter = 10;
  std::size_t n_trees = 50;
  int max_depth = 8;
  std::size_t min_samples_leaf = 5;
  double feature_fraction = 0.33;
  std::uint64_t seed = 0;
};

// stat_rows restricts fill statistics (and forest training rows) to the
// given subset, e.g. the training split; empty means whole-table statistics
// (the original workflow imputed before splitting).
data::Table impute_simple(const data::Table& table, const PrepPlan& plan,
                          std::span<const std::size_t> stat_rows = {});

// Iterative forest imputation: initialize with median/mode, revisit columns
// in ascending missingness, refit a forest per column per sweep, stop when
// the sweep-to-sweep change increases for both kinds (keeping the previous
// sweep's values) or at max_iter.
data::Table impute_forest(const data::Table& table, const PrepPlan& plan,
                          const ForestImputeParams& params,
                          std::span<const std::size_t> stat_rows = {});

struct AppliedAction {
  std::string column;
  std::string action;
  std::string detail;
};

struct PrepResult {
  data::Table table;
  PrepPlan plan;
  std::vector<AppliedAction> actions;
};

// plan -> drop high-missing -> simple imputation -> forest imputation ->
// rebalance. Rebalancing cascades: a column whose merge leaves a >=98%
// dominant category (or a single category) is dropped, so replanning the
// output is all-keep.
PrepResult run_prep(const data::Table& table, const ForestImputeParams& params,
                    std::span<const std::size_t> stat_rows = {});

// Range-label union used when merging ordered categories:
// "<50" + "50-99" -> "<99", "100-199" + "200-299" -> "100-299",
// "300-499" + ">500" -> ">300". Non-range labels fall back to the absorbing
// category's own label. A column counts as ordered when every category
// parses under this grammar.
std::string merged_category_label(const std::string& a, const std::string& b);
bool is_range_label(const std::string& label);

}  // namespace tabstack::prep
