#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tabstack/data.hpp"

namespace tabstack::featsel {

struct DropRecord {
  std::string feature;
  std::string reason;  // "vif", "spearman", "cramers_v", "point_biserial",
                       // "corr_ratio", "p_value", "degenerate"
  double statistic = 0.0;
  double threshold = 0.0;
};

struct SelectionReport {
  std::string method;  // "vif" | "spearman" | "univariate" | "hybrid" | "none"
  std::vector<std::string> kept;
  std::vector<DropRecord> dropped;
  double runtime_seconds = 0.0;  // filled by benchmark_selection
};

struct VariableSet {
  std::string name;
  std::set<data::Domain> domains;
  std::vector<std::string> columns;
};

// The 7 non-empty domain subsets, plus "baseline" when an explicit column
// list is supplied (stands in for literature-derived factors). The outcome
// column is never included.
std::vector<VariableSet> build_variable_sets(
    const data::Table& table, const std::vector<std::string>& baseline_columns = {});

// Iterative elimination: drop the max-VIF feature while any VIF exceeds the
// threshold (ties to the lexicographically first name). Input must be
// drop_first-encoded.
SelectionReport select_vif(const data::EncodedMatrix& encoded, double threshold = 5.0);

// Pairs with |rho| above the threshold, visited in descending |rho|; the
// member with the weaker |point-biserial| against y is dropped. Constant
// features are dropped as degenerate first. Input is full one-hot.
SelectionReport select_spearman(const data::EncodedMatrix& encoded, const std::vector<int>& y,
                                double threshold = 0.7);

// Raw-column filter: chi-square for categorical, Mann-Whitney U for
// continuous; keep iff p < alpha. Degenerate columns land in dropped.
SelectionReport select_univariate(const data::Table& table, const std::vector<int>& y,
                                  double alpha = 0.05);

struct HybridThresholds {
  double spearman = 0.7;
  double cramers_v = 0.6;
  double point_biserial = 0.3;
  double corr_ratio = 0.4;
};

// Stage 1: same-kind pairs (Spearman / Cramer's V), weaker-to-target member
// dropped. Stage 2: surviving mixed pairs drop the continuous member when
// |r_pb| > 0.3 (dichotomous) or eta > 0.4 (polytomous).
SelectionReport select_hybrid(const data::Table& table, const std::vector<int>& y,
                              const HybridThresholds& thresholds = {});

struct BenchmarkRow {
  std::string method;
  double train_seconds = 0.0;
  std::optional<double> time_diff_pct;  // empty for the baseline row ("N.A.")
  std::size_t n_predictors = 0;
  double train_auc = 0.0, train_ci_low = 0.0, train_ci_high = 0.0;
  double test_auc = 0.0, test_ci_low = 0.0, test_ci_high = 0.0;
  SelectionReport report;
};

// Runs each method, then fits one logistic regression per selected subset
// with identical hyperparameters on a fixed split; the timed quantity is
// model training only. Row 0 is the no-selection baseline.
std::vector<BenchmarkRow> benchmark_selection(const data::Table& table,
                                              const std::vector<int>& y,
                                              const std::vector<std::string>& methods,
                                              const data::SplitIndices& split,
                                              double l2_lambda = 1e-4, std::uint64_t seed = 0);

// Report artifacts: CSV rows (feature, status, reason, statistic, threshold)
// and a JSON document with the same content.
void save_report_csv(const SelectionReport& report, const std::string& path);
void save_report_json(const SelectionReport& report, const std::string& path);

}  // namespace tabstack::featsel
