#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabstack/data.hpp"
#include "tabstack/eval.hpp"
#include "tabstack/explain.hpp"
#include "tabstack/featsel.hpp"

namespace tabstack::report {

// Composite "0.805 (0.782-0.829)" cell used by the table-shaped CSVs.
std::string auc_cell(double value, double lo, double hi);

struct ModelRow {
  std::string algorithm;
  double train_auc = 0, train_ci_low = 0, train_ci_high = 0;
  double test_auc = 0, test_ci_low = 0, test_ci_high = 0;
  eval::Confusion test_confusion;
};

// Model-comparison table (one row per algorithm).
void save_model_table_csv(const std::vector<ModelRow>& rows, const std::string& path);

// Variable-set comparison table (one row per domain combination).
struct VariableSetRow {
  std::string set_name;
  std::size_t n_columns = 0;
  ModelRow metrics;
};
void save_variable_set_table_csv(const std::vector<VariableSetRow>& rows,
                                 const std::string& path);

// Selection-method comparison table; when `with_timings` is false the timing
// cells render "N.A." so artifacts stay byte-reproducible.
void save_benchmark_table_csv(const std::vector<featsel::BenchmarkRow>& rows,
                              const std::string& path, bool with_timings);

// Attribution summary table: rank, feature, domain, association, mean |SHAP| (CI).
void save_shap_table_csv(const explain::ShapSummary& summary,
                         const std::vector<std::string>& feature_domains,
                         const std::string& path);

void save_metrics_json(const eval::MetricsReport& metrics, const eval::EpvResult& epv,
                       const std::string& model_name, const std::string& path);
void save_comparison_json(const eval::ComparisonResult& result, const std::string& name_a,
                          const std::string& name_b, const std::string& path);
void save_cv_csv(const eval::CvResult& result, const std::string& path);
void save_roc_csv(const std::vector<std::pair<double, double>>& points, const std::string& path);
void save_calibration_csv(const eval::CalibrationCurve& curve, const std::string& path);
void save_shap_matrix_csv(const explain::ShapMatrix& matrix, const std::string& path);
void save_beeswarm_csv(const std::vector<explain::BeeswarmPoint>& points,
                       const std::string& path);

}  // namespace tabstack::report
