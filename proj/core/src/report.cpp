#include "tabstack/report.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tabstack/csv.hpp"
#include "tabstack/errors.hpp"
#include "tabstack/num.hpp"

namespace tabstack::report {

std::string auc_cell(double value, double lo, double hi) {
  return format_fixed(value, 3) + " (" + format_fixed(lo, 3) + "-" + format_fixed(hi, 3) + ")";
}

namespace {

std::vector<std::string> model_row_cells(const ModelRow& row) {
  return {row.algorithm,
          auc_cell(row.train_auc, row.train_ci_low, row.train_ci_high),
          auc_cell(row.test_auc, row.test_ci_low, row.test_ci_high),
          format_fixed(row.test_confusion.accuracy, 3),
          format_fixed(row.test_confusion.sensitivity, 3),
          format_fixed(row.test_confusion.specificity, 3),
          format_fixed(row.test_confusion.weighted_f1, 3)};
}

const std::vector<std::string> kModelHeader = {
    "algorithm",          "train_auc_95ci", "test_auc_95ci", "test_accuracy",
    "test_sensitivity",   "test_specificity", "test_weighted_f1"};

void write_json(const nlohmann::json& j, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write: " + path);
  out << j.dump(1) << "\n";
}

}  // namespace

void save_model_table_csv(const std::vector<ModelRow>& rows, const std::string& path) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : rows) cells.push_back(model_row_cells(row));
  csv::write_file(path, kModelHeader, cells);
}

void save_variable_set_table_csv(const std::vector<VariableSetRow>& rows,
                                 const std::string& path) {
  std::vector<std::string> header = {"variable_set", "n_columns"};
  header.insert(header.end(), kModelHeader.begin() + 1, kModelHeader.end());
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : rows) {
    std::vector<std::string> line = {row.set_name, std::to_string(row.n_columns)};
    const auto metrics = model_row_cells(row.metrics);
    line.insert(line.end(), metrics.begin() + 1, metrics.end());
    cells.push_back(std::move(line));
  }
  csv::write_file(path, header, cells);
}

void save_benchmark_table_csv(const std::vector<featsel::BenchmarkRow>& rows,
                              const std::string& path, bool with_timings) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : rows) {
    std::string time_cell = "N.A.";
    std::string diff_cell = "N.A.";
    if (with_timings) {
      time_cell = format_fixed(row.train_seconds, 3);
      if (row.time_diff_pct) diff_cell = format_fixed(*row.time_diff_pct, 3) + "%";
    }
    cells.push_back({row.method, time_cell, diff_cell, std::to_string(row.n_predictors),
                     auc_cell(row.train_auc, row.train_ci_low, row.train_ci_high),
                     auc_cell(row.test_auc, row.test_ci_low, row.test_ci_high)});
  }
  csv::write_file(path,
                  {"method", "training_time_seconds", "time_difference", "n_predictors",
                   "train_auc_95ci", "test_auc_95ci"},
                  cells);
}

void save_shap_table_csv(const explain::ShapSummary& summary,
                         const std::vector<std::string>& feature_domains,
                         const std::string& path) {
  std::vector<std::vector<std::string>> cells;
  for (std::size_t i = 0; i < summary.rows.size(); ++i) {
    const auto& row = summary.rows[i];
    std::string association = "Either prolonged or short LOS";
    if (row.direction == explain::Direction::prolonged) association = "Prolonged LOS";
    if (row.direction == explain::Direction::short_stay) association = "Short LOS";
    cells.push_back({std::to_string(row.rank), row.feature,
                     i < feature_domains.size() ? feature_domains[i] : "",
                     association,
                     format_fixed(row.mean_abs, 3) + " (" + format_fixed(row.ci_low, 3) +
                         " - " + format_fixed(row.ci_high, 3) + ")"});
  }
  csv::write_file(
      path, {"rank", "feature", "domain", "association_with_los", "mean_abs_shap_95ci"},
      cells);
}

void save_metrics_json(const eval::MetricsReport& metrics, const eval::EpvResult& epv,
                       const std::string& model_name, const std::string& path) {
  nlohmann::json j;
  j["model"] = model_name;
  j["auc"] = metrics.auc;
  j["auc_ci_low"] = metrics.auc_ci_low;
  j["auc_ci_high"] = metrics.auc_ci_high;
  j["accuracy"] = metrics.accuracy;
  j["sensitivity"] = metrics.sensitivity;
  j["specificity"] = metrics.specificity;
  j["weighted_f1"] = metrics.weighted_f1;
  j["n"] = metrics.n;
  j["n_events"] = metrics.n_events;
  j["threshold"] = metrics.threshold;
  j["epv_rows_per_predictor"] = epv.paper_ratio;
  j["epv_events_per_predictor"] = epv.events_ratio;
  j["epv_adequate"] = epv.adequate;
  write_json(j, path);
}

void save_comparison_json(const eval::ComparisonResult& result, const std::string& name_a,
                          const std::string& name_b, const std::string& path) {
  nlohmann::json j;
  j["model_a"] = name_a;
  j["model_b"] = name_b;
  j["auc_a"] = result.auc_a;
  j["auc_b"] = result.auc_b;
  j["z"] = result.z;
  j["p_one_sided"] = result.p_one_sided;
  j["n_boot"] = result.n_boot;
  j["seed"] = result.seed;
  j["redraws"] = result.redraws;
  write_json(j, path);
}

void save_cv_csv(const eval::CvResult& result, const std::string& path) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : result.rows)
    cells.push_back({std::to_string(row.repeat), std::to_string(row.fold),
                     format_roundtrip(row.auc), format_roundtrip(row.accuracy),
                     std::to_string(row.n_validation)});
  cells.push_back({"mean", "", format_roundtrip(result.mean_auc), "", ""});
  cells.push_back({"sd", "", format_roundtrip(result.sd_auc), "", ""});
  csv::write_file(path, {"repeat", "fold", "auc", "accuracy", "n_validation"}, cells);
}

void save_roc_csv(const std::vector<std::pair<double, double>>& points,
                  const std::string& path) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& [fpr, tpr] : points)
    cells.push_back({format_roundtrip(fpr), format_roundtrip(tpr)});
  csv::write_file(path, {"fpr", "tpr"}, cells);
}

void save_calibration_csv(const eval::CalibrationCurve& curve, const std::string& path) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& bin : curve.bins)
    cells.push_back({std::to_string(bin.bin_index), format_roundtrip(bin.mean_predicted),
                     format_roundtrip(bin.event_fraction), std::to_string(bin.count)});
  csv::write_file(path, {"bin", "mean_predicted", "event_fraction", "count"}, cells);
}

void save_shap_matrix_csv(const explain::ShapMatrix& matrix, const std::string& path) {
  std::vector<std::string> header = {"row"};
  for (const auto& name : matrix.feature_names) header.push_back(name);
  header.push_back("base_value");
  std::vector<std::vector<std::string>> cells;
  for (std::size_t r = 0; r < matrix.values.rows(); ++r) {
    std::vector<std::string> line = {std::to_string(r)};
    for (std::size_t j = 0; j < matrix.values.cols(); ++j)
      line.push_back(format_roundtrip(matrix.values(r, j)));
    line.push_back(format_roundtrip(matrix.base_value));
    cells.push_back(std::move(line));
  }
  csv::write_file(path, header, cells);
}

void save_beeswarm_csv(const std::vector<explain::BeeswarmPoint>& points,
                       const std::string& path) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& pt : points)
    cells.push_back({std::to_string(pt.feature_rank), format_roundtrip(pt.phi),
                     format_roundtrip(pt.normalized_value)});
  csv::write_file(path, {"feature_rank", "shap_value", "normalized_feature_value"}, cells);
}

}  // namespace tabstack::report
