#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tabstack/matrix.hpp"
#include "tabstack/model_spec.hpp"

namespace tabstack::eval {

struct MetricsReport {
  double auc = 0, auc_ci_low = 0, auc_ci_high = 0;
  double accuracy = 0, sensitivity = 0, specificity = 0, weighted_f1 = 0;
  std::size_t n = 0, n_events = 0;
  double threshold = 0.5;
};

// P(random positive outscores random negative), ties count 1/2
// (Mann-Whitney formulation over average ranks).
double auc(std::span<const double> scores, std::span<const int> labels);

struct Confusion {
  double accuracy = 0, sensitivity = 0, specificity = 0, weighted_f1 = 0;
};

// Predicted positive iff score >= threshold; weighted F1 over both classes
// with zero-denominator F1 defined as 0.
Confusion confusion_metrics(std::span<const double> scores, std::span<const int> labels,
                            double threshold = 0.500);

// Stratified bootstrap percentile interval (resampling within class keeps
// every replicate two-class).
std::pair<double, double> auc_ci(std::span<const double> scores, std::span<const int> labels,
                                 std::size_t n_boot = 2000, double level = 0.95,
                                 std::uint64_t seed = 0);

MetricsReport evaluate(std::span<const double> scores, std::span<const int> labels,
                       double threshold = 0.500, std::size_t n_boot = 2000,
                       std::uint64_t seed = 0);

struct CvFoldRow {
  int repeat = 0;
  int fold = 0;
  double auc = 0;
  double accuracy = 0;
  std::size_t n_validation = 0;
};

struct CvResult {
  std::vector<CvFoldRow> rows;
  double mean_auc = 0;
  double sd_auc = 0;
};

CvResult repeated_stratified_cv(const models::ModelSpec& spec, const Matrix& X,
                                const std::vector<int>& y, int k = 5, int repeats = 5,
                                std::uint64_t seed = 0);

struct ComparisonResult {
  double auc_a = 0, auc_b = 0;
  double z = 0;
  double p_one_sided = 0.5;
  std::size_t n_boot = 5000;
  std::uint64_t seed = 0;
  std::size_t redraws = 0;  // single-class replicates redrawn (counted)
};

// Resamples rows with replacement (n preserved); Z = observed AUC difference
// over the bootstrap sd of differences; one-sided p = 1 - Phi(Z) for
// "a better than b". sd = 0 degenerates to p in {0, 0.5, 1} by the sign of
// the observed difference.
ComparisonResult bootstrap_compare(std::span<const double> scores_a,
                                   std::span<const double> scores_b,
                                   std::span<const int> labels, std::size_t n_boot = 5000,
                                   std::uint64_t seed = 0);

struct CalibrationBin {
  int bin_index = 0;
  double mean_predicted = 0;
  double event_fraction = 0;
  std::size_t count = 0;
};

struct CalibrationCurve {
  std::vector<double> bin_edges;     // n_bins + 1 numbers on [0, 1]
  std::vector<CalibrationBin> bins;  // nonempty bins only
};

// Equal-width bins on [0,1], right-closed final bin.
CalibrationCurve calibration_curve(std::span<const double> scores, std::span<const int> labels,
                                   int n_bins = 10);

struct EpvResult {
  double paper_ratio = 0;   // rows per predictor
  double events_ratio = 0;  // events per predictor
  bool adequate = false;    // events_ratio >= 10
};

EpvResult epv(std::size_t n_train_rows, std::size_t n_events_train, std::size_t n_predictors);

// (fpr, tpr) points of the ROC curve, sorted by descending score threshold.
std::vector<std::pair<double, double>> roc_points(std::span<const double> scores,
                                                  std::span<const int> labels);

}  // namespace tabstack::eval
