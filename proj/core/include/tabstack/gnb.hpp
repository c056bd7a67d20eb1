#pragma once

#include <vector>

#include "tabstack/matrix.hpp"

namespace tabstack::learners {

struct GnbModel {
  std::vector<double> class_priors;           // [2], sum to 1
  std::vector<std::vector<double>> means;     // [class][feature]
  std::vector<std::vector<double>> variances; // [class][feature], floored
  double var_smoothing = 0.0;                 // absolute floor added to every variance
};

// Per-class Gaussian likelihoods with an absolute variance floor of
// var_smoothing_rel * max over features of the total variance.
GnbModel fit_gnb(const Matrix& X, const std::vector<int>& y, double var_smoothing_rel = 1e-9);

// Positive-class posterior; log-space with the usual normalization.
std::vector<double> predict_proba(const GnbModel& model, const Matrix& X);

}  // namespace tabstack::learners
