#pragma once

#include <vector>

#include "tabstack/matrix.hpp"

namespace tabstack::learners {

struct LogisticParams {
  double l2_lambda = 1e-4;
  double tol = 1e-8;
  int max_iter = 100;
};

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
  double l2_lambda = 0.0;
  bool converged = false;
  int n_iter = 0;
};

// Newton with step halving on the objective
//   mean negative log-likelihood + (lambda/2) * |w|^2   (intercept unpenalized).
// The per-sample normalization makes fits invariant to duplicating the
// dataset. Converged when the gradient max-norm drops below tol.
LogisticModel fit_logistic(const Matrix& X, const std::vector<int>& y,
                           const LogisticParams& params);

std::vector<double> predict_proba(const LogisticModel& model, const Matrix& X);

}  // namespace tabstack::learners
