#include "tabstack/gnb.hpp"

#include <algorithm>
#include <cmath>

#include "tabstack/errors.hpp"

namespace tabstack::learners {

GnbModel fit_gnb(const Matrix& X, const std::vector<int>& y, double var_smoothing_rel) {
  require(X.rows() == y.size(), Errc::length_mismatch, "X and y differ in length");
  require(X.rows() > 0, Errc::empty_input, "cannot fit on zero rows");
  std::size_t positives = 0;
  for (int v : y) positives += v != 0;
  require(positives != 0 && positives != y.size(), Errc::single_class,
          "training labels contain a single class");

  const std::size_t n = X.rows(), p = X.cols();
  GnbModel model;
  model.class_priors = {static_cast<double>(n - positives) / static_cast<double>(n),
                        static_cast<double>(positives) / static_cast<double>(n)};
  model.means.assign(2, std::vector<double>(p, 0.0));
  model.variances.assign(2, std::vector<double>(p, 0.0));

  const double counts[2] = {static_cast<double>(n - positives),
                            static_cast<double>(positives)};
  for (std::size_t r = 0; r < n; ++r) {
    const int c = y[r] ? 1 : 0;
    for (std::size_t j = 0; j < p; ++j) model.means[c][j] += X(r, j);
  }
  for (int c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < p; ++j) model.means[c][j] /= counts[c];
  for (std::size_t r = 0; r < n; ++r) {
    const int c = y[r] ? 1 : 0;
    for (std::size_t j = 0; j < p; ++j) {
      const double d = X(r, j) - model.means[c][j];
      model.variances[c][j] += d * d;
    }
  }
  for (int c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < p; ++j) model.variances[c][j] /= counts[c];

  // floor = rel * max total feature variance (over both classes pooled)
  double max_var = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0;
    for (std::size_t r = 0; r < n; ++r) mean += X(r, j);
    mean /= static_cast<double>(n);
    double var = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = X(r, j) - mean;
      var += d * d;
    }
    max_var = std::max(max_var, var / static_cast<double>(n));
  }
  model.var_smoothing = var_smoothing_rel * max_var;
  if (model.var_smoothing <= 0) model.var_smoothing = var_smoothing_rel;
  for (int c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < p; ++j) model.variances[c][j] += model.var_smoothing;
  return model;
}

std::vector<double> predict_proba(const GnbModel& model, const Matrix& X) {
  require(X.cols() == model.means[0].size(), Errc::dimension_mismatch,
          "feature count does not match the fitted model");
  const std::size_t p = X.cols();
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double log_post[2];
    for (int c = 0; c < 2; ++c) {
      double lp = std::log(model.class_priors[c]);
      for (std::size_t j = 0; j < p; ++j) {
        const double var = model.variances[c][j];
        const double d = X(r, j) - model.means[c][j];
        lp += -0.5 * std::log(2.0 * M_PI * var) - d * d / (2.0 * var);
      }
      log_post[c] = lp;
    }
    const double m = std::max(log_post[0], log_post[1]);
    const double z0 = std::exp(log_post[0] - m);
    const double z1 = std::exp(log_post[1] - m);
    out[r] = z1 / (z0 + z1);
  }
  return out;
}

}  // namespace tabstack::learners
