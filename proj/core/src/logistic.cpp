#include "tabstack/logistic.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "tabstack/errors.hpp"

namespace tabstack::learners {

namespace {
using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
}

LogisticModel fit_logistic(const Matrix& X, const std::vector<int>& y,
                           const LogisticParams& params) {
  require(X.rows() == y.size(), Errc::length_mismatch, "X and y differ in length");
  require(X.rows() > 0, Errc::empty_input, "cannot fit on zero rows");
  std::size_t positives = 0;
  for (int v : y) positives += v != 0;
  require(positives != 0 && positives != y.size(), Errc::single_class,
          "training labels contain a single class");

  const auto n = static_cast<Eigen::Index>(X.rows());
  const auto p = static_cast<Eigen::Index>(X.cols());
  RowMajorMap Xm(X.data(), n, p);
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      require(std::isfinite(Xm(i, j)), Errc::non_finite_gradient,
              "non-finite value in the design matrix");

  // beta = [intercept, weights...]
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double lambda = params.l2_lambda;

  const auto margin_of = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd {
    return (Xm * b.tail(p)).array() + b[0];
  };
  const auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd m = margin_of(b);
    // -mean ll written via log1p(exp(.)) for stability
    double nll = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = m[i];
      const double log1pe = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      nll += log1pe - yv[i] * z;
    }
    return nll * inv_n + 0.5 * lambda * b.tail(p).squaredNorm();
  };

  LogisticModel model;
  model.l2_lambda = lambda;

  double current = objective(beta);
  for (int iter = 0; iter < params.max_iter; ++iter) {
    const Eigen::VectorXd m = margin_of(beta);
    Eigen::VectorXd prob(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = 1.0 / (1.0 + std::exp(-m[i]));
      w[i] = prob[i] * (1.0 - prob[i]);
    }
    Eigen::VectorXd grad(p + 1);
    const Eigen::VectorXd resid = prob - yv;
    grad[0] = resid.sum() * inv_n;
    grad.tail(p) = (Xm.transpose() * resid) * inv_n + lambda * beta.tail(p);

    model.n_iter = iter;
    if (grad.lpNorm<Eigen::Infinity>() < params.tol) {
      model.converged = true;
      break;
    }

    Eigen::MatrixXd hess(p + 1, p + 1);
    const Eigen::MatrixXd Xw = w.asDiagonal() * Xm;
    hess(0, 0) = w.sum() * inv_n;
    hess.block(0, 1, 1, p) = (Xw.colwise().sum()) * inv_n;
    hess.block(1, 0, p, 1) = hess.block(0, 1, 1, p).transpose();
    hess.block(1, 1, p, p) = (Xm.transpose() * Xw) * inv_n;
    for (Eigen::Index j = 1; j <= p; ++j) hess(j, j) += lambda;
    // small ridge keeps the solve well-posed when w underflows at separation
    for (Eigen::Index j = 0; j <= p; ++j) hess(j, j) += 1e-12;

    const Eigen::VectorXd step = hess.ldlt().solve(-grad);
    double t = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings) {
      const Eigen::VectorXd candidate = beta + t * step;
      const double value = objective(candidate);
      if (value <= current) {
        beta = candidate;
        current = value;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no descent direction left
    model.n_iter = iter + 1;
  }

  model.weights.resize(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) model.weights[static_cast<std::size_t>(j)] = beta[j + 1];
  model.intercept = beta[0];
  return model;
}

std::vector<double> predict_proba(const LogisticModel& model, const Matrix& X) {
  require(X.cols() == model.weights.size(), Errc::dimension_mismatch,
          "feature count does not match the fitted model");
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double m = model.intercept;
    const double* row = X.row_ptr(r);
    for (std::size_t j = 0; j < model.weights.size(); ++j) m += model.weights[j] * row[j];
    out[r] = 1.0 / (1.0 + std::exp(-m));
  }
  return out;
}

}  // namespace tabstack::learners
