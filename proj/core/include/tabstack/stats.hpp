#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tabstack/matrix.hpp"

namespace tabstack::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df = 0.0;
  std::size_t n = 0;
};

// Ranks 1..n; tied values share the mean of the ranks they cover.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of average ranks. Needs length >= 3 and non-constant
// inputs.
double spearman(std::span<const double> x, std::span<const double> y);

// Identical code path to pearson with the binary variable coded 0/1.
double point_biserial(std::span<const int> binary, std::span<const double> cont);

// V = sqrt(chi2 / (n * min(r-1, c-1))) over the observed contingency table,
// no continuity correction. Inputs are category codes.
double cramers_v(std::span<const int> a, std::span<const int> b);

// eta = sqrt(SS_between / SS_total).
double correlation_ratio(std::span<const int> groups, std::span<const double> values);

// Per-feature VIF_j = 1/(1 - R^2_j) from regressing feature j on the others
// with an intercept. Near-perfect fits (R^2 >= 1 - 1e-12) report +inf.
std::vector<double> vif_all(const Matrix& X);

TestResult chi_square_test(const std::vector<std::vector<double>>& counts);

// Two-sided p by normal approximation with tie correction and 0.5 continuity
// correction; the reported statistic is min(U_a, U_b). Approximate for very
// small samples (n < 8); no exact enumeration.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// Special functions (native: no statistical dependency) -----------------------

double normal_cdf(double z);

// Regularized incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a) (upper) and
// P(a, x) = 1 - Q(a, x); series/continued-fraction split at x = a + 1.
double regularized_gamma_q(double a, double x);
double regularized_gamma_p(double a, double x);

}  // namespace tabstack::stats
