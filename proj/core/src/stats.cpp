#include "tabstack/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "tabstack/errors.hpp"

namespace tabstack::stats {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_constant(std::span<const double> v) {
  for (double x : v)
    if (x != v.front()) return false;
  return true;
}
}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  require(!values.empty(), Errc::empty_input, "ranks of empty array");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), Errc::length_mismatch, "pearson inputs differ in length");
  require(x.size() >= 3, Errc::empty_input, "pearson needs length >= 3");
  require(!is_constant(x) && !is_constant(y), Errc::constant_input,
          "pearson of a constant array");
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), Errc::length_mismatch, "spearman inputs differ in length");
  require(x.size() >= 3, Errc::empty_input, "spearman needs length >= 3");
  require(!is_constant(x) && !is_constant(y), Errc::constant_input,
          "spearman of a constant array");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double point_biserial(std::span<const int> binary, std::span<const double> cont) {
  require(binary.size() == cont.size(), Errc::length_mismatch,
          "point_biserial inputs differ in length");
  bool has0 = false, has1 = false;
  for (int b : binary) {
    has0 |= b == 0;
    has1 |= b != 0;
  }
  require(has0 && has1, Errc::single_class, "point_biserial needs both classes");
  std::vector<double> coded(binary.size());
  for (std::size_t i = 0; i < binary.size(); ++i) coded[i] = binary[i] ? 1.0 : 0.0;
  return pearson(coded, cont);
}

double cramers_v(std::span<const int> a, std::span<const int> b) {
  require(a.size() == b.size(), Errc::length_mismatch, "cramers_v inputs differ in length");
  require(!a.empty(), Errc::empty_input, "cramers_v of empty arrays");

  // Compact observed levels.
  std::map<int, std::size_t> la, lb;
  for (int v : a) la.emplace(v, la.size());
  for (int v : b) lb.emplace(v, lb.size());
  const std::size_t r = la.size(), c = lb.size();
  require(r >= 2 && c >= 2, Errc::degenerate_table,
          "cramers_v needs >= 2 observed levels on both sides");

  std::vector<std::vector<double>> counts(r, std::vector<double>(c, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) counts[la[a[i]]][lb[b[i]]] += 1.0;

  std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
  double n = 0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      row_sum[i] += counts[i][j];
      col_sum[j] += counts[i][j];
      n += counts[i][j];
    }
  double chi2 = 0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double expected = row_sum[i] * col_sum[j] / n;
      const double d = counts[i][j] - expected;
      chi2 += d * d / expected;
    }
  const double k = static_cast<double>(std::min(r, c) - 1);
  return std::sqrt(chi2 / (n * k));
}

double correlation_ratio(std::span<const int> groups, std::span<const double> values) {
  require(groups.size() == values.size(), Errc::length_mismatch,
          "correlation_ratio inputs differ in length");
  require(!values.empty(), Errc::empty_input, "correlation_ratio of empty arrays");
  require(!is_constant(values), Errc::constant_input,
          "correlation_ratio of constant values");

  std::map<int, std::pair<double, std::size_t>> acc;  // group -> (sum, count)
  double grand_sum = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& [sum, count] = acc[groups[i]];
    sum += values[i];
    ++count;
    grand_sum += values[i];
  }
  require(acc.size() >= 2, Errc::degenerate_groups, "correlation_ratio needs >= 2 groups");

  const double grand_mean = grand_sum / static_cast<double>(values.size());
  double ss_between = 0;
  for (const auto& [group, sc] : acc) {
    const double mean_g = sc.first / static_cast<double>(sc.second);
    ss_between += static_cast<double>(sc.second) * (mean_g - grand_mean) * (mean_g - grand_mean);
  }
  double ss_total = 0;
  for (double v : values) ss_total += (v - grand_mean) * (v - grand_mean);
  const double ratio = ss_between / ss_total;
  return std::sqrt(std::clamp(ratio, 0.0, 1.0));
}

std::vector<double> vif_all(const Matrix& X) {
  const std::size_t n = X.rows(), p = X.cols();
  require(n > p, Errc::too_few_rows, "VIF needs more rows than features");
  if (p == 0) return {};
  if (p == 1) return {1.0};

  // With an internal intercept, VIF_j equals [R^-1]_jj over the feature
  // correlation matrix; rank-deficient designs fall back to a per-feature
  // rank-revealing least-squares solve so perfect collinearity reports +inf.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      raw(X.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::MatrixXd centered = raw;
  Eigen::VectorXd norms(p);
  std::vector<bool> constant(p, false);
  for (Eigen::Index j = 0; j < centered.cols(); ++j) {
    centered.col(j).array() -= centered.col(j).mean();
    norms[j] = centered.col(j).norm();
    if (norms[j] <= 0) {
      constant[static_cast<std::size_t>(j)] = true;
      norms[j] = 1.0;
    }
    centered.col(j) /= norms[j];
  }
  const Eigen::MatrixXd corr = centered.transpose() * centered;

  std::vector<double> vif(p, kInf);
  constexpr double kR2Cap = 1.0 - 1e-12;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(corr);
  lu.setThreshold(1e-10);
  if (lu.isInvertible()) {
    const Eigen::MatrixXd inv = lu.inverse();
    bool clean = true;
    for (Eigen::Index j = 0; j < inv.rows(); ++j) {
      const double d = inv(j, j);
      if (!(d >= 1.0 - 1e-9) || d > 1.0 / (1.0 - kR2Cap)) {
        clean = false;
        break;
      }
    }
    if (clean) {
      for (std::size_t j = 0; j < p; ++j)
        vif[j] = constant[j] ? kInf : inv(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
      return vif;
    }
  }

  // Fallback: per-feature R^2 via column-pivoted QR on the reduced system.
  for (std::size_t j = 0; j < p; ++j) {
    if (constant[j]) continue;  // reports +inf: no variance to explain
    Eigen::MatrixXd others(p - 1, p - 1);
    Eigen::VectorXd rj(p - 1);
    Eigen::Index a = 0;
    for (std::size_t u = 0; u < p; ++u) {
      if (u == j) continue;
      rj[a] = corr(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j));
      Eigen::Index b = 0;
      for (std::size_t v = 0; v < p; ++v) {
        if (v == j) continue;
        others(a, b) = corr(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
        ++b;
      }
      ++a;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(others);
    qr.setThreshold(1e-10);
    const Eigen::VectorXd beta = qr.solve(rj);
    const double r2 = std::clamp(rj.dot(beta), 0.0, 1.0);
    vif[j] = r2 >= kR2Cap ? kInf : 1.0 / (1.0 - r2);
  }
  return vif;
}

TestResult chi_square_test(const std::vector<std::vector<double>>& counts) {
  require(!counts.empty() && !counts.front().empty(), Errc::empty_input,
          "empty contingency table");
  const std::size_t r = counts.size(), c = counts.front().size();
  for (const auto& row : counts)
    require(row.size() == c, Errc::length_mismatch, "ragged contingency table");

  std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
  double n = 0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      row_sum[i] += counts[i][j];
      col_sum[j] += counts[i][j];
      n += counts[i][j];
    }
  double chi2 = 0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double expected = row_sum[i] * col_sum[j] / n;
      require(expected > 0, Errc::zero_expected_count,
              "expected count is zero in the contingency table");
      const double d = counts[i][j] - expected;
      chi2 += d * d / expected;
    }

  TestResult out;
  out.statistic = chi2;
  out.df = static_cast<double>((r - 1) * (c - 1));
  out.n = static_cast<std::size_t>(n);
  out.p_value = regularized_gamma_q(out.df / 2.0, chi2 / 2.0);
  return out;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), Errc::empty_input, "mann_whitney_u needs both samples");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;

  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = average_ranks(pooled);

  double rank_sum_a = 0;
  for (std::size_t i = 0; i < na; ++i) rank_sum_a += ranks[i];
  const double ua = rank_sum_a - static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;
  const double ub = static_cast<double>(na) * static_cast<double>(nb) - ua;

  // Tie correction from run lengths of equal pooled values.
  std::vector<double> sorted(pooled);
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  const double mean_u = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
  const double nn = static_cast<double>(n);
  const double var_u = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                       ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));

  TestResult out;
  out.statistic = std::min(ua, ub);
  out.df = 0.0;
  out.n = n;
  if (var_u <= 0) {
    out.p_value = 1.0;  // everything tied
    return out;
  }
  const double diff = std::max(std::abs(ua - mean_u) - 0.5, 0.0);
  const double z = diff / std::sqrt(var_u);
  out.p_value = std::clamp(2.0 * (1.0 - normal_cdf(z)), 0.0, 1.0);
  return out;
}

// Special functions ------------------------------------------------------------

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Lower incomplete gamma P(a,x) by series expansion; valid for x < a + 1.
double gamma_p_series(double a, double x) {
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < 1000; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return std::exp(log_prefix) * sum;
}

// Upper incomplete gamma Q(a,x) by Lentz continued fraction; valid for
// x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int k = 1; k < 1000; ++k) {
    const double an = -static_cast<double>(k) * (static_cast<double>(k) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefix) * h;
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  require(a > 0 && x >= 0, Errc::invalid_config, "gamma Q needs a > 0, x >= 0");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return std::clamp(1.0 - gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(gamma_q_cf(a, x), 0.0, 1.0);
}

double regularized_gamma_p(double a, double x) { return 1.0 - regularized_gamma_q(a, x); }

}  // namespace tabstack::stats
