#include "tabstack/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "tabstack/errors.hpp"
#include "tabstack/parallel.hpp"
#include "tabstack/rng.hpp"

namespace tabstack::explain {

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::prolonged: return "prolonged";
    case Direction::short_stay: return "short";
    case Direction::either: return "either";
  }
  return "?";
}

ShapValues shap_exact(const PredictFn& predict, std::span<const double> x,
                      const Matrix& background) {
  const std::size_t f = x.size();
  require(f <= 15, Errc::too_many_features, "exact enumeration is guarded at 15 features");
  require(background.rows() > 0, Errc::empty_background, "empty background set");
  require(background.cols() == f, Errc::dimension_mismatch,
          "background width does not match the explained row");

  const std::size_t n_subsets = std::size_t{1} << f;
  const std::size_t nb = background.rows();

  // v(S) for every subset mask: batch all composites through the model.
  std::vector<double> v(n_subsets);
  {
    Matrix composites(nb, f);
    for (std::size_t mask = 0; mask < n_subsets; ++mask) {
      for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t j = 0; j < f; ++j)
          composites(b, j) = (mask >> j) & 1 ? x[j] : background(b, j);
      const auto preds = predict(composites);
      double sum = 0;
      for (double p : preds) sum += p;
      v[mask] = sum / static_cast<double>(nb);
    }
  }

  // phi_i = sum over S not containing i of |S|!(F-|S|-1)!/F! * (v(S+i)-v(S))
  std::vector<double> log_fact(f + 1, 0.0);
  for (std::size_t k = 1; k <= f; ++k)
    log_fact[k] = log_fact[k - 1] + std::log(static_cast<double>(k));
  std::vector<double> weight_of_size(f);
  for (std::size_t s = 0; s < f; ++s)
    weight_of_size[s] =
        std::exp(log_fact[s] + log_fact[f - s - 1] - log_fact[f]);

  ShapValues out;
  out.base_value = v[0];
  out.phi.assign(f, 0.0);
  for (std::size_t mask = 0; mask < n_subsets; ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    for (std::size_t i = 0; i < f; ++i) {
      if ((mask >> i) & 1) continue;
      out.phi[i] += weight_of_size[size] * (v[mask | (std::size_t{1} << i)] - v[mask]);
    }
  }
  return out;
}

ShapValues shap_permutation(const PredictFn& predict, std::span<const double> x,
                            const Matrix& background, std::size_t n_permutations,
                            std::uint64_t seed) {
  const std::size_t f = x.size();
  require(n_permutations >= 10, Errc::invalid_config, "need at least 10 permutations");
  require(background.rows() > 0, Errc::empty_background, "empty background set");
  require(background.cols() == f, Errc::dimension_mismatch,
          "background width does not match the explained row");
  const std::size_t nb = background.rows();

  ShapValues out;
  out.phi.assign(f, 0.0);

  // One permutation = walk from the all-background composite to x, flipping
  // one feature at a time; the prediction delta is that feature's marginal
  // contribution. Batched as nb*(f+1) rows per permutation.
  std::vector<std::size_t> order(f);
  Matrix composites(nb * (f + 1), f);
  Rng rng(seed);
  double base_sum = 0.0;

  for (std::size_t perm = 0; perm < n_permutations; ++perm) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t j = 0; j < f; ++j) composites(b, j) = background(b, j);
    for (std::size_t step = 0; step < f; ++step) {
      const std::size_t offset = (step + 1) * nb;
      const std::size_t prev = step * nb;
      for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t j = 0; j < f; ++j)
          composites(offset + b, j) = composites(prev + b, j);
        composites(offset + b, order[step]) = x[order[step]];
      }
    }
    const auto preds = predict(composites);

    std::vector<double> mean_v(f + 1, 0.0);
    for (std::size_t step = 0; step <= f; ++step) {
      double sum = 0;
      for (std::size_t b = 0; b < nb; ++b) sum += preds[step * nb + b];
      mean_v[step] = sum / static_cast<double>(nb);
    }
    base_sum += mean_v[0];
    for (std::size_t step = 0; step < f; ++step)
      out.phi[order[step]] += mean_v[step + 1] - mean_v[step];
  }

  const double inv = 1.0 / static_cast<double>(n_permutations);
  for (auto& p : out.phi) p *= inv;
  out.base_value = base_sum * inv;
  return out;
}

ShapMatrix shap_matrix(const PredictFn& predict, const Matrix& X, const Matrix& background,
                       const std::vector<std::string>& feature_names,
                       const std::string& method, std::size_t n_permutations,
                       std::uint64_t seed) {
  require(X.rows() > 0, Errc::empty_matrix, "no rows to explain");
  const bool exact = method == "exact" || (method == "auto" && X.cols() <= 15);
  require(exact || method == "auto" || method == "permutation", Errc::invalid_config,
          "unknown SHAP method: " + method);

  ShapMatrix out;
  out.values = Matrix(X.rows(), X.cols());
  out.feature_names = feature_names;
  out.background_size = background.rows();
  out.method = exact ? "exact" : "permutation";
  out.n_permutations = exact ? 0 : n_permutations;

  std::vector<double> bases(X.rows());
  parallel_for(X.rows(), [&](std::size_t r) {
    const auto row = X.row(r);
    const ShapValues values =
        exact ? shap_exact(predict, row, background)
              : shap_permutation(predict, row, background, n_permutations,
                                 derive_seed(seed, r));
    for (std::size_t j = 0; j < X.cols(); ++j) out.values(r, j) = values.phi[j];
    bases[r] = values.base_value;
  });
  // The exact base is identical across rows; permutation bases average out.
  double sum = 0;
  for (double b : bases) sum += b;
  out.base_value = sum / static_cast<double>(bases.size());
  return out;
}

namespace {

bool is_binary_column(const Matrix& values, std::size_t j) {
  for (std::size_t r = 0; r < values.rows(); ++r)
    if (values(r, j) != 0.0 && values(r, j) != 1.0) return false;
  return true;
}

}  // namespace

ShapSummary shap_summarize(const ShapMatrix& matrix, const Matrix& feature_values,
                           std::size_t n_boot, std::uint64_t seed) {
  const std::size_t n = matrix.values.rows(), f = matrix.values.cols();
  require(n >= 2, Errc::empty_matrix, "need at least 2 explained rows to summarize");
  require(feature_values.rows() == n && feature_values.cols() == f, Errc::dimension_mismatch,
          "feature values do not match the SHAP matrix");

  ShapSummary out;
  out.rows.resize(f);
  for (std::size_t j = 0; j < f; ++j) {
    auto& row = out.rows[j];
    row.feature = j < matrix.feature_names.size() ? matrix.feature_names[j]
                                                  : "f" + std::to_string(j);
    double sum_abs = 0;
    for (std::size_t r = 0; r < n; ++r) sum_abs += std::abs(matrix.values(r, j));
    row.mean_abs = sum_abs / static_cast<double>(n);

    if (is_binary_column(feature_values, j)) {
      double sum1 = 0, sum0 = 0;
      std::size_t n1 = 0, n0 = 0;
      for (std::size_t r = 0; r < n; ++r) {
        if (feature_values(r, j) == 1.0) {
          sum1 += matrix.values(r, j);
          ++n1;
        } else {
          sum0 += matrix.values(r, j);
          ++n0;
        }
      }
      if (n1 > 0 && n0 > 0) {
        const double mean1 = sum1 / static_cast<double>(n1);
        const double mean0 = sum0 / static_cast<double>(n0);
        if (mean1 > mean0 && mean1 > 0) row.direction = Direction::prolonged;
        else if (mean1 < mean0 && mean1 < 0) row.direction = Direction::short_stay;
      }
    }
  }

  // Percentile bootstrap over rows for each feature's mean |phi|.
  std::vector<std::vector<double>> replicate_means(f, std::vector<double>(n_boot));
  parallel_for(n_boot, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = rng.below(n);
    for (std::size_t j = 0; j < f; ++j) {
      double sum = 0;
      for (std::size_t i : idx) sum += std::abs(matrix.values(i, j));
      replicate_means[j][b] = sum / static_cast<double>(n);
    }
  });
  for (std::size_t j = 0; j < f; ++j) {
    out.rows[j].ci_low = data::percentile(replicate_means[j], 0.025);
    out.rows[j].ci_high = data::percentile(replicate_means[j], 0.975);
  }

  // Ranks: 1 = largest mean |phi|; ties by feature index for determinism.
  std::vector<std::size_t> order(f);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out.rows[a].mean_abs != out.rows[b].mean_abs)
      return out.rows[a].mean_abs > out.rows[b].mean_abs;
    return a < b;
  });
  for (std::size_t pos = 0; pos < f; ++pos)
    out.rows[order[pos]].rank = static_cast<int>(pos) + 1;

  std::sort(out.rows.begin(), out.rows.end(),
            [](const ShapSummaryRow& a, const ShapSummaryRow& b) { return a.rank < b.rank; });
  return out;
}

std::vector<BeeswarmPoint> beeswarm_points(const ShapMatrix& matrix,
                                           const Matrix& feature_values,
                                           const ShapSummary& summary) {
  const std::size_t n = matrix.values.rows(), f = matrix.values.cols();
  std::vector<int> rank_of(f, 0);
  for (const auto& row : summary.rows) {
    for (std::size_t j = 0; j < f; ++j) {
      const std::string& name =
          j < matrix.feature_names.size() ? matrix.feature_names[j] : "f" + std::to_string(j);
      if (name == row.feature) rank_of[j] = row.rank;
    }
  }
  std::vector<double> min_v(f, 0), max_v(f, 0);
  for (std::size_t j = 0; j < f; ++j) {
    double lo = feature_values(0, j), hi = feature_values(0, j);
    for (std::size_t r = 1; r < n; ++r) {
      lo = std::min(lo, feature_values(r, j));
      hi = std::max(hi, feature_values(r, j));
    }
    min_v[j] = lo;
    max_v[j] = hi;
  }
  std::vector<BeeswarmPoint> points;
  points.reserve(n * f);
  for (std::size_t j = 0; j < f; ++j) {
    const double range = max_v[j] - min_v[j];
    for (std::size_t r = 0; r < n; ++r) {
      BeeswarmPoint pt;
      pt.feature_rank = rank_of[j];
      pt.phi = matrix.values(r, j);
      pt.normalized_value = range > 0 ? (feature_values(r, j) - min_v[j]) / range : 0.5;
      points.push_back(pt);
    }
  }
  return points;
}

}  // namespace tabstack::explain
