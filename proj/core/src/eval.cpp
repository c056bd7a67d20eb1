#include "tabstack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabstack/data.hpp"
#include "tabstack/errors.hpp"
#include "tabstack/models.hpp"
#include "tabstack/parallel.hpp"
#include "tabstack/rng.hpp"
#include "tabstack/stats.hpp"

namespace tabstack::eval {

namespace {

void check_two_classes(std::span<const int> labels) {
  bool has0 = false, has1 = false;
  for (int v : labels) (v ? has1 : has0) = true;
  require(has0 && has1, Errc::single_class, "both classes are required");
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), Errc::length_mismatch,
          "scores and labels differ in length");
  check_two_classes(labels);
  const auto ranks = stats::average_ranks(scores);
  double rank_sum_pos = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      rank_sum_pos += ranks[i];
      ++n_pos;
    }
  }
  const std::size_t n_neg = labels.size() - n_pos;
  const double u = rank_sum_pos -
                   static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

Confusion confusion_metrics(std::span<const double> scores, std::span<const int> labels,
                            double threshold) {
  require(scores.size() == labels.size(), Errc::length_mismatch,
          "scores and labels differ in length");
  check_two_classes(labels);
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i]) (pred ? tp : fn) += 1;
    else (pred ? fp : tn) += 1;
  }
  const double n = static_cast<double>(scores.size());
  Confusion out;
  out.accuracy = (tp + tn) / n;
  out.sensitivity = tp / (tp + fn);
  out.specificity = tn / (tn + fp);

  const auto f1 = [](double tp_c, double fp_c, double fn_c) {
    const double denom = 2 * tp_c + fp_c + fn_c;
    return denom > 0 ? 2 * tp_c / denom : 0.0;
  };
  const double f1_pos = f1(tp, fp, fn);
  const double f1_neg = f1(tn, fn, fp);
  out.weighted_f1 = ((tp + fn) * f1_pos + (tn + fp) * f1_neg) / n;
  return out;
}

std::pair<double, double> auc_ci(std::span<const double> scores, std::span<const int> labels,
                                 std::size_t n_boot, double level, std::uint64_t seed) {
  require(n_boot >= 100, Errc::invalid_config, "auc_ci needs n_boot >= 100");
  check_two_classes(labels);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);

  std::vector<double> replicate_auc(n_boot);
  parallel_for(n_boot, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::vector<double> s;
    std::vector<int> l;
    s.reserve(labels.size());
    l.reserve(labels.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
      s.push_back(scores[pos[rng.below(pos.size())]]);
      l.push_back(1);
    }
    for (std::size_t i = 0; i < neg.size(); ++i) {
      s.push_back(scores[neg[rng.below(neg.size())]]);
      l.push_back(0);
    }
    replicate_auc[b] = auc(s, l);
  });
  const double alpha = 1.0 - level;
  return {data::percentile(replicate_auc, alpha / 2.0),
          data::percentile(replicate_auc, 1.0 - alpha / 2.0)};
}

MetricsReport evaluate(std::span<const double> scores, std::span<const int> labels,
                       double threshold, std::size_t n_boot, std::uint64_t seed) {
  MetricsReport out;
  out.auc = auc(scores, labels);
  std::tie(out.auc_ci_low, out.auc_ci_high) = auc_ci(scores, labels, n_boot, 0.95, seed);
  const Confusion c = confusion_metrics(scores, labels, threshold);
  out.accuracy = c.accuracy;
  out.sensitivity = c.sensitivity;
  out.specificity = c.specificity;
  out.weighted_f1 = c.weighted_f1;
  out.n = scores.size();
  out.n_events = static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](int v) { return v != 0; }));
  out.threshold = threshold;
  return out;
}

CvResult repeated_stratified_cv(const models::ModelSpec& spec, const Matrix& X,
                                const std::vector<int>& y, int k, int repeats,
                                std::uint64_t seed) {
  require(X.rows() == y.size(), Errc::length_mismatch, "X and y differ in length");
  require(X.rows() >= 10 * static_cast<std::size_t>(k), Errc::too_few_rows,
          "need at least 10*k rows for cross-validation");
  CvResult out;
  out.rows.resize(static_cast<std::size_t>(k) * static_cast<std::size_t>(repeats));

  parallel_for(out.rows.size(), [&](std::size_t task) {
    const int rep = static_cast<int>(task) / k;
    const int fold = static_cast<int>(task) % k;
    const auto fold_of =
        data::stratified_folds(y, k, derive_seed(seed, static_cast<std::uint64_t>(rep)));
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      (fold_of[i] == fold ? val_idx : train_idx).push_back(i);

    const Matrix x_train = take_rows(X, train_idx);
    const auto y_train = take(y, std::span<const std::size_t>(train_idx));
    const Matrix x_val = take_rows(X, val_idx);
    const auto y_val = take(y, std::span<const std::size_t>(val_idx));

    const auto model = models::fit_model(spec, x_train, y_train, derive_seed(seed, task + 1000));
    const auto scores = models::predict_proba(model, x_val);

    CvFoldRow row;
    row.repeat = rep;
    row.fold = fold;
    row.auc = auc(scores, y_val);
    row.accuracy = confusion_metrics(scores, y_val).accuracy;
    row.n_validation = val_idx.size();
    out.rows[task] = row;
  });

  double sum = 0;
  for (const auto& row : out.rows) sum += row.auc;
  out.mean_auc = sum / static_cast<double>(out.rows.size());
  double ss = 0;
  for (const auto& row : out.rows) ss += (row.auc - out.mean_auc) * (row.auc - out.mean_auc);
  out.sd_auc = out.rows.size() > 1
                   ? std::sqrt(ss / static_cast<double>(out.rows.size() - 1))
                   : 0.0;
  return out;
}

ComparisonResult bootstrap_compare(std::span<const double> scores_a,
                                   std::span<const double> scores_b,
                                   std::span<const int> labels, std::size_t n_boot,
                                   std::uint64_t seed) {
  require(scores_a.size() == labels.size() && scores_b.size() == labels.size(),
          Errc::length_mismatch, "scores and labels differ in length");
  check_two_classes(labels);

  ComparisonResult out;
  out.n_boot = n_boot;
  out.seed = seed;
  out.auc_a = auc(scores_a, labels);
  out.auc_b = auc(scores_b, labels);

  const std::size_t n = labels.size();
  std::vector<double> diffs(n_boot);
  std::vector<std::size_t> redraw_counts(n_boot, 0);
  parallel_for(n_boot, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::vector<std::size_t> idx(n);
    for (;;) {
      bool has0 = false, has1 = false;
      for (std::size_t i = 0; i < n; ++i) {
        idx[i] = rng.below(n);
        (labels[idx[i]] ? has1 : has0) = true;
      }
      if (has0 && has1) break;
      ++redraw_counts[b];  // single-class replicate: redraw, keep n_boot fixed
    }
    std::vector<double> sa(n), sb(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      sa[i] = scores_a[idx[i]];
      sb[i] = scores_b[idx[i]];
      l[i] = labels[idx[i]];
    }
    diffs[b] = auc(sa, l) - auc(sb, l);
  });
  for (auto c : redraw_counts) out.redraws += c;

  double mean = 0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(n_boot);
  double ss = 0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n_boot - 1));

  const double observed = out.auc_a - out.auc_b;
  if (sd == 0.0) {
    out.z = 0.0;
    out.p_one_sided = observed == 0.0 ? 0.5 : (observed > 0 ? 0.0 : 1.0);
    return out;
  }
  out.z = observed / sd;
  out.p_one_sided = 1.0 - stats::normal_cdf(out.z);
  return out;
}

CalibrationCurve calibration_curve(std::span<const double> scores, std::span<const int> labels,
                                   int n_bins) {
  require(scores.size() == labels.size(), Errc::length_mismatch,
          "scores and labels differ in length");
  require(n_bins >= 1, Errc::invalid_config, "need at least one bin");
  for (double s : scores)
    require(s >= 0.0 && s <= 1.0, Errc::invalid_config,
            "calibration needs probabilities in [0,1]");

  CalibrationCurve out;
  out.bin_edges.resize(static_cast<std::size_t>(n_bins) + 1);
  for (int b = 0; b <= n_bins; ++b)
    out.bin_edges[static_cast<std::size_t>(b)] =
        static_cast<double>(b) / static_cast<double>(n_bins);

  std::vector<double> sum_pred(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<double> sum_events(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_bins), 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto b = static_cast<std::size_t>(std::floor(scores[i] * n_bins));
    if (b >= static_cast<std::size_t>(n_bins)) b = static_cast<std::size_t>(n_bins) - 1;
    sum_pred[b] += scores[i];
    sum_events[b] += labels[i] ? 1.0 : 0.0;
    ++counts[b];
  }
  for (int b = 0; b < n_bins; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    if (counts[ub] == 0) continue;  // empty bins omitted
    CalibrationBin bin;
    bin.bin_index = b;
    bin.count = counts[ub];
    bin.mean_predicted = sum_pred[ub] / static_cast<double>(counts[ub]);
    bin.event_fraction = sum_events[ub] / static_cast<double>(counts[ub]);
    out.bins.push_back(bin);
  }
  return out;
}

EpvResult epv(std::size_t n_train_rows, std::size_t n_events_train, std::size_t n_predictors) {
  require(n_predictors > 0, Errc::zero_predictors, "EPV with zero predictors");
  EpvResult out;
  out.paper_ratio = static_cast<double>(n_train_rows) / static_cast<double>(n_predictors);
  out.events_ratio = static_cast<double>(n_events_train) / static_cast<double>(n_predictors);
  out.adequate = out.events_ratio >= 10.0;
  return out;
}

std::vector<std::pair<double, double>> roc_points(std::span<const double> scores,
                                                  std::span<const int> labels) {
  check_two_classes(labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double n_pos = 0, n_neg = 0;
  for (int v : labels) (v ? n_pos : n_neg) += 1;

  std::vector<std::pair<double, double>> points{{0.0, 0.0}};
  double tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;  // advance over score ties as one threshold
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp : fp) += 1;
      ++j;
    }
    points.emplace_back(fp / n_neg, tp / n_pos);
    i = j;
  }
  return points;
}

}  // namespace tabstack::eval
