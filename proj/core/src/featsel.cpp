#include "tabstack/featsel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "tabstack/csv.hpp"
#include "tabstack/errors.hpp"
#include "tabstack/eval.hpp"
#include "tabstack/logistic.hpp"
#include "tabstack/num.hpp"
#include "tabstack/parallel.hpp"
#include "tabstack/rng.hpp"
#include "tabstack/stats.hpp"

namespace tabstack::featsel {

using data::Domain;
using data::Kind;
using data::Table;

std::vector<VariableSet> build_variable_sets(const Table& table,
                                             const std::vector<std::string>& baseline_columns) {
  const std::vector<std::pair<std::string, std::set<Domain>>> subsets = {
      {"patient", {Domain::patient}},
      {"clinical", {Domain::clinical}},
      {"system", {Domain::system}},
      {"patient+clinical", {Domain::patient, Domain::clinical}},
      {"clinical+system", {Domain::clinical, Domain::system}},
      {"patient+system", {Domain::patient, Domain::system}},
      {"all", {Domain::patient, Domain::clinical, Domain::system}},
  };
  std::vector<VariableSet> out;
  for (const auto& [name, domains] : subsets) {
    VariableSet set;
    set.name = name;
    set.domains = domains;
    for (const auto& spec : table.specs)
      if (domains.count(spec.domain)) set.columns.push_back(spec.name);
    for (Domain d : domains) {
      const bool any = std::any_of(table.specs.begin(), table.specs.end(),
                                   [&](const auto& s) { return s.domain == d; });
      require(any, Errc::empty_domain,
              std::string("no columns tagged '") + data::domain_name(d) + "'");
    }
    out.push_back(std::move(set));
  }
  if (!baseline_columns.empty()) {
    VariableSet baseline;
    baseline.name = "baseline";
    for (const auto& name : baseline_columns) {
      table.column_index(name);  // existence check
      baseline.columns.push_back(name);
    }
    out.push_back(std::move(baseline));
  }
  return out;
}

namespace {

bool feature_is_constant(const Matrix& X, std::size_t j) {
  for (std::size_t r = 1; r < X.rows(); ++r)
    if (X(r, j) != X(0, j)) return false;
  return true;
}

}  // namespace

SelectionReport select_vif(const data::EncodedMatrix& encoded, double threshold) {
  const Matrix& X = encoded.X;
  require(X.rows() > X.cols(), Errc::too_few_rows, "VIF selection needs more rows than features");

  SelectionReport report;
  report.method = "vif";
  std::vector<std::size_t> alive(X.cols());
  std::iota(alive.begin(), alive.end(), 0);

  for (;;) {
    Matrix sub(X.rows(), alive.size());
    for (std::size_t r = 0; r < X.rows(); ++r)
      for (std::size_t j = 0; j < alive.size(); ++j) sub(r, j) = X(r, alive[j]);
    const auto vif = stats::vif_all(sub);

    std::size_t worst = alive.size();
    for (std::size_t j = 0; j < alive.size(); ++j) {
      if (vif[j] <= threshold) continue;
      if (worst == alive.size() || vif[j] > vif[worst] ||
          (vif[j] == vif[worst] &&
           encoded.feature_names[alive[j]] < encoded.feature_names[alive[worst]]))
        worst = j;
    }
    if (worst == alive.size()) break;
    report.dropped.push_back(
        {encoded.feature_names[alive[worst]], "vif", vif[worst], threshold});
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(worst));
    if (alive.empty()) break;
  }
  for (std::size_t j : alive) report.kept.push_back(encoded.feature_names[j]);
  return report;
}

SelectionReport select_spearman(const data::EncodedMatrix& encoded, const std::vector<int>& y,
                                double threshold) {
  const Matrix& X = encoded.X;
  require(X.rows() == y.size(), Errc::length_mismatch, "X and y differ in length");
  const std::size_t p = X.cols();

  SelectionReport report;
  report.method = "spearman";
  std::vector<bool> dropped(p, false);

  // Degenerate (constant) features cannot enter the correlation kernel.
  std::vector<std::vector<double>> columns(p);
  for (std::size_t j = 0; j < p; ++j) {
    columns[j] = X.column(j);
    if (feature_is_constant(X, j)) {
      dropped[j] = true;
      report.dropped.push_back({encoded.feature_names[j], "degenerate", 0.0, threshold});
    }
  }

  // Rank-transform once; pairwise Spearman is then Pearson on ranks.
  std::vector<std::vector<double>> ranks(p);
  parallel_for(p, [&](std::size_t j) {
    if (!dropped[j]) ranks[j] = stats::average_ranks(columns[j]);
  });

  struct Pair {
    double abs_rho;
    std::size_t a, b;
  };
  std::vector<std::vector<Pair>> per_feature(p);
  parallel_for(p, [&](std::size_t a) {
    if (dropped[a]) return;
    for (std::size_t b = a + 1; b < p; ++b) {
      if (dropped[b]) continue;
      const double rho = stats::pearson(ranks[a], ranks[b]);
      if (std::abs(rho) > threshold) per_feature[a].push_back({std::abs(rho), a, b});
    }
  });
  std::vector<Pair> pairs;
  for (auto& v : per_feature) pairs.insert(pairs.end(), v.begin(), v.end());
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    if (x.abs_rho != y.abs_rho) return x.abs_rho > y.abs_rho;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });

  // Target association used for the weaker-member rule.
  std::vector<double> target_assoc(p, 0.0);
  for (std::size_t j = 0; j < p; ++j)
    if (!dropped[j]) target_assoc[j] = std::abs(stats::point_biserial(y, columns[j]));

  for (const auto& pair : pairs) {
    if (dropped[pair.a] || dropped[pair.b]) continue;
    const std::size_t weaker = target_assoc[pair.a] <= target_assoc[pair.b] ? pair.a : pair.b;
    dropped[weaker] = true;
    report.dropped.push_back({encoded.feature_names[weaker], "spearman", pair.abs_rho, threshold});
  }
  for (std::size_t j = 0; j < p; ++j)
    if (!dropped[j]) report.kept.push_back(encoded.feature_names[j]);
  return report;
}

namespace {

// Contingency table of a categorical column against the binary outcome,
// over observed levels only.
std::vector<std::vector<double>> contingency_with_outcome(const Table& table, std::size_t col,
                                                          const std::vector<int>& y) {
  std::map<std::int32_t, std::size_t> level_of;
  for (std::size_t r = 0; r < table.n_rows; ++r)
    level_of.emplace(table.columns[col].cat[r], level_of.size());
  std::vector<std::vector<double>> counts(level_of.size(), std::vector<double>(2, 0.0));
  for (std::size_t r = 0; r < table.n_rows; ++r)
    counts[level_of[table.columns[col].cat[r]]][y[r] ? 1 : 0] += 1.0;
  return counts;
}

bool column_is_constant(const Table& table, std::size_t col) {
  if (table.n_rows == 0) return true;
  if (table.specs[col].kind == Kind::continuous) {
    const auto& v = table.columns[col].num;
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  }
  const auto& v = table.columns[col].cat;
  return std::all_of(v.begin(), v.end(), [&](std::int32_t x) { return x == v.front(); });
}

}  // namespace

SelectionReport select_univariate(const Table& table, const std::vector<int>& y, double alpha) {
  require(table.n_rows == y.size(), Errc::length_mismatch, "table and y differ in length");
  SelectionReport report;
  report.method = "univariate";

  struct Verdict {
    bool degenerate = false;
    double p = 1.0;
  };
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < table.n_cols(); ++c)
    if (table.specs[c].domain != Domain::outcome) cols.push_back(c);
  std::vector<Verdict> verdicts(cols.size());

  parallel_for(cols.size(), [&](std::size_t i) {
    const std::size_t c = cols[i];
    require(table.missing_count(c) == 0, Errc::missing_cells_present,
            "column '" + table.specs[c].name + "' still has missing cells");
    if (column_is_constant(table, c)) {
      verdicts[i].degenerate = true;
      return;
    }
    if (table.specs[c].kind == Kind::categorical) {
      verdicts[i].p = stats::chi_square_test(contingency_with_outcome(table, c, y)).p_value;
    } else {
      std::vector<double> group0, group1;
      for (std::size_t r = 0; r < table.n_rows; ++r)
        (y[r] ? group1 : group0).push_back(table.columns[c].num[r]);
      verdicts[i].p = stats::mann_whitney_u(group0, group1).p_value;
    }
  });

  for (std::size_t i = 0; i < cols.size(); ++i) {
    const auto& name = table.specs[cols[i]].name;
    if (verdicts[i].degenerate) {
      report.dropped.push_back({name, "degenerate", 0.0, alpha});
    } else if (verdicts[i].p < alpha) {
      report.kept.push_back(name);
    } else {
      report.dropped.push_back({name, "p_value", verdicts[i].p, alpha});
    }
  }
  return report;
}

SelectionReport select_hybrid(const Table& table, const std::vector<int>& y,
                              const HybridThresholds& thresholds) {
  require(table.n_rows == y.size(), Errc::length_mismatch, "table and y differ in length");
  SelectionReport report;
  report.method = "hybrid";

  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < table.n_cols(); ++c)
    if (table.specs[c].domain != Domain::outcome) cols.push_back(c);
  const std::size_t m = cols.size();
  std::vector<bool> dropped(m, false);

  for (std::size_t i = 0; i < m; ++i) {
    require(table.missing_count(cols[i]) == 0, Errc::missing_cells_present,
            "column '" + table.specs[cols[i]].name + "' still has missing cells");
    if (column_is_constant(table, cols[i])) {
      dropped[i] = true;
      report.dropped.push_back(
          {table.specs[cols[i]].name, "degenerate", 0.0, thresholds.spearman});
    }
  }

  // Association with the outcome: |r_pb| for continuous, Cramer's V for
  // categorical; used to pick the weaker member of a crossing pair.
  std::vector<double> target_assoc(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (dropped[i]) continue;
    const std::size_t c = cols[i];
    if (table.specs[c].kind == Kind::continuous) {
      target_assoc[i] = std::abs(stats::point_biserial(y, table.columns[c].num));
    } else {
      std::vector<int> codes(table.n_rows);
      for (std::size_t r = 0; r < table.n_rows; ++r) codes[r] = table.columns[c].cat[r];
      target_assoc[i] = stats::cramers_v(codes, y);
    }
  }

  // Stage 1: same-kind pairs. Continuous columns are rank-transformed once;
  // pairwise Spearman is Pearson on those ranks.
  std::vector<std::vector<double>> cont_ranks(m);
  parallel_for(m, [&](std::size_t i) {
    if (!dropped[i] && table.specs[cols[i]].kind == Kind::continuous)
      cont_ranks[i] = stats::average_ranks(table.columns[cols[i]].num);
  });
  struct Pair {
    double stat;
    std::size_t a, b;
    const char* reason;
    double threshold;
  };
  std::vector<Pair> stage1;
  for (std::size_t i = 0; i < m; ++i) {
    if (dropped[i]) continue;
    for (std::size_t j = i + 1; j < m; ++j) {
      if (dropped[j]) continue;
      const auto& si = table.specs[cols[i]];
      const auto& sj = table.specs[cols[j]];
      if (si.kind != sj.kind) continue;
      if (si.kind == Kind::continuous) {
        const double rho = stats::pearson(cont_ranks[i], cont_ranks[j]);
        if (std::abs(rho) > thresholds.spearman)
          stage1.push_back({std::abs(rho), i, j, "spearman", thresholds.spearman});
      } else {
        std::vector<int> a(table.n_rows), b(table.n_rows);
        for (std::size_t r = 0; r < table.n_rows; ++r) {
          a[r] = table.columns[cols[i]].cat[r];
          b[r] = table.columns[cols[j]].cat[r];
        }
        const double v = stats::cramers_v(a, b);
        if (v > thresholds.cramers_v)
          stage1.push_back({v, i, j, "cramers_v", thresholds.cramers_v});
      }
    }
  }
  std::sort(stage1.begin(), stage1.end(), [](const Pair& x, const Pair& y) {
    if (x.stat != y.stat) return x.stat > y.stat;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  for (const auto& pair : stage1) {
    if (dropped[pair.a] || dropped[pair.b]) continue;
    const std::size_t weaker = target_assoc[pair.a] <= target_assoc[pair.b] ? pair.a : pair.b;
    dropped[weaker] = true;
    report.dropped.push_back(
        {table.specs[cols[weaker]].name, pair.reason, pair.stat, pair.threshold});
  }

  // Stage 2: surviving mixed pairs; the continuous member is dropped.
  std::vector<Pair> stage2;
  for (std::size_t i = 0; i < m; ++i) {
    if (dropped[i]) continue;
    for (std::size_t j = i + 1; j < m; ++j) {
      if (dropped[j]) continue;
      const auto& si = table.specs[cols[i]];
      const auto& sj = table.specs[cols[j]];
      if (si.kind == sj.kind) continue;
      const std::size_t cont = si.kind == Kind::continuous ? i : j;
      const std::size_t cat = si.kind == Kind::continuous ? j : i;
      std::set<std::int32_t> levels;
      for (std::size_t r = 0; r < table.n_rows; ++r)
        levels.insert(table.columns[cols[cat]].cat[r]);
      if (levels.size() == 2) {
        std::vector<int> coded(table.n_rows);
        const std::int32_t hi = *levels.rbegin();
        for (std::size_t r = 0; r < table.n_rows; ++r)
          coded[r] = table.columns[cols[cat]].cat[r] == hi ? 1 : 0;
        const double r_pb =
            std::abs(stats::point_biserial(coded, table.columns[cols[cont]].num));
        if (r_pb > thresholds.point_biserial)
          stage2.push_back({r_pb, cont, cat, "point_biserial", thresholds.point_biserial});
      } else {
        std::vector<int> groups(table.n_rows);
        for (std::size_t r = 0; r < table.n_rows; ++r)
          groups[r] = table.columns[cols[cat]].cat[r];
        const double eta = stats::correlation_ratio(groups, table.columns[cols[cont]].num);
        if (eta > thresholds.corr_ratio)
          stage2.push_back({eta, cont, cat, "corr_ratio", thresholds.corr_ratio});
      }
    }
  }
  std::sort(stage2.begin(), stage2.end(), [](const Pair& x, const Pair& y) {
    if (x.stat != y.stat) return x.stat > y.stat;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  for (const auto& pair : stage2) {
    if (dropped[pair.a] || dropped[pair.b]) continue;
    dropped[pair.a] = true;  // pair.a is the continuous member
    report.dropped.push_back(
        {table.specs[cols[pair.a]].name, pair.reason, pair.stat, pair.threshold});
  }

  for (std::size_t i = 0; i < m; ++i)
    if (!dropped[i]) report.kept.push_back(table.specs[cols[i]].name);
  return report;
}

namespace {

// Design matrix for the benchmark: kept raw columns -> full one-hot; kept
// encoded features -> column subset of the given encoding.
Matrix design_from_kept(const Table& table, const data::EncodedMatrix& full_encoding,
                        const SelectionReport& report) {
  std::set<std::string> kept(report.kept.begin(), report.kept.end());
  std::vector<std::size_t> feature_idx;
  if (report.method == "univariate" || report.method == "hybrid" || report.method == "none") {
    for (std::size_t j = 0; j < full_encoding.feature_names.size(); ++j)
      if (kept.count(full_encoding.source_column[j])) feature_idx.push_back(j);
  } else {
    for (std::size_t j = 0; j < full_encoding.feature_names.size(); ++j)
      if (kept.count(full_encoding.feature_names[j])) feature_idx.push_back(j);
  }
  Matrix X(full_encoding.X.rows(), feature_idx.size());
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t j = 0; j < feature_idx.size(); ++j)
      X(r, j) = full_encoding.X(r, feature_idx[j]);
  (void)table;
  return X;
}

}  // namespace

std::vector<BenchmarkRow> benchmark_selection(const Table& table, const std::vector<int>& y,
                                              const std::vector<std::string>& methods,
                                              const data::SplitIndices& split,
                                              double l2_lambda, std::uint64_t seed) {
  require(!methods.empty(), Errc::empty_input, "no selection methods requested");
  const auto full = data::one_hot_encode(table, data::EncodeMode::full);
  const auto drop_first = data::one_hot_encode(table, data::EncodeMode::drop_first);

  const Table train_table = data::subset(table, split.train);
  const auto y_train = take(y, std::span<const std::size_t>(split.train));
  const auto train_full = data::one_hot_encode(train_table, data::EncodeMode::full);
  const auto train_drop = data::one_hot_encode(train_table, data::EncodeMode::drop_first);

  std::vector<BenchmarkRow> rows;
  const auto run_one = [&](const std::string& method) {
    BenchmarkRow row;
    row.method = method;
    if (method == "none") {
      row.report.method = "none";
      for (const auto& spec : table.specs)
        if (spec.domain != Domain::outcome) row.report.kept.push_back(spec.name);
    } else if (method == "vif") {
      row.report = select_vif(train_drop);
    } else if (method == "spearman") {
      row.report = select_spearman(train_full, y_train);
    } else if (method == "univariate") {
      row.report = select_univariate(train_table, y_train);
    } else if (method == "hybrid") {
      row.report = select_hybrid(train_table, y_train);
    } else {
      fail(Errc::invalid_config, "unknown selection method: " + method);
    }
    row.n_predictors = row.report.kept.size();

    const auto& encoding = method == "vif" ? drop_first : full;
    const Matrix design = design_from_kept(table, encoding, row.report);
    const Matrix x_train = take_rows(design, split.train);
    const Matrix x_test = take_rows(design, split.test);
    const auto y_test = take(y, std::span<const std::size_t>(split.test));

    learners::LogisticParams lp;
    lp.l2_lambda = l2_lambda;
    const auto t0 = std::chrono::steady_clock::now();
    const auto model = learners::fit_logistic(x_train, y_train, lp);
    const auto t1 = std::chrono::steady_clock::now();
    row.train_seconds = std::chrono::duration<double>(t1 - t0).count();
    row.report.runtime_seconds = row.train_seconds;

    const auto train_scores = learners::predict_proba(model, x_train);
    const auto test_scores = learners::predict_proba(model, x_test);
    row.train_auc = eval::auc(train_scores, y_train);
    std::tie(row.train_ci_low, row.train_ci_high) =
        eval::auc_ci(train_scores, y_train, 2000, 0.95, derive_seed(seed, 11));
    row.test_auc = eval::auc(test_scores, y_test);
    std::tie(row.test_ci_low, row.test_ci_high) =
        eval::auc_ci(test_scores, y_test, 2000, 0.95, derive_seed(seed, 12));
    rows.push_back(std::move(row));
  };

  run_one("none");
  for (const auto& method : methods)
    if (method != "none") run_one(method);
  const double baseline_seconds = rows.front().train_seconds;
  for (std::size_t i = 1; i < rows.size(); ++i)
    rows[i].time_diff_pct =
        (rows[i].train_seconds - baseline_seconds) / baseline_seconds * 100.0;
  return rows;
}

void save_report_csv(const SelectionReport& report, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& name : report.kept) rows.push_back({name, "kept", "", "", ""});
  for (const auto& d : report.dropped)
    rows.push_back({d.feature, "dropped", d.reason, format_roundtrip(d.statistic),
                    format_roundtrip(d.threshold)});
  csv::write_file(path, {"feature", "status", "reason", "statistic", "threshold"}, rows);
}

void save_report_json(const SelectionReport& report, const std::string& path) {
  nlohmann::json j;
  j["method"] = report.method;
  j["kept"] = report.kept;
  nlohmann::json dropped = nlohmann::json::array();
  for (const auto& d : report.dropped)
    dropped.push_back({{"feature", d.feature},
                       {"reason", d.reason},
                       {"statistic", d.statistic},
                       {"threshold", d.threshold}});
  j["dropped"] = std::move(dropped);
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write report: " + path);
  out << j.dump(1) << "\n";
}

}  // namespace tabstack::featsel
