#include "tabstack/prep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

#include "tabstack/errors.hpp"
#include "tabstack/forest.hpp"
#include "tabstack/num.hpp"
#include "tabstack/rng.hpp"

namespace tabstack::prep {

using data::Kind;
using data::Table;

const char* missing_action_name(MissingAction a) {
  switch (a) {
    case MissingAction::keep: return "keep";
    case MissingAction::impute_median: return "impute_median";
    case MissingAction::impute_mode: return "impute_mode";
    case MissingAction::impute_forest: return "impute_forest";
    case MissingAction::drop: return "drop_missing_gt_15";
  }
  return "?";
}

const char* rebalance_action_name(RebalanceAction a) {
  switch (a) {
    case RebalanceAction::keep: return "keep";
    case RebalanceAction::drop_dominant: return "drop_dominant_98";
    case RebalanceAction::merge_rare: return "merge_rare_2";
  }
  return "?";
}

PrepPlan plan_prep(const Table& table) {
  PrepPlan plan;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    const auto& spec = table.specs[c];
    if (spec.domain == data::Domain::outcome) continue;
    ColumnPlan cp;
    const double m = table.n_rows == 0
                         ? 0.0
                         : static_cast<double>(table.missing_count(c)) /
                               static_cast<double>(table.n_rows);
    cp.missing_fraction = m;
    if (m > plan.drop_missing_threshold) {
      cp.missing_action = MissingAction::drop;
    } else if (m == 0.0) {
      cp.missing_action = MissingAction::keep;
    } else if (m < plan.simple_impute_threshold) {
      cp.missing_action = spec.kind == Kind::continuous ? MissingAction::impute_median
                                                        : MissingAction::impute_mode;
    } else {
      cp.missing_action = MissingAction::impute_forest;
    }

    if (spec.kind == Kind::categorical && cp.missing_action != MissingAction::drop) {
      std::vector<std::size_t> freq(spec.categories.size(), 0);
      std::size_t observed = 0;
      for (std::size_t r = 0; r < table.n_rows; ++r) {
        if (table.is_missing(c, r)) continue;
        ++freq[static_cast<std::size_t>(table.columns[c].cat[r])];
        ++observed;
      }
      if (observed > 0) {
        const std::size_t max_count = *std::max_element(freq.begin(), freq.end());
        cp.dominant_fraction = static_cast<double>(max_count) / static_cast<double>(observed);
        bool any_rare = false;
        for (auto f : freq)
          if (static_cast<double>(f) / static_cast<double>(observed) < plan.rare_threshold)
            any_rare = true;
        if (cp.dominant_fraction >= plan.dominant_threshold) {
          cp.rebalance = RebalanceAction::drop_dominant;
        } else if (any_rare && spec.categories.size() >= 3) {
          cp.rebalance = RebalanceAction::merge_rare;
        } else if (any_rare) {
          cp.binary_rare_flag = true;  // two categories are never merged
        }
      }
    }
    plan.columns[spec.name] = std::move(cp);
  }
  return plan;
}

namespace {

std::vector<std::size_t> observed_rows(const Table& table, std::size_t col,
                                       std::span<const std::size_t> stat_rows) {
  std::vector<std::size_t> rows;
  if (stat_rows.empty()) {
    for (std::size_t r = 0; r < table.n_rows; ++r)
      if (!table.is_missing(col, r)) rows.push_back(r);
  } else {
    for (std::size_t r : stat_rows)
      if (!table.is_missing(col, r)) rows.push_back(r);
    if (rows.empty())  // no observed cell in the statistics subset: widen
      for (std::size_t r = 0; r < table.n_rows; ++r)
        if (!table.is_missing(col, r)) rows.push_back(r);
  }
  return rows;
}

// Lower median: no interpolation, deterministic for even counts.
double lower_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

std::int32_t mode_category(const Table& table, std::size_t col,
                           const std::vector<std::size_t>& rows) {
  const auto& spec = table.specs[col];
  std::vector<std::size_t> freq(spec.categories.size(), 0);
  for (std::size_t r : rows) ++freq[static_cast<std::size_t>(table.columns[col].cat[r])];
  std::int32_t best = -1;
  for (std::size_t k = 0; k < freq.size(); ++k) {
    if (freq[k] == 0) continue;
    if (best < 0 || freq[k] > freq[static_cast<std::size_t>(best)] ||
        (freq[k] == freq[static_cast<std::size_t>(best)] &&
         spec.categories[k] < spec.categories[static_cast<std::size_t>(best)]))
      best = static_cast<std::int32_t>(k);
  }
  return best;
}

void fill_continuous(Table& table, std::size_t col, double value) {
  for (std::size_t r = 0; r < table.n_rows; ++r) {
    if (!table.is_missing(col, r)) continue;
    table.columns[col].num[r] = value;
    table.missing[col][r] = 0;
  }
}

void fill_categorical(Table& table, std::size_t col, std::int32_t value) {
  for (std::size_t r = 0; r < table.n_rows; ++r) {
    if (!table.is_missing(col, r)) continue;
    table.columns[col].cat[r] = value;
    table.missing[col][r] = 0;
  }
}

void simple_fill(Table& table, std::size_t col, std::span<const std::size_t> stat_rows,
                 std::vector<AppliedAction>* actions) {
  const auto rows = observed_rows(table, col, stat_rows);
  require(!rows.empty(), Errc::all_missing_column,
          "column '" + table.specs[col].name + "' has no observed values");
  if (table.specs[col].kind == Kind::continuous) {
    std::vector<double> values;
    values.reserve(rows.size());
    for (std::size_t r : rows) values.push_back(table.columns[col].num[r]);
    const double median = lower_median(std::move(values));
    fill_continuous(table, col, median);
    if (actions)
      actions->push_back({table.specs[col].name, "impute_median", format_roundtrip(median)});
  } else {
    const std::int32_t mode = mode_category(table, col, rows);
    fill_categorical(table, col, mode);
    if (actions)
      actions->push_back({table.specs[col].name, "impute_mode",
                          table.specs[col].categories[static_cast<std::size_t>(mode)]});
  }
}

// Predictor design matrix from every complete column except `target_col` and
// the outcome column; categorical predictors expand one-hot.
Matrix predictor_matrix(const Table& table, std::size_t target_col) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    if (c == target_col) continue;
    if (table.specs[c].domain == data::Domain::outcome) continue;
    if (table.missing_count(c) != 0) continue;
    cols.push_back(c);
  }
  require(!cols.empty(), Errc::no_predictors_available,
          "forest imputation has no complete predictor columns");
  std::size_t width = 0;
  for (std::size_t c : cols)
    width += table.specs[c].kind == Kind::continuous ? 1 : table.specs[c].categories.size();
  Matrix X(table.n_rows, width);
  std::size_t j0 = 0;
  for (std::size_t c : cols) {
    if (table.specs[c].kind == Kind::continuous) {
      for (std::size_t r = 0; r < table.n_rows; ++r) X(r, j0) = table.columns[c].num[r];
      j0 += 1;
    } else {
      for (std::size_t r = 0; r < table.n_rows; ++r)
        X(r, j0 + static_cast<std::size_t>(table.columns[c].cat[r])) = 1.0;
      j0 += table.specs[c].categories.size();
    }
  }
  return X;
}

}  // namespace

data::Table impute_simple(const Table& input, const PrepPlan& plan,
                          std::span<const std::size_t> stat_rows) {
  Table table = input;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    const auto it = plan.columns.find(table.specs[c].name);
    if (it == plan.columns.end()) continue;
    if (it->second.missing_action == MissingAction::impute_median ||
        it->second.missing_action == MissingAction::impute_mode)
      simple_fill(table, c, stat_rows, nullptr);
  }
  return table;
}

data::Table impute_forest(const Table& input, const PrepPlan& plan,
                          const ForestImputeParams& params,
                          std::span<const std::size_t> stat_rows) {
  Table table = input;

  struct TargetCol {
    std::size_t col;
    double missing_fraction;
    std::vector<std::size_t> missing_rows;
  };
  std::vector<TargetCol> targets;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    const auto it = plan.columns.find(table.specs[c].name);
    if (it == plan.columns.end() || it->second.missing_action != MissingAction::impute_forest)
      continue;
    TargetCol t{c, it->second.missing_fraction, {}};
    for (std::size_t r = 0; r < table.n_rows; ++r)
      if (table.is_missing(c, r)) t.missing_rows.push_back(r);
    if (!t.missing_rows.empty()) targets.push_back(std::move(t));
  }
  if (targets.empty()) return table;
  std::sort(targets.begin(), targets.end(), [](const TargetCol& a, const TargetCol& b) {
    return a.missing_fraction < b.missing_fraction ||
           (a.missing_fraction == b.missing_fraction && a.col < b.col);
  });

  // Fit rows: observed cells, restricted to the statistics subset when given.
  std::vector<std::vector<std::size_t>> fit_rows(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t)
    fit_rows[t] = observed_rows(input, targets[t].col, stat_rows);

  // Initialize every target with median/mode so predictors are complete.
  for (const auto& t : targets) simple_fill(table, t.col, stat_rows, nullptr);

  // Snapshot helper for the stopping rule.
  const auto snapshot = [&](std::size_t t) {
    std::vector<double> values;
    const auto& target = targets[t];
    values.reserve(target.missing_rows.size());
    for (std::size_t r : target.missing_rows) {
      values.push_back(table.specs[target.col].kind == Kind::continuous
                           ? table.columns[target.col].num[r]
                           : static_cast<double>(table.columns[target.col].cat[r]));
    }
    return values;
  };

  std::vector<std::vector<double>> previous(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) previous[t] = snapshot(t);
  double prev_delta_cont = std::numeric_limits<double>::infinity();
  double prev_delta_cat = std::numeric_limits<double>::infinity();

  learners::ForestParams fp;
  fp.n_trees = params.n_trees;
  fp.max_depth = params.max_depth;
  fp.min_samples_leaf = params.min_samples_leaf;
  fp.feature_fraction = params.feature_fraction;
  fp.bootstrap = true;

  for (int iter = 0; iter < params.max_iter; ++iter) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const auto& target = targets[t];
      const Matrix X = predictor_matrix(table, target.col);
      const Matrix x_fit = take_rows(X, fit_rows[t]);
      const Matrix x_missing = take_rows(X, target.missing_rows);
      fp.seed = derive_seed(params.seed, static_cast<std::uint64_t>(iter) * 1000 + t);

      if (table.specs[target.col].kind == Kind::continuous) {
        std::vector<double> y_fit;
        y_fit.reserve(fit_rows[t].size());
        for (std::size_t r : fit_rows[t]) y_fit.push_back(table.columns[target.col].num[r]);
        const auto model = learners::fit_regression_forest(x_fit, y_fit, fp);
        const auto pred = learners::predict_mean(model, x_missing);
        for (std::size_t i = 0; i < target.missing_rows.size(); ++i)
          table.columns[target.col].num[target.missing_rows[i]] = pred[i];
      } else {
        // compact to observed classes; a single observed class keeps the mode
        std::set<std::int32_t> observed_set;
        for (std::size_t r : fit_rows[t]) observed_set.insert(table.columns[target.col].cat[r]);
        if (observed_set.size() < 2) continue;
        std::vector<std::int32_t> classes(observed_set.begin(), observed_set.end());
        std::vector<int> y_fit;
        y_fit.reserve(fit_rows[t].size());
        for (std::size_t r : fit_rows[t]) {
          const auto code = table.columns[target.col].cat[r];
          y_fit.push_back(static_cast<int>(
              std::lower_bound(classes.begin(), classes.end(), code) - classes.begin()));
        }
        const auto model = learners::fit_multiclass_forest(
            x_fit, y_fit, static_cast<int>(classes.size()), fp);
        const auto pred = learners::predict_class(model, x_missing);
        for (std::size_t i = 0; i < target.missing_rows.size(); ++i)
          table.columns[target.col].cat[target.missing_rows[i]] =
              classes[static_cast<std::size_t>(pred[i])];
      }
    }

    // missForest stopping rule: stop (and keep the previous sweep) once the
    // normalized change grows for both variable kinds present.
    double num_cont = 0, den_cont = 0;
    double changed_cat = 0, total_cat = 0;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const auto current = snapshot(t);
      if (table.specs[targets[t].col].kind == Kind::continuous) {
        for (std::size_t i = 0; i < current.size(); ++i) {
          const double d = current[i] - previous[t][i];
          num_cont += d * d;
          den_cont += current[i] * current[i];
        }
      } else {
        for (std::size_t i = 0; i < current.size(); ++i) {
          changed_cat += current[i] != previous[t][i] ? 1.0 : 0.0;
          total_cat += 1.0;
        }
      }
    }
    const bool has_cont = den_cont > 0;
    const bool has_cat = total_cat > 0;
    const double delta_cont = has_cont ? num_cont / den_cont : 0.0;
    const double delta_cat = has_cat ? changed_cat / total_cat : 0.0;

    const bool cont_worse = !has_cont || delta_cont > prev_delta_cont;
    const bool cat_worse = !has_cat || delta_cat > prev_delta_cat;
    if (iter > 0 && cont_worse && cat_worse) {
      // keep the previous sweep's imputation
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto& target = targets[t];
        for (std::size_t i = 0; i < target.missing_rows.size(); ++i) {
          if (table.specs[target.col].kind == Kind::continuous)
            table.columns[target.col].num[target.missing_rows[i]] = previous[t][i];
          else
            table.columns[target.col].cat[target.missing_rows[i]] =
                static_cast<std::int32_t>(previous[t][i]);
        }
      }
      break;
    }
    prev_delta_cont = delta_cont;
    prev_delta_cat = delta_cat;
    for (std::size_t t = 0; t < targets.size(); ++t) previous[t] = snapshot(t);
  }
  return table;
}

// Rebalancing -----------------------------------------------------------------

namespace {

struct RangeLabel {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

std::optional<RangeLabel> parse_range(const std::string& label) {
  const auto parse_num = [](const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
  };
  RangeLabel r;
  double v;
  if (label.size() >= 2 && label.front() == '<') {
    if (!parse_num(label.substr(1), v)) return std::nullopt;
    r.hi = v;
    return r;
  }
  if (label.size() >= 2 && label.front() == '>') {
    if (!parse_num(label.substr(1), v)) return std::nullopt;
    r.lo = v;
    return r;
  }
  if (label.size() >= 2 && label.back() == '+') {
    if (!parse_num(label.substr(0, label.size() - 1), v)) return std::nullopt;
    r.lo = v;
    return r;
  }
  const auto dash = label.find('-', 1);  // allow a leading minus sign
  if (dash != std::string::npos) {
    double lo, hi;
    if (parse_num(label.substr(0, dash), lo) && parse_num(label.substr(dash + 1), hi)) {
      r.lo = lo;
      r.hi = hi;
      return r;
    }
    return std::nullopt;
  }
  if (parse_num(label, v)) {
    r.lo = r.hi = v;
    return r;
  }
  return std::nullopt;
}

std::string format_bound(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  return format_roundtrip(v);
}

}  // namespace

bool is_range_label(const std::string& label) { return parse_range(label).has_value(); }

std::string merged_category_label(const std::string& a, const std::string& b) {
  const auto ra = parse_range(a);
  const auto rb = parse_range(b);
  if (!ra || !rb) return b;
  RangeLabel merged;
  merged.lo = std::min(ra->lo, rb->lo);
  merged.hi = std::max(ra->hi, rb->hi);
  const bool lo_open = std::isinf(merged.lo);
  const bool hi_open = std::isinf(merged.hi);
  if (lo_open && hi_open) return b;
  if (lo_open) return "<" + format_bound(merged.hi);
  if (hi_open) return ">" + format_bound(merged.lo);
  if (merged.lo == merged.hi) return format_bound(merged.lo);
  return format_bound(merged.lo) + "-" + format_bound(merged.hi);
}

namespace {

// Iteratively merge <2% categories: ordered columns (all labels parse as
// ranges) absorb into the more frequent declared neighbor, unordered ones
// into the most frequent category. Stops at two categories.
void merge_rare_categories(Table& table, std::size_t col, const PrepPlan& plan,
                           ColumnPlan& cp, std::vector<AppliedAction>& actions) {
  auto& spec = table.specs[col];
  bool ordered = true;
  for (const auto& label : spec.categories) ordered &= is_range_label(label);

  for (;;) {
    const std::size_t k = spec.categories.size();
    if (k <= 2) break;
    std::vector<std::size_t> freq(k, 0);
    for (std::size_t r = 0; r < table.n_rows; ++r)
      ++freq[static_cast<std::size_t>(table.columns[col].cat[r])];
    const auto n = static_cast<double>(table.n_rows);

    std::size_t rare = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (static_cast<double>(freq[i]) / n >= plan.rare_threshold) continue;
      if (rare == k || freq[i] < freq[rare]) rare = i;
    }
    if (rare == k) break;

    std::size_t absorber;
    if (ordered) {
      const bool has_prev = rare > 0;
      const bool has_next = rare + 1 < k;
      if (has_prev && has_next)
        absorber = freq[rare - 1] > freq[rare + 1] ? rare - 1 : rare + 1;
      else
        absorber = has_prev ? rare - 1 : rare + 1;
    } else {
      absorber = rare == 0 ? 1 : 0;
      for (std::size_t i = 0; i < k; ++i) {
        if (i == rare) continue;
        if (freq[i] > freq[absorber] ||
            (freq[i] == freq[absorber] && spec.categories[i] < spec.categories[absorber]))
          absorber = i;
      }
    }

    const std::string old_label = spec.categories[rare];
    const std::string absorber_label = spec.categories[absorber];
    const std::string new_label =
        ordered ? merged_category_label(old_label, absorber_label) : absorber_label;

    cp.merge_map[old_label] = new_label;
    if (new_label != absorber_label) {
      // prior merges into the absorber follow the rename
      for (auto& [from, to] : cp.merge_map)
        if (to == absorber_label) to = new_label;
    }
    actions.push_back({spec.name, "merge_rare", old_label + " -> " + new_label});

    // re-code: rare -> absorber, compact indices, rename absorber
    std::vector<std::int32_t> remap(k);
    std::vector<std::string> new_categories;
    for (std::size_t i = 0; i < k; ++i) {
      if (i == rare) continue;
      remap[i] = static_cast<std::int32_t>(new_categories.size());
      new_categories.push_back(i == absorber ? new_label : spec.categories[i]);
    }
    remap[rare] = remap[absorber];
    for (std::size_t r = 0; r < table.n_rows; ++r)
      table.columns[col].cat[r] = remap[static_cast<std::size_t>(table.columns[col].cat[r])];
    spec.categories = std::move(new_categories);
  }
}

Table drop_columns(const Table& table, const std::set<std::string>& names) {
  Table out;
  out.n_rows = table.n_rows;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    if (names.count(table.specs[c].name)) continue;
    out.specs.push_back(table.specs[c]);
    out.columns.push_back(table.columns[c]);
    out.missing.push_back(table.missing[c]);
  }
  return out;
}

}  // namespace

PrepResult run_prep(const Table& input, const ForestImputeParams& params,
                    std::span<const std::size_t> stat_rows) {
  PrepResult result;
  result.plan = plan_prep(input);

  // 1. drop columns exceeding the missingness cap
  std::set<std::string> to_drop;
  for (const auto& [name, cp] : result.plan.columns) {
    if (cp.missing_action == MissingAction::drop) {
      to_drop.insert(name);
      result.actions.push_back({name, missing_action_name(cp.missing_action),
                                format_roundtrip(cp.missing_fraction)});
    }
  }
  Table table = drop_columns(input, to_drop);

  // 2./3. imputation
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    const auto it = result.plan.columns.find(table.specs[c].name);
    if (it == result.plan.columns.end()) continue;
    if (it->second.missing_action == MissingAction::impute_median ||
        it->second.missing_action == MissingAction::impute_mode)
      simple_fill(table, c, stat_rows, &result.actions);
  }
  table = impute_forest(table, result.plan, params, stat_rows);
  for (const auto& [name, cp] : result.plan.columns)
    if (cp.missing_action == MissingAction::impute_forest && !to_drop.count(name))
      result.actions.push_back({name, "impute_forest", ""});

  // 4. categorical rebalance, with cascaded drops to keep replanning a no-op
  std::set<std::string> rebalance_drops;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    auto it = result.plan.columns.find(table.specs[c].name);
    if (it == result.plan.columns.end()) continue;
    auto& cp = it->second;
    if (cp.rebalance == RebalanceAction::drop_dominant) {
      rebalance_drops.insert(table.specs[c].name);
      result.actions.push_back({table.specs[c].name, "drop_dominant",
                                format_roundtrip(cp.dominant_fraction)});
      continue;
    }
    if (cp.rebalance == RebalanceAction::merge_rare)
      merge_rare_categories(table, c, result.plan, cp, result.actions);

    if (table.specs[c].kind == Kind::categorical && !rebalance_drops.count(table.specs[c].name)) {
      std::vector<std::size_t> freq(table.specs[c].categories.size(), 0);
      for (std::size_t r = 0; r < table.n_rows; ++r)
        ++freq[static_cast<std::size_t>(table.columns[c].cat[r])];
      const std::size_t max_count = *std::max_element(freq.begin(), freq.end());
      const double dominant =
          static_cast<double>(max_count) / static_cast<double>(table.n_rows);
      std::size_t observed_levels = 0;
      for (auto f : freq) observed_levels += f > 0;
      if (observed_levels < 2) {
        rebalance_drops.insert(table.specs[c].name);
        result.actions.push_back({table.specs[c].name, "drop_degenerate", ""});
      } else if (dominant >= result.plan.dominant_threshold) {
        rebalance_drops.insert(table.specs[c].name);
        result.actions.push_back(
            {table.specs[c].name, "drop_dominant", format_roundtrip(dominant)});
      }
    }
  }
  table = drop_columns(table, rebalance_drops);

  result.table = std::move(table);
  return result;
}

}  // namespace tabstack::prep
