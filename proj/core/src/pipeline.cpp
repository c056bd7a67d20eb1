#include "tabstack/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tabstack/csv.hpp"
#include "tabstack/data.hpp"
#include "tabstack/errors.hpp"
#include "tabstack/eval.hpp"
#include "tabstack/explain.hpp"
#include "tabstack/featsel.hpp"
#include "tabstack/models.hpp"
#include "tabstack/num.hpp"
#include "tabstack/prep.hpp"
#include "tabstack/report.hpp"
#include "tabstack/rng.hpp"
#include "tabstack/sha256.hpp"
#include "tabstack/svg.hpp"
#include "tabstack/synth.hpp"

namespace tabstack::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// Stage seed streams.
namespace stream {
constexpr std::uint64_t synth = 1;
constexpr std::uint64_t split = 2;
constexpr std::uint64_t impute = 3;
constexpr std::uint64_t select = 4;
constexpr std::uint64_t train = 5;
constexpr std::uint64_t evaluate = 6;
constexpr std::uint64_t compare = 7;
constexpr std::uint64_t explain = 8;
constexpr std::uint64_t search = 9;
}  // namespace stream

// Config ------------------------------------------------------------------

std::string config_to_json(const RunConfig& c) {
  json j;
  j["synth_spec"] = c.synth_spec;
  j["data_csv"] = c.data_csv;
  j["schema_json"] = c.schema_json;
  j["seed"] = c.seed;
  j["outcome_column"] = c.outcome_column;
  j["outcome_percentile"] = c.outcome_percentile;
  j["percentile_on_train_only"] = c.percentile_on_train_only;
  j["train_fraction"] = c.train_fraction;
  j["prep_whole_table_stats"] = c.prep_whole_table_stats;
  j["impute_max_iter"] = c.impute_max_iter;
  j["impute_trees"] = c.impute_trees;
  j["variable_set"] = c.variable_set;
  j["baseline_columns"] = c.baseline_columns;
  j["selection"] = c.selection;
  j["selection_on_cohort"] = c.selection_on_cohort;
  j["benchmark_methods"] = c.benchmark_methods;
  j["compare_variable_sets"] = c.compare_variable_sets;
  j["model"] = c.model;
  j["search_iters"] = c.search_iters;
  j["k_oof"] = c.k_oof;
  j["meta_input_arity"] = c.meta_input_arity;
  j["cv_folds"] = c.cv_folds;
  j["cv_repeats"] = c.cv_repeats;
  j["n_boot_ci"] = c.n_boot_ci;
  j["n_boot_compare"] = c.n_boot_compare;
  j["threshold"] = c.threshold;
  j["explain_rows"] = c.explain_rows;
  j["shap_permutations"] = c.shap_permutations;
  j["background_size"] = c.background_size;
  j["out_dir"] = c.out_dir;
  j["run_id"] = c.run_id;
  j["emit_timings"] = c.emit_timings;
  j["svg_timestamp"] = c.svg_timestamp;
  return j.dump(1);
}

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(Errc::invalid_config, std::string("config JSON parse error: ") + e.what());
  }
  RunConfig c;
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("synth_spec", c.synth_spec);
  get("data_csv", c.data_csv);
  get("schema_json", c.schema_json);
  get("seed", c.seed);
  get("outcome_column", c.outcome_column);
  get("outcome_percentile", c.outcome_percentile);
  get("percentile_on_train_only", c.percentile_on_train_only);
  get("train_fraction", c.train_fraction);
  get("prep_whole_table_stats", c.prep_whole_table_stats);
  get("impute_max_iter", c.impute_max_iter);
  get("impute_trees", c.impute_trees);
  get("variable_set", c.variable_set);
  get("baseline_columns", c.baseline_columns);
  get("selection", c.selection);
  get("selection_on_cohort", c.selection_on_cohort);
  get("benchmark_methods", c.benchmark_methods);
  get("compare_variable_sets", c.compare_variable_sets);
  get("model", c.model);
  get("search_iters", c.search_iters);
  get("k_oof", c.k_oof);
  get("meta_input_arity", c.meta_input_arity);
  get("cv_folds", c.cv_folds);
  get("cv_repeats", c.cv_repeats);
  get("n_boot_ci", c.n_boot_ci);
  get("n_boot_compare", c.n_boot_compare);
  get("threshold", c.threshold);
  get("explain_rows", c.explain_rows);
  get("shap_permutations", c.shap_permutations);
  get("background_size", c.background_size);
  get("out_dir", c.out_dir);
  get("run_id", c.run_id);
  get("emit_timings", c.emit_timings);
  get("svg_timestamp", c.svg_timestamp);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::invalid_config, "cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

std::string resolve_run_dir(const RunConfig& config) {
  std::string out_dir = config.out_dir;
  if (const char* env = std::getenv("TABSTACK_OUT")) out_dir = env;
  std::string run_id = config.run_id;
  if (run_id.empty()) {
    RunConfig canonical = config;
    canonical.run_id.clear();
    canonical.out_dir.clear();
    run_id = "run-" + sha256_hex(config_to_json(canonical)).substr(0, 12);
  }
  const fs::path dir = fs::path(out_dir) / run_id;
  fs::create_directories(dir);
  return dir.string();
}

// Shared stage plumbing -----------------------------------------------------

namespace {

struct Paths {
  fs::path base;
  explicit Paths(const RunConfig& config) : base(resolve_run_dir(config)) {}
  std::string in(const std::string& rel) const { return (base / rel).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write: " + path);
  out << text;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "missing artifact: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(Errc::type_parse, "artifact JSON parse error in " + path + ": " + e.what());
  }
  return j;
}

// Input table: synth artifacts in the run dir, or the configured files.
data::Table load_input_table(const RunConfig& config, const Paths& paths) {
  std::string csv_path = config.data_csv;
  std::string schema_path = config.schema_json;
  if (!config.synth_spec.empty()) {
    csv_path = paths.in("data/data.csv");
    schema_path = paths.in("data/schema.json");
  }
  if (!fs::exists(schema_path))
    fail(Errc::io_error, "missing schema file: " + schema_path);
  if (!fs::exists(csv_path)) fail(Errc::io_error, "missing data file: " + csv_path);
  return data::load_csv(csv_path, data::load_schema(schema_path));
}

std::string resolve_outcome_column(const RunConfig& config, const data::Table& table) {
  if (!config.outcome_column.empty()) return config.outcome_column;
  for (const auto& spec : table.specs)
    if (spec.domain == data::Domain::outcome) return spec.name;
  fail(Errc::invalid_config, "no outcome column configured or tagged");
}

struct PrepArtifacts {
  data::Table table;
  std::vector<int> labels;
  double threshold_value = 0;
  double threshold_days = 0;
  data::SplitIndices split;
};

PrepArtifacts load_prep(const Paths& paths) {
  PrepArtifacts out;
  out.table = data::load_csv(paths.in("prep/prepped.csv"),
                             data::load_schema(paths.in("prep/schema.json")));
  const json labels = read_json_file(paths.in("prep/labels.json"));
  out.labels = labels.at("labels").get<std::vector<int>>();
  out.threshold_value = labels.at("threshold_value").get<double>();
  out.threshold_days = labels.at("threshold_days").get<double>();
  const json split = read_json_file(paths.in("prep/split.json"));
  out.split.train = split.at("train").get<std::vector<std::size_t>>();
  out.split.test = split.at("test").get<std::vector<std::size_t>>();
  out.split.seed = split.at("seed").get<std::uint64_t>();
  out.split.train_fraction = split.at("train_fraction").get<double>();
  return out;
}

struct DesignInfo {
  std::string selection_method;
  data::EncodeMode encode_mode = data::EncodeMode::full;
  std::vector<std::string> feature_names;   // final design columns
  std::vector<std::string> variable_columns;  // columns of the chosen variable set
  std::size_t n_predictors = 0;             // selection-granularity count (EPV)
};

void save_design(const DesignInfo& info, const std::string& path) {
  json j;
  j["selection_method"] = info.selection_method;
  j["encode_mode"] = info.encode_mode == data::EncodeMode::full ? "full" : "drop_first";
  j["feature_names"] = info.feature_names;
  j["variable_columns"] = info.variable_columns;
  j["n_predictors"] = info.n_predictors;
  write_text(path, j.dump(1) + "\n");
}

DesignInfo load_design(const std::string& path) {
  const json j = read_json_file(path);
  DesignInfo info;
  info.selection_method = j.at("selection_method").get<std::string>();
  info.encode_mode = j.at("encode_mode").get<std::string>() == "full"
                         ? data::EncodeMode::full
                         : data::EncodeMode::drop_first;
  info.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  info.variable_columns = j.at("variable_columns").get<std::vector<std::string>>();
  info.n_predictors = j.at("n_predictors").get<std::size_t>();
  return info;
}

// Design matrix: encode the prepped table with the recorded mode, then take
// the recorded feature columns by name.
data::EncodedMatrix build_design(const data::Table& table, const DesignInfo& info) {
  std::vector<std::string> with_outcome = info.variable_columns;
  for (const auto& spec : table.specs)
    if (spec.domain == data::Domain::outcome) with_outcome.push_back(spec.name);
  const data::Table working = data::select_columns(table, with_outcome);
  const auto encoded = data::one_hot_encode(working, info.encode_mode);

  std::map<std::string, std::size_t> index_of;
  for (std::size_t j = 0; j < encoded.feature_names.size(); ++j)
    index_of[encoded.feature_names[j]] = j;

  data::EncodedMatrix out;
  out.X = Matrix(encoded.X.rows(), info.feature_names.size());
  for (std::size_t j = 0; j < info.feature_names.size(); ++j) {
    const auto it = index_of.find(info.feature_names[j]);
    require(it != index_of.end(), Errc::unknown_column,
            "design feature '" + info.feature_names[j] + "' not present after encoding");
    for (std::size_t r = 0; r < encoded.X.rows(); ++r)
      out.X(r, j) = encoded.X(r, it->second);
    out.feature_names.push_back(info.feature_names[j]);
    out.source_column.push_back(encoded.source_column[it->second]);
  }
  return out;
}

models::ModelKind chosen_model_kind(const RunConfig& config) {
  return models::parse_model_kind(config.model);
}

svg::SvgOptions svg_options(const RunConfig& config) {
  svg::SvgOptions options;
  options.timestamp = config.svg_timestamp;
  return options;
}

report::ModelRow evaluate_model_row(const std::string& name,
                                    const std::vector<double>& train_scores,
                                    const std::vector<int>& y_train,
                                    const std::vector<double>& test_scores,
                                    const std::vector<int>& y_test, const RunConfig& config,
                                    std::uint64_t seed) {
  report::ModelRow row;
  row.algorithm = name;
  row.train_auc = eval::auc(train_scores, y_train);
  std::tie(row.train_ci_low, row.train_ci_high) =
      eval::auc_ci(train_scores, y_train, config.n_boot_ci, 0.95, derive_seed(seed, 1));
  row.test_auc = eval::auc(test_scores, y_test);
  std::tie(row.test_ci_low, row.test_ci_high) =
      eval::auc_ci(test_scores, y_test, config.n_boot_ci, 0.95, derive_seed(seed, 2));
  row.test_confusion = eval::confusion_metrics(test_scores, y_test, config.threshold);
  return row;
}

}  // namespace

// Stages ----------------------------------------------------------------------

void run_synth(const RunConfig& config) {
  require(!config.synth_spec.empty(), Errc::invalid_config,
          "synth stage needs a synthetic spec name");
  const Paths paths(config);
  auto spec = synth::default_spec(config.synth_spec);
  spec.seed = derive_seed(config.seed, stream::synth);
  const auto [table, truth] = synth::generate(spec);
  data::save_csv(table, paths.in("data/data.csv"));
  data::save_schema(table.specs, paths.in("data/schema.json"));
  synth::save_ground_truth(truth, paths.in("data/ground_truth.json"));
}

void run_prep(const RunConfig& config) {
  const Paths paths(config);
  const data::Table raw = load_input_table(config, paths);

  const std::string outcome_col = resolve_outcome_column(config, raw);
  data::OutcomeSpec outcome_spec{outcome_col, config.outcome_percentile, "prolonged_los"};

  // Dichotomize (full cohort by default), then split, then impute with
  // training-row statistics so no test information leaks into fills.
  auto outcome = data::dichotomize_outcome(raw, outcome_spec);
  auto split = data::stratified_split(outcome.labels, config.train_fraction,
                                      derive_seed(config.seed, stream::split));
  if (config.percentile_on_train_only) {
    outcome = data::dichotomize_outcome(raw, outcome_spec, split.train);
    split = data::stratified_split(outcome.labels, config.train_fraction,
                                   derive_seed(config.seed, stream::split));
  }

  prep::ForestImputeParams impute;
  impute.max_iter = config.impute_max_iter;
  impute.n_trees = config.impute_trees;
  impute.seed = derive_seed(config.seed, stream::impute);
  const std::span<const std::size_t> stat_rows =
      config.prep_whole_table_stats ? std::span<const std::size_t>{}
                                    : std::span<const std::size_t>(split.train);
  auto prep_result = prep::run_prep(raw, impute, stat_rows);

  data::save_csv(prep_result.table, paths.in("prep/prepped.csv"));
  data::save_schema(prep_result.table.specs, paths.in("prep/schema.json"));

  {
    json j;
    j["outcome_column"] = outcome_col;
    j["percentile"] = config.outcome_percentile;
    j["threshold_value"] = outcome.threshold_value;
    j["threshold_days"] = outcome.threshold_days;
    j["labels"] = outcome.labels;
    write_text(paths.in("prep/labels.json"), j.dump(1) + "\n");
  }
  {
    json j;
    j["seed"] = split.seed;
    j["train_fraction"] = split.train_fraction;
    j["train"] = split.train;
    j["test"] = split.test;
    write_text(paths.in("prep/split.json"), j.dump(1) + "\n");
  }
  {
    json plan;
    plan["thresholds"] = {{"drop_missing", prep_result.plan.drop_missing_threshold},
                          {"simple_impute", prep_result.plan.simple_impute_threshold},
                          {"dominant", prep_result.plan.dominant_threshold},
                          {"rare", prep_result.plan.rare_threshold}};
    json cols = json::object();
    for (const auto& [name, cp] : prep_result.plan.columns) {
      json c;
      c["missing_action"] = prep::missing_action_name(cp.missing_action);
      c["missing_fraction"] = cp.missing_fraction;
      c["rebalance"] = prep::rebalance_action_name(cp.rebalance);
      c["dominant_fraction"] = cp.dominant_fraction;
      c["merge_map"] = cp.merge_map;
      c["binary_rare_flag"] = cp.binary_rare_flag;
      cols[name] = std::move(c);
    }
    plan["columns"] = std::move(cols);
    write_text(paths.in("prep/plan.json"), plan.dump(1) + "\n");
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& action : prep_result.actions)
      rows.push_back({action.column, action.action, action.detail});
    csv::write_file(paths.in("prep/summary.csv"), {"column", "action", "detail"}, rows);
  }
}

void run_select(const RunConfig& config) {
  const Paths paths(config);
  const PrepArtifacts prep_art = load_prep(paths);
  const auto& table = prep_art.table;
  const auto& y = prep_art.labels;

  // variable set
  const auto sets = featsel::build_variable_sets(table, config.baseline_columns);
  const featsel::VariableSet* chosen = nullptr;
  for (const auto& set : sets)
    if (set.name == config.variable_set) chosen = &set;
  require(chosen != nullptr, Errc::invalid_config,
          "unknown variable set: " + config.variable_set);

  std::vector<std::string> working_cols = chosen->columns;
  std::string outcome_name;
  for (const auto& spec : table.specs)
    if (spec.domain == data::Domain::outcome) outcome_name = spec.name;
  auto with_outcome = working_cols;
  if (!outcome_name.empty()) with_outcome.push_back(outcome_name);
  const data::Table working = data::select_columns(table, with_outcome);

  // selection scope: training rows unless configured otherwise
  std::vector<std::size_t> scope_rows = prep_art.split.train;
  if (config.selection_on_cohort) {
    scope_rows.resize(table.n_rows);
    std::iota(scope_rows.begin(), scope_rows.end(), 0);
  }
  const data::Table scoped = data::subset(working, scope_rows);
  const auto y_scoped = take(y, std::span<const std::size_t>(scope_rows));

  featsel::SelectionReport selection;
  data::EncodeMode mode = data::EncodeMode::full;
  if (config.selection == "none") {
    selection.method = "none";
    selection.kept = working_cols;
  } else if (config.selection == "vif") {
    mode = data::EncodeMode::drop_first;
    selection = featsel::select_vif(data::one_hot_encode(scoped, mode));
  } else if (config.selection == "spearman") {
    selection = featsel::select_spearman(data::one_hot_encode(scoped, mode), y_scoped);
  } else if (config.selection == "univariate") {
    selection = featsel::select_univariate(scoped, y_scoped);
  } else if (config.selection == "hybrid") {
    selection = featsel::select_hybrid(scoped, y_scoped);
  } else {
    fail(Errc::invalid_config, "unknown selection method: " + config.selection);
  }

  featsel::save_report_csv(selection, paths.in("select/report.csv"));
  featsel::save_report_json(selection, paths.in("select/report.json"));

  // design info for the downstream stages
  DesignInfo design;
  design.selection_method = selection.method;
  design.encode_mode = mode;
  design.variable_columns = working_cols;
  design.n_predictors = selection.kept.size();
  {
    const auto encoded = data::one_hot_encode(working, mode);
    const std::set<std::string> kept(selection.kept.begin(), selection.kept.end());
    const bool raw_granularity = selection.method == "univariate" ||
                                 selection.method == "hybrid" || selection.method == "none";
    for (std::size_t j = 0; j < encoded.feature_names.size(); ++j) {
      const bool keep = raw_granularity ? kept.count(encoded.source_column[j]) > 0
                                        : kept.count(encoded.feature_names[j]) > 0;
      if (keep) design.feature_names.push_back(encoded.feature_names[j]);
    }
  }
  require(!design.feature_names.empty(), Errc::empty_input,
          "selection kept no features");
  save_design(design, paths.in("select/design.json"));

  if (config.benchmark_methods) {
    const auto rows = featsel::benchmark_selection(
        working, y, {"vif", "spearman", "univariate", "hybrid"}, prep_art.split, 1e-4,
        derive_seed(config.seed, stream::select));
    report::save_benchmark_table_csv(rows, paths.in("select/benchmark_table.csv"), false);
    if (config.emit_timings)
      report::save_benchmark_table_csv(rows, paths.in("select/benchmark_timings.csv"), true);
  }

  if (config.compare_variable_sets) {
    std::vector<report::VariableSetRow> rows;
    for (const auto& set : sets) {
      auto cols = set.columns;
      if (!outcome_name.empty()) cols.push_back(outcome_name);
      const auto encoded =
          data::one_hot_encode(data::select_columns(table, cols), data::EncodeMode::full);
      const Matrix x_train = take_rows(encoded.X, prep_art.split.train);
      const Matrix x_test = take_rows(encoded.X, prep_art.split.test);
      const auto y_train = take(y, std::span<const std::size_t>(prep_art.split.train));
      const auto y_test = take(y, std::span<const std::size_t>(prep_art.split.test));
      const auto model = learners::fit_logistic(x_train, y_train, {});
      report::VariableSetRow row;
      row.set_name = set.name;
      row.n_columns = set.columns.size();
      row.metrics = evaluate_model_row(
          "logistic", learners::predict_proba(model, x_train), y_train,
          learners::predict_proba(model, x_test), y_test, config,
          derive_seed(config.seed, stream::select + 100));
      rows.push_back(std::move(row));
    }
    report::save_variable_set_table_csv(rows, paths.in("select/variable_sets.csv"));
  }
}

void run_train(const RunConfig& config) {
  const Paths paths(config);
  const PrepArtifacts prep_art = load_prep(paths);
  const DesignInfo design = load_design(paths.in("select/design.json"));
  const auto encoded = build_design(prep_art.table, design);

  const Matrix x_train = take_rows(encoded.X, prep_art.split.train);
  const auto y_train =
      take(prep_art.labels, std::span<const std::size_t>(prep_art.split.train));

  models::ModelSpec spec;
  spec.kind = chosen_model_kind(config);
  spec.params["k_oof"] = static_cast<double>(config.k_oof);
  spec.params["meta_input_arity"] = static_cast<double>(config.meta_input_arity);

  if (config.search_iters > 0) {
    // search each base model's space (or the single model's own space)
    json search_log = json::object();
    const auto search_one = [&](models::ModelKind kind, const std::string& prefix) {
      auto space = ensemble::default_search_space(kind);
      space.n_iter = config.search_iters;
      space.seed = derive_seed(config.seed, stream::search);
      const auto result = ensemble::random_search(kind, space, x_train, y_train);
      json trials = json::array();
      for (const auto& trial : result.trials)
        trials.push_back({{"params", trial.params}, {"mean_auc", trial.mean_auc}});
      search_log[models::model_kind_name(kind)] = {{"best", result.best_params},
                                                   {"best_auc", result.best_auc},
                                                   {"trials", trials}};
      for (const auto& [key, value] : result.best_params) spec.params[prefix + key] = value;
    };
    if (spec.kind == models::ModelKind::stacking) {
      search_one(models::ModelKind::forest, "forest.");
      search_one(models::ModelKind::gbt_levelwise, "gbt_levelwise.");
      search_one(models::ModelKind::gbt_leafwise, "gbt_leafwise.");
      search_one(models::ModelKind::gbt_oblivious, "gbt_oblivious.");
    } else {
      search_one(spec.kind, "");
    }
    write_text(paths.in("model/search.json"), search_log.dump(1) + "\n");
  }

  const auto model =
      models::fit_model(spec, x_train, y_train, derive_seed(config.seed, stream::train));
  models::save_model(model, paths.in("model/model.json"));

  // the conventional baseline always rides along for the comparison stage
  const auto baseline = learners::fit_logistic(x_train, y_train, {});
  models::save_model(models::AnyModel(baseline), paths.in("model/baseline_logistic.json"));
}

void run_evaluate(const RunConfig& config) {
  const Paths paths(config);
  const PrepArtifacts prep_art = load_prep(paths);
  const DesignInfo design = load_design(paths.in("select/design.json"));
  const auto encoded = build_design(prep_art.table, design);
  const auto model = models::load_model(paths.in("model/model.json"));
  const auto baseline = models::load_model(paths.in("model/baseline_logistic.json"));

  const Matrix x_train = take_rows(encoded.X, prep_art.split.train);
  const Matrix x_test = take_rows(encoded.X, prep_art.split.test);
  const auto y_train =
      take(prep_art.labels, std::span<const std::size_t>(prep_art.split.train));
  const auto y_test =
      take(prep_art.labels, std::span<const std::size_t>(prep_art.split.test));

  const auto test_scores = models::predict_proba(model, x_test);
  const auto train_scores = models::predict_proba(model, x_train);

  const auto metrics = eval::evaluate(test_scores, y_test, config.threshold,
                                      config.n_boot_ci,
                                      derive_seed(config.seed, stream::evaluate));
  std::size_t n_events_train = 0;
  for (int v : y_train) n_events_train += v != 0;
  const auto epv = eval::epv(y_train.size(), n_events_train, design.n_predictors);
  report::save_metrics_json(metrics, epv, models::model_kind_of(model),
                            paths.in("eval/metrics.json"));

  // model-comparison table: baseline, base learners (when stacked), chosen model
  std::vector<report::ModelRow> rows;
  const auto add_row = [&](const std::string& name, const std::vector<double>& tr,
                           const std::vector<double>& te, std::uint64_t salt) {
    rows.push_back(evaluate_model_row(name, tr, y_train, te, y_test, config,
                                      derive_seed(config.seed, stream::evaluate + salt)));
  };
  add_row("logistic regression", models::predict_proba(baseline, x_train),
          models::predict_proba(baseline, x_test), 10);
  if (const auto* stacked = std::get_if<ensemble::StackedModel>(&model)) {
    const Matrix base_train = ensemble::predict_base(*stacked, x_train);
    const Matrix base_test = ensemble::predict_base(*stacked, x_test);
    for (std::size_t m = 0; m < ensemble::kNumBaseModels; ++m)
      add_row(ensemble::base_model_names[m], base_train.column(m), base_test.column(m),
              20 + m);
    add_row("stacked ensemble", train_scores, test_scores, 30);
  } else {
    add_row(models::model_kind_of(model), train_scores, test_scores, 30);
  }
  report::save_model_table_csv(rows, paths.in("eval/model_table.csv"));

  const auto roc = eval::roc_points(test_scores, y_test);
  report::save_roc_csv(roc, paths.in("eval/roc.csv"));
  const auto calibration = eval::calibration_curve(test_scores, y_test);
  report::save_calibration_csv(calibration, paths.in("eval/calibration.csv"));

  svg::write_svg(svg::roc_curve_svg(roc, metrics.auc, svg_options(config)),
                 paths.in("plots/roc.svg"));
  svg::write_svg(svg::calibration_svg(calibration, svg_options(config)),
                 paths.in("plots/calibration.svg"));

  if (config.cv_repeats > 0) {
    models::ModelSpec spec;
    spec.kind = chosen_model_kind(config);
    spec.params["k_oof"] = static_cast<double>(config.k_oof);
    const auto cv = eval::repeated_stratified_cv(
        spec, x_train, y_train, config.cv_folds, config.cv_repeats,
        derive_seed(config.seed, stream::evaluate + 50));
    report::save_cv_csv(cv, paths.in("eval/cv.csv"));
  }
}

void run_compare_files(const RunConfig& config, const std::string& model_a_path,
                       const std::string& model_b_path) {
  const Paths paths(config);
  const PrepArtifacts prep_art = load_prep(paths);
  const DesignInfo design = load_design(paths.in("select/design.json"));
  const auto encoded = build_design(prep_art.table, design);
  const std::string path_a =
      model_a_path.empty() ? paths.in("model/model.json") : model_a_path;
  const std::string path_b =
      model_b_path.empty() ? paths.in("model/baseline_logistic.json") : model_b_path;
  const auto model_a = models::load_model(path_a);
  const auto model_b = models::load_model(path_b);

  const Matrix x_test = take_rows(encoded.X, prep_art.split.test);
  const auto y_test =
      take(prep_art.labels, std::span<const std::size_t>(prep_art.split.test));

  const auto result = eval::bootstrap_compare(
      models::predict_proba(model_a, x_test), models::predict_proba(model_b, x_test), y_test,
      config.n_boot_compare, derive_seed(config.seed, stream::compare));
  report::save_comparison_json(result, models::model_kind_of(model_a),
                               models::model_kind_of(model_b),
                               paths.in("eval/comparison.json"));
}

void run_compare(const RunConfig& config) { run_compare_files(config, "", ""); }

void run_explain(const RunConfig& config) {
  const Paths paths(config);
  const PrepArtifacts prep_art = load_prep(paths);
  const DesignInfo design = load_design(paths.in("select/design.json"));
  const auto encoded = build_design(prep_art.table, design);
  const auto model = models::load_model(paths.in("model/model.json"));

  // background: seeded stratified sample of training rows
  Rng rng(derive_seed(config.seed, stream::explain));
  std::vector<std::size_t> pos, neg;
  const auto y_of = [&](std::size_t i) { return prep_art.labels[prep_art.split.train[i]]; };
  for (std::size_t i = 0; i < prep_art.split.train.size(); ++i)
    (y_of(i) ? pos : neg).push_back(prep_art.split.train[i]);
  const std::size_t nb = std::min(config.background_size, pos.size() + neg.size());
  const std::size_t nb_pos = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(
             static_cast<double>(nb) * static_cast<double>(pos.size()) /
             static_cast<double>(pos.size() + neg.size()))));
  std::vector<std::size_t> background_rows;
  for (auto idx : rng.sample_without_replacement(pos.size(), std::min(nb_pos, pos.size())))
    background_rows.push_back(pos[idx]);
  for (auto idx : rng.sample_without_replacement(
           neg.size(), std::min(nb - background_rows.size(), neg.size())))
    background_rows.push_back(neg[idx]);
  std::sort(background_rows.begin(), background_rows.end());
  const Matrix background = take_rows(encoded.X, background_rows);

  // explained rows: seeded sample of the test split
  std::vector<std::size_t> test_rows = prep_art.split.test;
  const std::size_t n_explain = std::min(config.explain_rows, test_rows.size());
  std::vector<std::size_t> explain_rows;
  for (auto idx : rng.sample_without_replacement(test_rows.size(), n_explain))
    explain_rows.push_back(test_rows[idx]);
  std::sort(explain_rows.begin(), explain_rows.end());
  const Matrix x_explain = take_rows(encoded.X, explain_rows);

  const explain::PredictFn predict = [&](const Matrix& X) {
    return models::predict_proba(model, X);
  };
  const auto matrix = explain::shap_matrix(predict, x_explain, background,
                                           encoded.feature_names, "auto",
                                           config.shap_permutations,
                                           derive_seed(config.seed, stream::explain + 1));
  report::save_shap_matrix_csv(matrix, paths.in("explain/shap_matrix.csv"));

  const auto summary = explain::shap_summarize(matrix, x_explain, 1000,
                                               derive_seed(config.seed, stream::explain + 2));
  std::map<std::string, std::string> domain_of;
  for (const auto& spec : prep_art.table.specs)
    domain_of[spec.name] = data::domain_name(spec.domain);
  std::map<std::string, std::string> source_of;
  for (std::size_t j = 0; j < encoded.feature_names.size(); ++j)
    source_of[encoded.feature_names[j]] = encoded.source_column[j];
  std::vector<std::string> feature_domains;
  for (const auto& row : summary.rows) feature_domains.push_back(domain_of[source_of[row.feature]]);
  report::save_shap_table_csv(summary, feature_domains, paths.in("explain/shap_summary.csv"));

  const auto beeswarm = explain::beeswarm_points(matrix, x_explain, summary);
  report::save_beeswarm_csv(beeswarm, paths.in("explain/beeswarm.csv"));
  svg::write_svg(svg::beeswarm_svg(beeswarm, summary, 15, svg_options(config)),
                 paths.in("plots/beeswarm.svg"));
}

void write_manifest(const RunConfig& config) {
  const Paths paths(config);
  json manifest;
  manifest["run_id"] = fs::path(paths.base).filename().string();
  manifest["master_seed"] = config.seed;
  // the echoed config carries the run semantics only; placement fields are
  // normalized so the manifest is byte-identical wherever the run lands
  RunConfig echoed = config;
  echoed.out_dir.clear();
  echoed.run_id.clear();
  manifest["config"] = json::parse(config_to_json(echoed));
  manifest["stage_seeds"] = {
      {"synth", derive_seed(config.seed, stream::synth)},
      {"split", derive_seed(config.seed, stream::split)},
      {"impute", derive_seed(config.seed, stream::impute)},
      {"select", derive_seed(config.seed, stream::select)},
      {"train", derive_seed(config.seed, stream::train)},
      {"evaluate", derive_seed(config.seed, stream::evaluate)},
      {"compare", derive_seed(config.seed, stream::compare)},
      {"explain", derive_seed(config.seed, stream::explain)},
  };

  json artifacts = json::array();
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(paths.base)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "manifest.json") continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const std::string rel = fs::relative(file, paths.base).string();
    const std::string ext = file.extension().string();
    // SVGs may carry a timestamp; live-timing files are never reproducible
    const bool deterministic =
        (ext == ".csv" || ext == ".json") && rel != "select/benchmark_timings.csv";
    std::string digest;
    if (ext == ".svg") {
      // hash with the timestamp comment stripped so the manifest stays stable
      std::ifstream in(file, std::ios::binary);
      std::ostringstream buffer;
      buffer << in.rdbuf();
      std::string content = buffer.str();
      const auto start = content.find("<!-- generated:");
      if (start != std::string::npos) {
        const auto end = content.find("-->", start);
        if (end != std::string::npos) content.erase(start, end + 4 - start);
      }
      digest = sha256_hex(content);
    } else {
      digest = sha256_file_hex(file.string());
    }
    artifacts.push_back(
        {{"path", rel}, {"sha256", digest}, {"deterministic", deterministic}});
  }
  manifest["artifacts"] = std::move(artifacts);
  write_text(paths.in("manifest.json"), manifest.dump(1) + "\n");
}

std::string run_pipeline(const RunConfig& config) {
  const Paths paths(config);
  if (!config.synth_spec.empty()) run_synth(config);
  run_prep(config);
  run_select(config);
  run_train(config);
  run_evaluate(config);
  run_compare(config);
  run_explain(config);
  write_manifest(config);
  return paths.base.string();
}

}  // namespace tabstack::pipeline
