// tabstack: tabular ML pipeline for prolonged length-of-stay prediction.
// Subcommands mirror the pipeline stages; every run is reproducible from its
// config JSON plus the master seed.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tabstack/errors.hpp"
#include "tabstack/pipeline.hpp"
#include "tabstack/synth.hpp"

namespace {

using tabstack::pipeline::RunConfig;

void emit_error_json(const std::string& code, int exit_code, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"code", code}, {"exit_code", exit_code}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabstack: stacked-ensemble length-of-stay modelling toolkit"};
  app.require_subcommand(1);

  RunConfig config;
  std::string config_path;

  const auto add_stage = [&](const std::string& name, const std::string& desc) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    cmd->add_option("--config", config_path, "JSON config file (flags override)");
    cmd->add_option("--spec", config.synth_spec,
                    "synthetic spec name (ischaemic-like | haemorrhagic-like | tiny | benchmark)");
    cmd->add_option("--data", config.data_csv, "input CSV (with --schema; disables --spec)");
    cmd->add_option("--schema", config.schema_json, "schema sidecar JSON");
    cmd->add_option("--seed", config.seed, "master seed");
    cmd->add_option("--out", config.out_dir, "output directory (env TABSTACK_OUT overrides)");
    cmd->add_option("--run-id", config.run_id, "run directory name (default: config hash)");
    cmd->add_option("--outcome-column", config.outcome_column, "outcome column name");
    cmd->add_option("--outcome-percentile", config.outcome_percentile,
                    "dichotomization percentile");
    cmd->add_flag("--percentile-on-train", config.percentile_on_train_only,
                  "derive the threshold from training rows only");
    cmd->add_option("--train-fraction", config.train_fraction, "training fraction");
    cmd->add_flag("--whole-table-prep", config.prep_whole_table_stats,
                  "imputation statistics over all rows (original workflow)");
    cmd->add_option("--impute-trees", config.impute_trees, "forest-imputation trees");
    cmd->add_option("--impute-max-iter", config.impute_max_iter, "forest-imputation sweeps");
    cmd->add_option("--variable-set", config.variable_set,
                    "patient|clinical|system|patient+clinical|clinical+system|patient+system|all|baseline");
    cmd->add_option("--baseline-columns", config.baseline_columns,
                    "explicit columns for the baseline variable set");
    cmd->add_option("--select", config.selection,
                    "none | vif | spearman | univariate | hybrid");
    cmd->add_flag("--select-on-cohort", config.selection_on_cohort,
                  "run selection on all rows instead of the training split");
    cmd->add_flag("!--no-benchmark", config.benchmark_methods,
                  "skip the selection-method comparison table");
    cmd->add_flag("--variable-set-table", config.compare_variable_sets,
                  "emit the domain-combination comparison table");
    cmd->add_option("--model", config.model,
                    "logistic | forest | gbt-levelwise | gbt-leafwise | gbt-oblivious | stacking");
    cmd->add_option("--search-iters", config.search_iters,
                    "random-search candidates per model (0 = tuned defaults)");
    cmd->add_option("--k-oof", config.k_oof, "out-of-fold folds for stacking");
    cmd->add_option("--meta-arity", config.meta_input_arity,
                    "meta-learner inputs: 1 averaged (default) or 4 raw base outputs");
    cmd->add_option("--cv-repeats", config.cv_repeats, "repeated-CV repeats (0 = skip)");
    cmd->add_option("--cv-folds", config.cv_folds, "repeated-CV folds");
    cmd->add_option("--boot-ci", config.n_boot_ci, "bootstrap replicates for AUC CIs");
    cmd->add_option("--boot-compare", config.n_boot_compare,
                    "bootstrap replicates for model comparison");
    cmd->add_option("--threshold", config.threshold, "classification threshold");
    cmd->add_option("--explain-rows", config.explain_rows, "test rows to explain");
    cmd->add_option("--shap-permutations", config.shap_permutations,
                    "permutations per explained row");
    cmd->add_option("--background-size", config.background_size, "SHAP background rows");
    cmd->add_flag("--emit-timings", config.emit_timings,
                  "write live training timings (not reproducible, excluded from hashing)");
    cmd->add_flag("!--no-svg-timestamp", config.svg_timestamp,
                  "omit the timestamp comment from SVGs");
    return cmd;
  };

  CLI::App* cmd_synth = add_stage("synth", "generate a synthetic dataset with ground truth");
  CLI::App* cmd_prep = add_stage("prep", "dichotomize, split, impute, rebalance");
  CLI::App* cmd_select = add_stage("select", "feature selection + comparison tables");
  CLI::App* cmd_train = add_stage("train", "fit the chosen model (+ logistic baseline)");
  CLI::App* cmd_eval = add_stage("evaluate", "test metrics, calibration, ROC, optional CV");
  CLI::App* cmd_compare = add_stage("compare", "bootstrap AUC comparison vs the baseline");
  CLI::App* cmd_explain = add_stage("explain", "SHAP attributions and summaries");
  CLI::App* cmd_pipeline = add_stage("pipeline", "all stages in order + manifest");

  std::string compare_model_a, compare_model_b;
  cmd_compare->add_option("--model-a", compare_model_a, "model JSON path (default: model/model.json)");
  cmd_compare->add_option("--model-b", compare_model_b,
                          "model JSON path (default: model/baseline_logistic.json)");

  CLI::App* cmd_specs = app.add_subcommand("specs", "list the named synthetic specs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    emit_error_json("InvalidConfig", 2, e.what());
    return 2;
  }

  try {
    if (!config_path.empty()) {
      // file first, then re-parse so explicit flags win
      config = tabstack::pipeline::load_config(config_path);
      app.clear();
      app.parse(argc, argv);
    }
    if (!config.data_csv.empty()) config.synth_spec.clear();

    using namespace tabstack::pipeline;
    if (cmd_specs->parsed()) {
      for (const auto& name : tabstack::synth::default_spec_names())
        std::cout << name << "\n";
      return 0;
    }
    if (cmd_synth->parsed()) run_synth(config);
    if (cmd_prep->parsed()) run_prep(config);
    if (cmd_select->parsed()) run_select(config);
    if (cmd_train->parsed()) run_train(config);
    if (cmd_eval->parsed()) run_evaluate(config);
    if (cmd_compare->parsed()) {
      if (!compare_model_a.empty() || !compare_model_b.empty()) {
        // direct file-vs-file comparison within the run directory layout
        run_compare_files(config, compare_model_a, compare_model_b);
      } else {
        run_compare(config);
      }
    }
    if (cmd_explain->parsed()) run_explain(config);
    if (cmd_pipeline->parsed()) {
      const std::string dir = run_pipeline(config);
      std::cout << dir << "\n";
      return 0;
    }
    std::cout << resolve_run_dir(config) << "\n";
    return 0;
  } catch (const tabstack::Error& e) {
    const int code = tabstack::errc_exit_code(e.code());
    emit_error_json(tabstack::errc_name(e.code()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    emit_error_json("Internal", 4, e.what());
    return 4;
  }
}
