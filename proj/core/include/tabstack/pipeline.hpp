#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tabstack::pipeline {

// A run is reproducible from this config plus nothing else; every stage
// derives its randomness from `seed`.
struct RunConfig {
  // input: a named synthetic spec, or a CSV + schema sidecar
  std::string synth_spec = "tiny";
  std::string data_csv;
  std::string schema_json;
  std::uint64_t seed = 42;

  // outcome & split
  std::string outcome_column;  // empty: the column tagged domain=outcome
  double outcome_percentile = 0.75;
  bool percentile_on_train_only = false;  // default: full cohort before splitting
  double train_fraction = 0.8;

  // prep
  bool prep_whole_table_stats = false;  // paper-faithful: statistics over all rows
  int impute_max_iter = 6;
  std::size_t impute_trees = 40;

  // selection
  std::string variable_set = "all";
  std::vector<std::string> baseline_columns;
  std::string selection = "univariate";  // none | vif | spearman | univariate | hybrid
  bool selection_on_cohort = false;      // default: training rows only
  bool benchmark_methods = true;         // emit the method-comparison table
  bool compare_variable_sets = false;    // emit the domain-combination table

  // model
  std::string model = "stacking";  // logistic | forest | gbt-* | stacking
  int search_iters = 0;            // 0 = tuned defaults, no search
  int k_oof = 5;
  int meta_input_arity = 1;

  // evaluation
  int cv_folds = 5;
  int cv_repeats = 0;  // 0 = skip repeated CV
  std::size_t n_boot_ci = 2000;
  std::size_t n_boot_compare = 5000;
  double threshold = 0.500;

  // explanation
  std::size_t explain_rows = 40;
  std::size_t shap_permutations = 20;
  std::size_t background_size = 20;

  // output
  std::string out_dir = "out";
  std::string run_id;  // empty: derived from the config hash
  bool emit_timings = false;   // live timings to a separate, unhashed CSV
  bool svg_timestamp = true;   // suppressible for bit-stable SVGs
};

std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);

// out_dir/run_id, creating the directory; run_id defaults to
// "run-" + first 12 hex chars of the config hash.
std::string resolve_run_dir(const RunConfig& config);

// Stage entry points. Each reads its inputs from the run directory (or the
// configured external files) and writes its artifact subdirectory.
void run_synth(const RunConfig& config);
void run_prep(const RunConfig& config);
void run_select(const RunConfig& config);
void run_train(const RunConfig& config);
void run_evaluate(const RunConfig& config);
void run_compare(const RunConfig& config);
void run_explain(const RunConfig& config);

// Compare two serialized models on the run's test split (empty path =
// default artifact).
void run_compare_files(const RunConfig& config, const std::string& model_a_path,
                       const std::string& model_b_path);

// All stages in order, then the manifest (per-stage seeds + artifact
// hashes). Returns the run directory.
std::string run_pipeline(const RunConfig& config);

void write_manifest(const RunConfig& config);

}  // namespace tabstack::pipeline
