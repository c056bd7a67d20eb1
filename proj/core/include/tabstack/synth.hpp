#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tabstack/data.hpp"

namespace tabstack::synth {

struct ColumnGen {
  std::string name;
  data::Domain domain = data::Domain::clinical;
  data::Kind kind = data::Kind::continuous;
  // continuous
  double coefficient = 0.0;
  // categorical
  std::vector<std::string> categories;
  std::vector<double> category_probs;
  std::vector<double> category_coefficients;  // per category; empty = all zero
  // contamination / structure
  double missing_fraction = 0.0;  // MCAR
  std::string clone_of;           // near-copy of another column
  double clone_noise_sd = 0.3;    // continuous clones
  double clone_flip_prob = 0.03;  // categorical clones
};

struct InteractionGen {
  std::string a, b;  // continuous columns
  double coefficient = 0.0;
  // false: coef * a * b; true: coef * [a > 0] * [b > 0] (sharp box effect)
  bool thresholded = false;
};

struct SynthSpec {
  std::string name = "custom";
  std::size_t n_rows = 1000;
  std::uint64_t seed = 0;
  std::vector<ColumnGen> columns;
  std::vector<InteractionGen> interactions;
  std::string los_name = "los_days";
  // LOS ~ 1 + Poisson(exp(clamped log-mean)), log-mean = intercept +
  // risk_scale * eta + Normal(0, overdispersion_sd), truncated to [1, 150].
  double log_mean_intercept = 1.45;
  double risk_scale = 0.55;
  double overdispersion_sd = 0.30;
};

struct GroundTruth {
  std::vector<std::string> signal_columns;       // nonzero planted coefficient
  std::vector<std::string> noise_columns;        // zero coefficient, not a clone
  std::map<std::string, std::string> clones;     // clone -> source
  std::map<std::string, double> coefficients;    // "col" or "col=category"
  std::vector<double> eta;                       // latent risk per row
  double threshold_days = 0.0;                   // 75th-percentile rule on LOS
  double auc_eta_vs_outcome = 0.0;               // oracle discrimination
};

// Draws features, builds the planted linear predictor, samples integer LOS
// from the latent count model, applies MCAR missingness, and returns the
// ground truth for oracle tests. The LOS column carries domain=outcome.
std::pair<data::Table, GroundTruth> generate(const SynthSpec& spec);

// "ischaemic-like" (n=12575, 7/25/57 columns), "haemorrhagic-like" (n=1970,
// 7/20/56), "tiny" (n=200, 8 columns), "benchmark" (n=6000, nonlinear
// signal for the model-comparison tests).
SynthSpec default_spec(const std::string& name);
std::vector<std::string> default_spec_names();

void save_ground_truth(const GroundTruth& truth, const std::string& path);

}  // namespace tabstack::synth
