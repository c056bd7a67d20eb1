#include "tabstack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tabstack/errors.hpp"
#include "tabstack/eval.hpp"
#include "tabstack/num.hpp"
#include "tabstack/rng.hpp"

namespace tabstack::synth {

using data::Domain;
using data::Kind;

namespace {

void validate_spec(const SynthSpec& spec) {
  require(spec.n_rows >= 10, Errc::invalid_spec, "need at least 10 rows");
  require(!spec.columns.empty(), Errc::invalid_spec, "no columns declared");
  std::map<std::string, const ColumnGen*> by_name;
  for (const auto& col : spec.columns) {
    require(by_name.emplace(col.name, &col).second, Errc::invalid_spec,
            "duplicate column '" + col.name + "'");
    if (col.kind == Kind::categorical) {
      require(col.categories.size() >= 2, Errc::invalid_spec,
              "categorical column '" + col.name + "' needs >= 2 categories");
      require(col.category_probs.size() == col.categories.size(), Errc::invalid_spec,
              "category_probs size mismatch in '" + col.name + "'");
      require(col.category_coefficients.empty() ||
                  col.category_coefficients.size() == col.categories.size(),
              Errc::invalid_spec, "category_coefficients size mismatch in '" + col.name + "'");
    }
  }
  for (const auto& col : spec.columns) {
    if (col.clone_of.empty()) continue;
    const auto it = by_name.find(col.clone_of);
    require(it != by_name.end(), Errc::invalid_spec,
            "clone source '" + col.clone_of + "' does not exist");
    require(it->second->kind == col.kind, Errc::invalid_spec,
            "clone '" + col.name + "' must match its source kind");
    require(it->second->clone_of.empty(), Errc::invalid_spec,
            "clone chains are not supported ('" + col.name + "')");
  }
  for (const auto& ix : spec.interactions) {
    const auto a = by_name.find(ix.a), b = by_name.find(ix.b);
    require(a != by_name.end() && b != by_name.end(), Errc::invalid_spec,
            "interaction references a missing column");
    require(a->second->kind == Kind::continuous && b->second->kind == Kind::continuous,
            Errc::invalid_spec, "interactions are continuous x continuous");
  }
}

bool has_signal(const ColumnGen& col) {
  if (col.kind == Kind::continuous) return col.coefficient != 0.0;
  for (double c : col.category_coefficients)
    if (c != 0.0) return true;
  return false;
}

}  // namespace

std::pair<data::Table, GroundTruth> generate(const SynthSpec& spec) {
  validate_spec(spec);
  Rng rng(derive_seed(spec.seed, 0x5e9dULL));
  const std::size_t n = spec.n_rows;

  data::Table table;
  table.n_rows = n;
  GroundTruth truth;
  truth.eta.assign(n, 0.0);

  std::map<std::string, std::size_t> index_of;

  // Pass 1: independent draws (clone sources included).
  for (const auto& col : spec.columns) {
    data::ColumnSpec cs;
    cs.name = col.name;
    cs.domain = col.domain;
    cs.kind = col.kind;
    cs.categories = col.categories;
    data::Column values;
    if (col.kind == Kind::continuous) {
      values.num.resize(n);
      if (col.clone_of.empty())
        for (auto& v : values.num) v = rng.normal();
    } else {
      values.cat.resize(n);
      if (col.clone_of.empty()) {
        std::vector<double> cdf(col.category_probs.size());
        double acc = 0;
        for (std::size_t k = 0; k < cdf.size(); ++k) {
          acc += col.category_probs[k];
          cdf[k] = acc;
        }
        for (auto& v : values.cat) {
          const double u = rng.uniform01() * acc;
          v = static_cast<std::int32_t>(
              std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
          if (v >= static_cast<std::int32_t>(cdf.size()))
            v = static_cast<std::int32_t>(cdf.size()) - 1;
        }
      }
    }
    index_of[col.name] = table.specs.size();
    table.specs.push_back(std::move(cs));
    table.columns.push_back(std::move(values));
    table.missing.emplace_back(n, 0);
  }

  // Pass 2: clones.
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    const auto& col = spec.columns[c];
    if (col.clone_of.empty()) continue;
    const std::size_t src = index_of.at(col.clone_of);
    if (col.kind == Kind::continuous) {
      for (std::size_t r = 0; r < n; ++r)
        table.columns[c].num[r] =
            table.columns[src].num[r] + col.clone_noise_sd * rng.normal();
    } else {
      const auto n_cats = static_cast<std::int32_t>(col.categories.size());
      for (std::size_t r = 0; r < n; ++r) {
        std::int32_t v = table.columns[src].cat[r];
        if (v >= n_cats) v = n_cats - 1;
        if (rng.uniform01() < col.clone_flip_prob)
          v = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n_cats)));
        table.columns[c].cat[r] = v;
      }
    }
    truth.clones[col.name] = col.clone_of;
  }

  // Pass 3: latent risk.
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    const auto& col = spec.columns[c];
    if (col.kind == Kind::continuous) {
      if (col.coefficient != 0.0) {
        truth.coefficients[col.name] = col.coefficient;
        for (std::size_t r = 0; r < n; ++r)
          truth.eta[r] += col.coefficient * table.columns[c].num[r];
      }
    } else if (!col.category_coefficients.empty()) {
      for (std::size_t k = 0; k < col.categories.size(); ++k)
        if (col.category_coefficients[k] != 0.0)
          truth.coefficients[col.name + "=" + col.categories[k]] =
              col.category_coefficients[k];
      for (std::size_t r = 0; r < n; ++r)
        truth.eta[r] +=
            col.category_coefficients[static_cast<std::size_t>(table.columns[c].cat[r])];
    }
    if (col.clone_of.empty()) {
      (has_signal(col) ? truth.signal_columns : truth.noise_columns).push_back(col.name);
    }
  }
  for (const auto& ix : spec.interactions) {
    const auto& a = table.columns[index_of.at(ix.a)].num;
    const auto& b = table.columns[index_of.at(ix.b)].num;
    truth.coefficients[ix.a + "*" + ix.b] = ix.coefficient;
    if (ix.thresholded) {
      for (std::size_t r = 0; r < n; ++r)
        truth.eta[r] += a[r] > 0 && b[r] > 0 ? ix.coefficient : 0.0;
    } else {
      for (std::size_t r = 0; r < n; ++r) truth.eta[r] += ix.coefficient * a[r] * b[r];
    }
  }

  // Pass 4: integer LOS from the latent count model, truncated to [1, 150].
  {
    data::ColumnSpec cs;
    cs.name = spec.los_name;
    cs.domain = Domain::outcome;
    cs.kind = Kind::continuous;
    data::Column los;
    los.num.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      double log_mean = spec.log_mean_intercept + spec.risk_scale * truth.eta[r] +
                        spec.overdispersion_sd * rng.normal();
      log_mean = std::min(log_mean, std::log(120.0));
      const double draw = 1.0 + static_cast<double>(rng.poisson(std::exp(log_mean)));
      los.num[r] = std::clamp(draw, 1.0, 150.0);
    }
    table.specs.push_back(std::move(cs));
    table.columns.push_back(std::move(los));
    table.missing.emplace_back(n, 0);
  }

  // Pass 5: MCAR missingness.
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    const auto& col = spec.columns[c];
    if (col.missing_fraction <= 0.0) continue;
    for (std::size_t r = 0; r < n; ++r) {
      if (rng.uniform01() >= col.missing_fraction) continue;
      table.missing[c][r] = 1;
      if (col.kind == Kind::continuous)
        table.columns[c].num[r] = std::numeric_limits<double>::quiet_NaN();
      else
        table.columns[c].cat[r] = -1;
    }
  }

  // Oracle quantities.
  const auto outcome =
      data::dichotomize_outcome(table, {spec.los_name, 0.75, "prolonged_los"});
  truth.threshold_days = outcome.threshold_days;
  truth.auc_eta_vs_outcome = eval::auc(truth.eta, outcome.labels);
  return {std::move(table), std::move(truth)};
}

// Named specs ------------------------------------------------------------------

namespace {

// Balanced-ish two-level column with a planted effect on the second level.
ColumnGen binary_col(std::string name, Domain domain, double p_yes, double coef_yes) {
  ColumnGen col;
  col.name = std::move(name);
  col.domain = domain;
  col.kind = Kind::categorical;
  col.categories = {"no", "yes"};
  col.category_probs = {1.0 - p_yes, p_yes};
  col.category_coefficients = {0.0, coef_yes};
  return col;
}

ColumnGen continuous_col(std::string name, Domain domain, double coef) {
  ColumnGen col;
  col.name = std::move(name);
  col.domain = domain;
  col.kind = Kind::continuous;
  col.coefficient = coef;
  return col;
}

// Audit-like shape: a handful of patient columns, a clinical block with the
// strongest effects, and a wide system block that is mostly noise.
SynthSpec audit_like(const std::string& name, std::size_t n_rows, std::size_t n_patient,
                     std::size_t n_clinical, std::size_t n_system) {
  SynthSpec spec;
  spec.name = name;
  spec.n_rows = n_rows;
  spec.seed = 0;

  // patient block: 2 continuous + binaries
  spec.columns.push_back(continuous_col("age_std", Domain::patient, 0.30));
  spec.columns.push_back(continuous_col("prior_function_score", Domain::patient, -0.25));
  spec.columns.push_back(binary_col("male_sex", Domain::patient, 0.53, 0.0));
  spec.columns.push_back(binary_col("prior_stroke", Domain::patient, 0.2, 0.28));
  for (std::size_t i = spec.columns.size(); i < n_patient; ++i)
    spec.columns.push_back(
        binary_col("patient_noise_" + std::to_string(i), Domain::patient, 0.35, 0.0));

  // clinical block: strong planted effects + a couple of noise columns
  const std::size_t clinical_start = spec.columns.size();
  spec.columns.push_back(binary_col("rehab_assessment", Domain::clinical, 0.45, 0.55));
  spec.columns.push_back(binary_col("urinary_incontinence_72h", Domain::clinical, 0.3, 0.50));
  spec.columns.push_back(binary_col("stroke_unit_90pct", Domain::clinical, 0.55, -0.45));
  spec.columns.push_back(binary_col("unable_to_walk", Domain::clinical, 0.4, 0.40));
  spec.columns.push_back(binary_col("discharged_private_residence", Domain::clinical, 0.5, -0.50));
  spec.columns.push_back(binary_col("aphasia", Domain::clinical, 0.25, 0.30));
  spec.columns.push_back(binary_col("fever_72h", Domain::clinical, 0.2, 0.30));
  spec.columns.push_back(binary_col("arrival_by_ambulance", Domain::clinical, 0.6, 0.28));
  spec.columns.push_back(binary_col("seen_physiotherapist", Domain::clinical, 0.7, 0.28));
  spec.columns.push_back(continuous_col("severity_index", Domain::clinical, 0.35));
  {
    // planted clone cluster for the redundancy-elimination oracles
    ColumnGen clone1 = continuous_col("severity_index_copy1", Domain::clinical, 0.0);
    clone1.clone_of = "severity_index";
    ColumnGen clone2 = continuous_col("severity_index_copy2", Domain::clinical, 0.0);
    clone2.clone_of = "severity_index";
    spec.columns.push_back(std::move(clone1));
    spec.columns.push_back(std::move(clone2));
  }
  for (std::size_t i = spec.columns.size() - clinical_start; i < n_clinical; ++i)
    spec.columns.push_back(
        binary_col("clinical_noise_" + std::to_string(i), Domain::clinical, 0.3, 0.0));

  // system block: a few real effects, rebalancing targets, and noise
  const std::size_t system_start = spec.columns.size();
  spec.columns.push_back(binary_col("stroke_coordinator", Domain::system, 0.5, -0.30));
  spec.columns.push_back(binary_col("neurologist_on_staff", Domain::system, 0.6, 0.26));
  spec.columns.push_back(continuous_col("stroke_unit_beds_std", Domain::system, 0.22));
  {
    ColumnGen beds;  // ordered range labels with a planted rare first level
    beds.name = "hospital_beds_band";
    beds.domain = Domain::system;
    beds.kind = Kind::categorical;
    beds.categories = {"<50", "50-99", "100-199", "200-499", ">500"};
    beds.category_probs = {0.0071, 0.0753, 0.30, 0.45, 0.1676};
    beds.category_coefficients = {0.0, 0.0, 0.0, -0.28, -0.38};
    spec.columns.push_back(std::move(beds));
  }
  {
    ColumnGen icu = binary_col("has_icu", Domain::system, 0.983, 0.0);  // 98.3% dominant
    spec.columns.push_back(std::move(icu));
  }
  {
    ColumnGen partial = binary_col("telemetry_available", Domain::system, 0.5, 0.0);
    partial.missing_fraction = 0.01;  // simple-imputation tier
    spec.columns.push_back(std::move(partial));
  }
  {
    ColumnGen f1 = continuous_col("admissions_volume_std", Domain::system, 0.24);
    f1.missing_fraction = 0.06;  // forest-imputation tier
    spec.columns.push_back(std::move(f1));
    ColumnGen f2 = binary_col("rapid_triage_protocol", Domain::system, 0.4, 0.28);
    f2.missing_fraction = 0.04;
    spec.columns.push_back(std::move(f2));
  }
  {
    ColumnGen dropme = binary_col("legacy_field", Domain::system, 0.5, 0.0);
    dropme.missing_fraction = 0.30;  // exceeds the 15% cap
    spec.columns.push_back(std::move(dropme));
  }
  for (std::size_t i = spec.columns.size() - system_start; i < n_system; ++i)
    spec.columns.push_back(
        binary_col("system_noise_" + std::to_string(i), Domain::system, 0.45, 0.0));

  return spec;
}

}  // namespace

SynthSpec default_spec(const std::string& name) {
  if (name == "ischaemic-like") {
    SynthSpec spec = audit_like(name, 12575, 7, 25, 57);
    spec.log_mean_intercept = 1.04;
    spec.risk_scale = 0.75;
    spec.overdispersion_sd = 0.25;
    return spec;
  }
  if (name == "haemorrhagic-like") {
    SynthSpec spec = audit_like(name, 1970, 7, 20, 56);
    spec.log_mean_intercept = 1.27;
    spec.risk_scale = 0.75;
    spec.overdispersion_sd = 0.30;
    return spec;
  }
  if (name == "tiny") {
    SynthSpec spec;
    spec.name = name;
    spec.n_rows = 200;
    spec.columns.push_back(continuous_col("age_std", Domain::patient, 0.4));
    spec.columns.push_back(continuous_col("severity_index", Domain::clinical, 0.5));
    spec.columns.push_back(binary_col("rehab_assessment", Domain::clinical, 0.45, 0.6));
    spec.columns.push_back(binary_col("stroke_unit_90pct", Domain::clinical, 0.55, -0.5));
    spec.columns.push_back(binary_col("unable_to_walk", Domain::clinical, 0.4, 0.45));
    spec.columns.push_back(binary_col("stroke_coordinator", Domain::system, 0.5, -0.35));
    spec.columns.push_back(binary_col("noise_a", Domain::system, 0.4, 0.0));
    spec.columns.push_back(continuous_col("noise_b", Domain::patient, 0.0));
    return spec;
  }
  if (name == "benchmark") {
    // nonlinear signal so the tree ensemble has something to gain over the
    // linear baseline
    SynthSpec spec;
    spec.name = name;
    spec.n_rows = 6000;
    spec.log_mean_intercept = 1.5;
    spec.risk_scale = 0.6;
    spec.overdispersion_sd = 0.25;
    spec.columns.push_back(continuous_col("risk_a", Domain::clinical, 0.35));
    spec.columns.push_back(continuous_col("risk_b", Domain::clinical, 0.30));
    spec.columns.push_back(continuous_col("risk_c", Domain::patient, 0.25));
    spec.columns.push_back(binary_col("flag_a", Domain::clinical, 0.45, 0.45));
    spec.columns.push_back(binary_col("flag_b", Domain::clinical, 0.35, -0.40));
    spec.columns.push_back(binary_col("flag_c", Domain::system, 0.5, 0.30));
    spec.columns.push_back(continuous_col("noise_a", Domain::system, 0.0));
    spec.columns.push_back(continuous_col("noise_b", Domain::patient, 0.0));
    spec.columns.push_back(binary_col("noise_c", Domain::system, 0.4, 0.0));
    spec.columns.push_back(binary_col("noise_d", Domain::clinical, 0.3, 0.0));
    spec.interactions.push_back({"risk_a", "risk_b", 0.35, false});
    spec.interactions.push_back({"risk_a", "risk_c", 0.85, true});
    spec.interactions.push_back({"risk_b", "risk_c", -0.70, true});
    return spec;
  }
  fail(Errc::invalid_config, "unknown synthetic spec: " + name);
}

std::vector<std::string> default_spec_names() {
  return {"ischaemic-like", "haemorrhagic-like", "tiny", "benchmark"};
}

void save_ground_truth(const GroundTruth& truth, const std::string& path) {
  nlohmann::json j;
  j["signal_columns"] = truth.signal_columns;
  j["noise_columns"] = truth.noise_columns;
  j["clones"] = truth.clones;
  nlohmann::json coefs = nlohmann::json::object();
  for (const auto& [key, value] : truth.coefficients) coefs[key] = format_roundtrip(value);
  j["coefficients"] = std::move(coefs);
  j["threshold_days"] = truth.threshold_days;
  j["auc_eta_vs_outcome"] = truth.auc_eta_vs_outcome;
  nlohmann::json eta = nlohmann::json::array();
  for (double v : truth.eta) eta.push_back(format_roundtrip(v));
  j["eta"] = std::move(eta);
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write ground truth: " + path);
  out << j.dump(1) << "\n";
}

}  // namespace tabstack::synth
