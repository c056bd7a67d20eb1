#include "tabstack/models.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tabstack/errors.hpp"
#include "tabstack/num.hpp"

namespace tabstack::models {

using nlohmann::json;

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::logistic: return "logistic";
    case ModelKind::forest: return "forest";
    case ModelKind::gbt_levelwise: return "gbt-levelwise";
    case ModelKind::gbt_leafwise: return "gbt-leafwise";
    case ModelKind::gbt_oblivious: return "gbt-oblivious";
    case ModelKind::stacking: return "stacking";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "logistic") return ModelKind::logistic;
  if (s == "forest") return ModelKind::forest;
  if (s == "gbt-levelwise") return ModelKind::gbt_levelwise;
  if (s == "gbt-leafwise") return ModelKind::gbt_leafwise;
  if (s == "gbt-oblivious") return ModelKind::gbt_oblivious;
  if (s == "stacking") return ModelKind::stacking;
  fail(Errc::invalid_config, "unknown model kind: " + s);
}

namespace {

double take_param(const ParamMap& params, const std::string& key, double fallback,
                  std::vector<std::string>* consumed = nullptr) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (consumed) consumed->push_back(key);
  return it->second;
}

}  // namespace

learners::ForestParams forest_params_from(const ParamMap& params, std::uint64_t seed) {
  learners::ForestParams p;
  p.n_trees = static_cast<std::size_t>(take_param(params, "n_trees", 100));
  p.max_depth = static_cast<int>(take_param(params, "max_depth", 14));
  p.min_samples_leaf = static_cast<std::size_t>(take_param(params, "min_samples_leaf", 1));
  p.feature_fraction = take_param(params, "feature_fraction", 0.5);
  p.bootstrap = take_param(params, "bootstrap", 1) != 0;
  p.seed = static_cast<std::uint64_t>(take_param(params, "seed", static_cast<double>(seed)));
  return p;
}

learners::GbtParams gbt_params_from(const ParamMap& params, std::uint64_t seed) {
  learners::GbtParams p;
  p.n_rounds = static_cast<int>(take_param(params, "n_rounds", 150));
  p.learning_rate = take_param(params, "learning_rate", 0.1);
  p.max_depth = static_cast<int>(take_param(params, "max_depth", 3));
  p.max_leaves = static_cast<int>(take_param(params, "max_leaves", 16));
  p.l2_lambda = take_param(params, "l2_lambda", 1.0);
  p.gamma = take_param(params, "gamma", 0.0);
  p.min_child_weight = take_param(params, "min_child_weight", 1.0);
  p.n_bins = static_cast<int>(take_param(params, "n_bins", 256));
  p.seed = static_cast<std::uint64_t>(take_param(params, "seed", static_cast<double>(seed)));
  return p;
}

learners::LogisticParams logistic_params_from(const ParamMap& params) {
  learners::LogisticParams p;
  p.l2_lambda = take_param(params, "l2_lambda", 1.0);
  p.tol = take_param(params, "tol", 1e-8);
  p.max_iter = static_cast<int>(take_param(params, "max_iter", 100));
  return p;
}

namespace {

ParamMap with_prefix(const ParamMap& params, const std::string& prefix) {
  ParamMap out;
  for (const auto& [key, value] : params)
    if (key.rfind(prefix, 0) == 0) out[key.substr(prefix.size())] = value;
  return out;
}

}  // namespace

ensemble::BaseParams base_params_from(const ParamMap& params, std::uint64_t seed) {
  ensemble::BaseParams base = ensemble::default_base_params();
  const auto merge_forest = with_prefix(params, "forest.");
  if (!merge_forest.empty()) base.forest = forest_params_from(merge_forest, seed);
  const auto merge_level = with_prefix(params, "gbt_levelwise.");
  if (!merge_level.empty()) base.gbt_levelwise = gbt_params_from(merge_level, seed);
  const auto merge_leaf = with_prefix(params, "gbt_leafwise.");
  if (!merge_leaf.empty()) {
    base.gbt_leafwise = gbt_params_from(merge_leaf, seed);
    base.gbt_leafwise.max_depth = static_cast<int>(
        take_param(merge_leaf, "max_depth", 8));
  }
  const auto merge_obl = with_prefix(params, "gbt_oblivious.");
  if (!merge_obl.empty()) {
    base.gbt_oblivious = gbt_params_from(merge_obl, seed);
    base.gbt_oblivious.max_depth =
        static_cast<int>(take_param(merge_obl, "max_depth", 4));
  }
  return base;
}

AnyModel fit_model(const ModelSpec& spec, const Matrix& X, const std::vector<int>& y,
                   std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::logistic:
      return learners::fit_logistic(X, y, logistic_params_from(spec.params));
    case ModelKind::forest:
      return learners::fit_random_forest(X, y, forest_params_from(spec.params, seed));
    case ModelKind::gbt_levelwise:
      return learners::fit_gbt(X, y, learners::GbtVariant::levelwise,
                               gbt_params_from(spec.params, seed));
    case ModelKind::gbt_leafwise: {
      auto p = gbt_params_from(spec.params, seed);
      if (!spec.params.count("max_depth")) p.max_depth = 8;
      return learners::fit_gbt(X, y, learners::GbtVariant::leafwise, p);
    }
    case ModelKind::gbt_oblivious: {
      auto p = gbt_params_from(spec.params, seed);
      if (!spec.params.count("max_depth")) p.max_depth = 4;
      return learners::fit_gbt(X, y, learners::GbtVariant::oblivious, p);
    }
    case ModelKind::stacking: {
      const auto base = base_params_from(spec.params, seed);
      const int k_oof = static_cast<int>(take_param(spec.params, "k_oof", 5));
      const int arity = static_cast<int>(take_param(spec.params, "meta_input_arity", 1));
      return ensemble::fit_stacking(X, y, base, k_oof, seed, arity);
    }
  }
  fail(Errc::invalid_config, "unhandled model kind");
}

std::vector<double> predict_proba(const AnyModel& model, const Matrix& X) {
  return std::visit(
      [&](const auto& m) -> std::vector<double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ensemble::StackedModel>)
          return ensemble::predict_stacking(m, X);
        else
          return learners::predict_proba(m, X);
      },
      model);
}

std::string model_kind_of(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, learners::LogisticModel>) return "logistic";
        else if constexpr (std::is_same_v<T, learners::ForestModel>) return "forest";
        else if constexpr (std::is_same_v<T, learners::GbtModel>)
          return std::string("gbt-") + learners::gbt_variant_name(m.variant);
        else if constexpr (std::is_same_v<T, learners::GnbModel>) return "gnb";
        else return "stacking";
      },
      model);
}

// JSON ------------------------------------------------------------------------

namespace {

constexpr int kFormatVersion = 1;

std::string num(double v) { return format_roundtrip(v); }
double unnum(const json& j) {
  return j.is_string() ? parse_double(j.get<std::string>()) : j.get<double>();
}

json tree_to_json(const learners::Tree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes)
    nodes.push_back({n.feature, num(n.threshold), n.left, n.right, num(n.leaf_value),
                     n.n_samples});
  return nodes;
}

learners::Tree tree_from_json(const json& nodes) {
  learners::Tree tree;
  for (const auto& n : nodes) {
    learners::TreeNode node;
    node.feature = n.at(0).get<std::int32_t>();
    node.threshold = unnum(n.at(1));
    node.left = n.at(2).get<std::int32_t>();
    node.right = n.at(3).get<std::int32_t>();
    node.leaf_value = unnum(n.at(4));
    node.n_samples = n.at(5).get<std::size_t>();
    tree.nodes.push_back(node);
  }
  return tree;
}

json forest_to_json(const learners::ForestModel& m) {
  json j;
  j["params"] = {{"n_trees", m.params.n_trees},
                 {"max_depth", m.params.max_depth},
                 {"min_samples_leaf", m.params.min_samples_leaf},
                 {"feature_fraction", num(m.params.feature_fraction)},
                 {"bootstrap", m.params.bootstrap},
                 {"seed", m.params.seed}};
  j["n_features"] = m.n_features;
  j["task"] = static_cast<int>(m.task);
  j["n_classes"] = m.n_classes;
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
  j["trees"] = std::move(trees);
  return j;
}

learners::ForestModel forest_from_json(const json& j) {
  learners::ForestModel m;
  const auto& p = j.at("params");
  m.params.n_trees = p.at("n_trees").get<std::size_t>();
  m.params.max_depth = p.at("max_depth").get<int>();
  m.params.min_samples_leaf = p.at("min_samples_leaf").get<std::size_t>();
  m.params.feature_fraction = unnum(p.at("feature_fraction"));
  m.params.bootstrap = p.at("bootstrap").get<bool>();
  m.params.seed = p.at("seed").get<std::uint64_t>();
  m.n_features = j.at("n_features").get<std::size_t>();
  m.task = static_cast<learners::detail::TreeTask>(j.at("task").get<int>());
  m.n_classes = j.at("n_classes").get<int>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  return m;
}

json gbt_to_json(const learners::GbtModel& m) {
  json j;
  j["variant"] = learners::gbt_variant_name(m.variant);
  j["params"] = {{"n_rounds", m.params.n_rounds},
                 {"learning_rate", num(m.params.learning_rate)},
                 {"max_depth", m.params.max_depth},
                 {"max_leaves", m.params.max_leaves},
                 {"l2_lambda", num(m.params.l2_lambda)},
                 {"gamma", num(m.params.gamma)},
                 {"min_child_weight", num(m.params.min_child_weight)},
                 {"n_bins", m.params.n_bins},
                 {"seed", m.params.seed}};
  j["n_features"] = m.n_features;
  j["base_score"] = num(m.base_score);
  json edges = json::array();
  for (const auto& feature_edges : m.bin_edges) {
    json fe = json::array();
    for (double e : feature_edges) fe.push_back(num(e));
    edges.push_back(std::move(fe));
  }
  j["bin_edges"] = std::move(edges);
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
  j["trees"] = std::move(trees);
  return j;
}

learners::GbtModel gbt_from_json(const json& j) {
  learners::GbtModel m;
  m.variant = learners::parse_gbt_variant(j.at("variant").get<std::string>());
  const auto& p = j.at("params");
  m.params.n_rounds = p.at("n_rounds").get<int>();
  m.params.learning_rate = unnum(p.at("learning_rate"));
  m.params.max_depth = p.at("max_depth").get<int>();
  m.params.max_leaves = p.at("max_leaves").get<int>();
  m.params.l2_lambda = unnum(p.at("l2_lambda"));
  m.params.gamma = unnum(p.at("gamma"));
  m.params.min_child_weight = unnum(p.at("min_child_weight"));
  m.params.n_bins = p.at("n_bins").get<int>();
  m.params.seed = p.at("seed").get<std::uint64_t>();
  m.n_features = j.at("n_features").get<std::size_t>();
  m.base_score = unnum(j.at("base_score"));
  for (const auto& fe : j.at("bin_edges")) {
    std::vector<double> edges;
    for (const auto& e : fe) edges.push_back(unnum(e));
    m.bin_edges.push_back(std::move(edges));
  }
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  return m;
}

json logistic_to_json(const learners::LogisticModel& m) {
  json j;
  json weights = json::array();
  for (double w : m.weights) weights.push_back(num(w));
  j["weights"] = std::move(weights);
  j["intercept"] = num(m.intercept);
  j["l2_lambda"] = num(m.l2_lambda);
  j["converged"] = m.converged;
  j["n_iter"] = m.n_iter;
  return j;
}

learners::LogisticModel logistic_from_json(const json& j) {
  learners::LogisticModel m;
  for (const auto& w : j.at("weights")) m.weights.push_back(unnum(w));
  m.intercept = unnum(j.at("intercept"));
  m.l2_lambda = unnum(j.at("l2_lambda"));
  m.converged = j.at("converged").get<bool>();
  m.n_iter = j.at("n_iter").get<int>();
  return m;
}

json gnb_to_json(const learners::GnbModel& m) {
  json j;
  json priors = json::array();
  for (double p : m.class_priors) priors.push_back(num(p));
  j["class_priors"] = std::move(priors);
  const auto matrix_out = [](const std::vector<std::vector<double>>& rows) {
    json out = json::array();
    for (const auto& row : rows) {
      json r = json::array();
      for (double v : row) r.push_back(num(v));
      out.push_back(std::move(r));
    }
    return out;
  };
  j["means"] = matrix_out(m.means);
  j["variances"] = matrix_out(m.variances);
  j["var_smoothing"] = num(m.var_smoothing);
  return j;
}

learners::GnbModel gnb_from_json(const json& j) {
  learners::GnbModel m;
  for (const auto& p : j.at("class_priors")) m.class_priors.push_back(unnum(p));
  const auto matrix_in = [](const json& rows) {
    std::vector<std::vector<double>> out;
    for (const auto& row : rows) {
      std::vector<double> r;
      for (const auto& v : row) r.push_back(unnum(v));
      out.push_back(std::move(r));
    }
    return out;
  };
  m.means = matrix_in(j.at("means"));
  m.variances = matrix_in(j.at("variances"));
  m.var_smoothing = unnum(j.at("var_smoothing"));
  return m;
}

json stacked_to_json(const ensemble::StackedModel& m) {
  json j;
  j["forest"] = forest_to_json(m.forest);
  j["gbt_levelwise"] = gbt_to_json(m.gbt_levelwise);
  j["gbt_leafwise"] = gbt_to_json(m.gbt_leafwise);
  j["gbt_oblivious"] = gbt_to_json(m.gbt_oblivious);
  j["meta"] = gnb_to_json(m.meta);
  j["k_oof"] = m.k_oof;
  j["oof_seed"] = m.oof_seed;
  j["meta_input_arity"] = m.meta_input_arity;
  j["n_features"] = m.n_features;
  return j;
}

ensemble::StackedModel stacked_from_json(const json& j) {
  ensemble::StackedModel m;
  m.forest = forest_from_json(j.at("forest"));
  m.gbt_levelwise = gbt_from_json(j.at("gbt_levelwise"));
  m.gbt_leafwise = gbt_from_json(j.at("gbt_leafwise"));
  m.gbt_oblivious = gbt_from_json(j.at("gbt_oblivious"));
  m.meta = gnb_from_json(j.at("meta"));
  m.k_oof = j.at("k_oof").get<int>();
  m.oof_seed = j.at("oof_seed").get<std::uint64_t>();
  m.meta_input_arity = j.at("meta_input_arity").get<int>();
  m.n_features = j.at("n_features").get<std::size_t>();
  m.params.forest = m.forest.params;
  m.params.gbt_levelwise = m.gbt_levelwise.params;
  m.params.gbt_leafwise = m.gbt_leafwise.params;
  m.params.gbt_oblivious = m.gbt_oblivious.params;
  return m;
}

}  // namespace

std::string to_json(const AnyModel& model) {
  json j;
  j["format"] = "tabstack-model";
  j["version"] = kFormatVersion;
  j["kind"] = model_kind_of(model);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, learners::LogisticModel>) j["model"] = logistic_to_json(m);
        else if constexpr (std::is_same_v<T, learners::ForestModel>) j["model"] = forest_to_json(m);
        else if constexpr (std::is_same_v<T, learners::GbtModel>) j["model"] = gbt_to_json(m);
        else if constexpr (std::is_same_v<T, learners::GnbModel>) j["model"] = gnb_to_json(m);
        else j["model"] = stacked_to_json(m);
      },
      model);
  return j.dump(1);
}

AnyModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(Errc::type_parse, std::string("model JSON parse error: ") + e.what());
  }
  require(j.value("format", "") == "tabstack-model", Errc::invalid_spec,
          "not a tabstack model file");
  require(j.value("version", 0) == kFormatVersion, Errc::invalid_spec,
          "unsupported model format version");
  const std::string kind = j.at("kind").get<std::string>();
  const json& m = j.at("model");
  if (kind == "logistic") return logistic_from_json(m);
  if (kind == "forest") return forest_from_json(m);
  if (kind == "gbt-levelwise" || kind == "gbt-leafwise" || kind == "gbt-oblivious")
    return gbt_from_json(m);
  if (kind == "gnb") return gnb_from_json(m);
  if (kind == "stacking") return stacked_from_json(m);
  fail(Errc::invalid_spec, "unknown model kind in file: " + kind);
}

void save_model(const AnyModel& model, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write model file: " + path);
  out << to_json(model) << "\n";
}

AnyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open model file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace tabstack::models
