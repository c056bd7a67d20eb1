#include "tabstack/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "tabstack/csv.hpp"
#include "tabstack/errors.hpp"
#include "tabstack/num.hpp"
#include "tabstack/rng.hpp"

namespace tabstack::data {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

const char* domain_name(Domain d) {
  switch (d) {
    case Domain::patient: return "patient";
    case Domain::clinical: return "clinical";
    case Domain::system: return "system";
    case Domain::outcome: return "outcome";
  }
  return "?";
}

const char* kind_name(Kind k) {
  return k == Kind::continuous ? "continuous" : "categorical";
}

Domain parse_domain(const std::string& s) {
  if (s == "patient") return Domain::patient;
  if (s == "clinical") return Domain::clinical;
  if (s == "system") return Domain::system;
  if (s == "outcome") return Domain::outcome;
  fail(Errc::invalid_spec, "unknown domain tag: " + s);
}

Kind parse_kind(const std::string& s) {
  if (s == "continuous") return Kind::continuous;
  if (s == "categorical") return Kind::categorical;
  fail(Errc::invalid_spec, "unknown column kind: " + s);
}

std::optional<std::size_t> Table::find_column(const std::string& name) const {
  for (std::size_t i = 0; i < specs.size(); ++i)
    if (specs[i].name == name) return i;
  return std::nullopt;
}

std::size_t Table::column_index(const std::string& name) const {
  const auto idx = find_column(name);
  if (!idx) fail(Errc::unknown_column, "no column named '" + name + "'");
  return *idx;
}

std::size_t Table::missing_count(std::size_t col) const {
  std::size_t n = 0;
  for (const auto flag : missing[col]) n += flag != 0;
  return n;
}

void validate(const Table& table) {
  std::set<std::string> names;
  std::size_t n_outcomes = 0;
  for (const auto& spec : table.specs) {
    require(names.insert(spec.name).second, Errc::invalid_spec,
            "duplicate column name '" + spec.name + "'");
    if (spec.domain == Domain::outcome) ++n_outcomes;
  }
  require(n_outcomes <= 1, Errc::invalid_spec, "more than one outcome column");
  require(table.columns.size() == table.specs.size() &&
              table.missing.size() == table.specs.size(),
          Errc::invalid_spec, "column storage does not match specs");
  for (std::size_t c = 0; c < table.specs.size(); ++c) {
    const auto& spec = table.specs[c];
    const auto& col = table.columns[c];
    const std::size_t len =
        spec.kind == Kind::continuous ? col.num.size() : col.cat.size();
    require(len == table.n_rows && table.missing[c].size() == table.n_rows,
            Errc::length_mismatch, "column '" + spec.name + "' has wrong length");
    for (std::size_t r = 0; r < table.n_rows; ++r) {
      const bool miss = table.missing[c][r] != 0;
      if (spec.kind == Kind::continuous) {
        require(miss == std::isnan(col.num[r]), Errc::invalid_spec,
                "missing mask out of sync in '" + spec.name + "'");
      } else {
        require(miss == (col.cat[r] < 0), Errc::invalid_spec,
                "missing mask out of sync in '" + spec.name + "'");
        if (!miss)
          require(col.cat[r] < static_cast<std::int32_t>(spec.categories.size()),
                  Errc::unknown_category, "category index out of range in '" + spec.name + "'");
      }
    }
  }
}

Table subset(const Table& table, std::span<const std::size_t> rows) {
  Table out;
  out.specs = table.specs;
  out.n_rows = rows.size();
  out.columns.resize(table.columns.size());
  out.missing.resize(table.columns.size());
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const auto& spec = table.specs[c];
    out.missing[c].resize(rows.size());
    if (spec.kind == Kind::continuous) {
      out.columns[c].num.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        out.columns[c].num[i] = table.columns[c].num[rows[i]];
        out.missing[c][i] = table.missing[c][rows[i]];
      }
    } else {
      out.columns[c].cat.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        out.columns[c].cat[i] = table.columns[c].cat[rows[i]];
        out.missing[c][i] = table.missing[c][rows[i]];
      }
    }
  }
  return out;
}

Table select_columns(const Table& table, const std::vector<std::string>& names) {
  std::set<std::string> wanted(names.begin(), names.end());
  for (const auto& name : names) table.column_index(name);  // existence check
  Table out;
  out.n_rows = table.n_rows;
  for (std::size_t c = 0; c < table.specs.size(); ++c) {
    if (!wanted.count(table.specs[c].name)) continue;
    out.specs.push_back(table.specs[c]);
    out.columns.push_back(table.columns[c]);
    out.missing.push_back(table.missing[c]);
  }
  return out;
}

EncodedMatrix one_hot_encode(const Table& table, EncodeMode mode) {
  for (std::size_t c = 0; c < table.n_cols(); ++c)
    require(table.missing_count(c) == 0, Errc::missing_cells_present,
            "column '" + table.specs[c].name + "' still has missing cells");

  EncodedMatrix out;
  struct Emit {
    std::size_t col;
    std::int32_t category;  // -1 = continuous copy
  };
  std::vector<Emit> emits;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    const auto& spec = table.specs[c];
    if (spec.domain == Domain::outcome) continue;
    if (spec.kind == Kind::continuous) {
      emits.push_back({c, -1});
      out.feature_names.push_back(spec.name);
      out.source_column.push_back(spec.name);
    } else {
      // Lexicographic category order keeps encoded feature indices stable
      // regardless of declared order.
      std::vector<std::int32_t> order(spec.categories.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int32_t>(i);
      std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        return spec.categories[a] < spec.categories[b];
      });
      const std::size_t first = mode == EncodeMode::drop_first ? 1 : 0;
      for (std::size_t i = first; i < order.size(); ++i) {
        emits.push_back({c, order[i]});
        out.feature_names.push_back(spec.name + "=" + spec.categories[order[i]]);
        out.source_column.push_back(spec.name);
      }
    }
  }

  out.X = Matrix(table.n_rows, emits.size());
  for (std::size_t r = 0; r < table.n_rows; ++r) {
    for (std::size_t j = 0; j < emits.size(); ++j) {
      const auto& e = emits[j];
      if (e.category < 0) {
        out.X(r, j) = table.columns[e.col].num[r];
      } else {
        out.X(r, j) = table.columns[e.col].cat[r] == e.category ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

double percentile(std::span<const double> values, double q) {
  require(!values.empty(), Errc::empty_input, "percentile of empty array");
  require(q > 0.0 && q < 1.0, Errc::invalid_config, "percentile q must be in (0,1)");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

OutcomeResult dichotomize_outcome(const Table& table, const OutcomeSpec& spec,
                                  std::span<const std::size_t> rows) {
  const std::size_t col = table.column_index(spec.los_column);
  require(table.specs[col].kind == Kind::continuous, Errc::invalid_spec,
          "outcome column must be continuous");
  require(table.missing_count(col) == 0, Errc::missing_cells_present,
          "outcome column has missing values");
  const auto& values = table.columns[col].num;
  require(!values.empty(), Errc::empty_input, "empty outcome column");

  std::vector<double> basis;
  if (rows.empty()) {
    basis = values;
  } else {
    basis.reserve(rows.size());
    for (std::size_t r : rows) basis.push_back(values[r]);
  }
  const double t = percentile(basis, spec.percentile);

  OutcomeResult out;
  out.threshold_value = t;
  bool all_integral = true;
  for (double v : basis)
    if (v != std::floor(v)) { all_integral = false; break; }
  out.threshold_days = all_integral ? std::floor(t) + 1.0 : t;

  out.labels.resize(values.size());
  std::size_t positives = 0;
  for (std::size_t r = 0; r < values.size(); ++r) {
    out.labels[r] = values[r] > t ? 1 : 0;
    positives += out.labels[r];
  }
  require(positives != 0 && positives != values.size(), Errc::degenerate_outcome,
          "all rows fall on one side of the outcome threshold");
  return out;
}

namespace {

// Largest-remainder rounding of per-class train counts so the train total is
// exactly round(n * fraction).
std::vector<std::size_t> per_class_train_counts(const std::vector<std::size_t>& class_sizes,
                                                double fraction) {
  std::size_t total = 0;
  for (auto s : class_sizes) total += s;
  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(total) * fraction));
  std::vector<std::size_t> counts(class_sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;  // (-remainder, class)
  std::size_t allocated = 0;
  for (std::size_t c = 0; c < class_sizes.size(); ++c) {
    const double exact = static_cast<double>(class_sizes[c]) * fraction;
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    allocated += counts[c];
    remainders.push_back({-(exact - std::floor(exact)), c});
  }
  std::sort(remainders.begin(), remainders.end());
  for (auto& [neg_rem, c] : remainders) {
    if (allocated >= target) break;
    if (counts[c] < class_sizes[c]) {
      ++counts[c];
      ++allocated;
    }
  }
  return counts;
}

}  // namespace

SplitIndices stratified_split(const std::vector<int>& labels, double train_fraction,
                              std::uint64_t seed) {
  require(!labels.empty(), Errc::empty_input, "empty label array");
  require(train_fraction > 0.0 && train_fraction < 1.0, Errc::invalid_config,
          "train_fraction must be in (0,1)");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] ? pos : neg).push_back(i);
  require(!pos.empty() && !neg.empty(), Errc::single_class,
          "stratified split needs both classes");

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> classes = {std::move(neg), std::move(pos)};
  for (auto& cls : classes) rng.shuffle(cls);

  const auto counts = per_class_train_counts({classes[0].size(), classes[1].size()},
                                             train_fraction);
  SplitIndices out;
  out.seed = seed;
  out.train_fraction = train_fraction;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (std::size_t i = 0; i < classes[c].size(); ++i)
      (i < counts[c] ? out.train : out.test).push_back(classes[c][i]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed) {
  require(k >= 2, Errc::invalid_config, "need at least 2 folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] ? pos : neg).push_back(i);
  require(!pos.empty() && !neg.empty(), Errc::single_class,
          "stratified folds need both classes");

  Rng rng(seed);
  std::vector<int> fold_of(labels.size(), -1);
  for (auto* cls : {&neg, &pos}) {
    rng.shuffle(*cls);
    for (std::size_t i = 0; i < cls->size(); ++i)
      fold_of[(*cls)[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return fold_of;
}

// Schema sidecar --------------------------------------------------------------

std::vector<ColumnSpec> load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open schema file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    fail(Errc::type_parse, std::string("schema JSON parse error: ") + e.what());
  }
  require(doc.is_array(), Errc::invalid_spec, "schema must be a JSON array");
  std::vector<ColumnSpec> specs;
  for (const auto& item : doc) {
    ColumnSpec spec;
    spec.name = item.at("name").get<std::string>();
    spec.domain = parse_domain(item.at("domain").get<std::string>());
    spec.kind = parse_kind(item.at("kind").get<std::string>());
    if (item.contains("categories"))
      spec.categories = item.at("categories").get<std::vector<std::string>>();
    if (spec.kind == Kind::categorical)
      require(spec.categories.size() >= 2, Errc::invalid_spec,
              "categorical column '" + spec.name + "' needs >= 2 categories");
    specs.push_back(std::move(spec));
  }
  return specs;
}

void save_schema(const std::vector<ColumnSpec>& specs, const std::string& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& spec : specs) {
    nlohmann::json item;
    item["name"] = spec.name;
    item["domain"] = domain_name(spec.domain);
    item["kind"] = kind_name(spec.kind);
    if (spec.kind == Kind::categorical) item["categories"] = spec.categories;
    doc.push_back(std::move(item));
  }
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write schema file: " + path);
  out << doc.dump(2) << "\n";
}

// CSV -------------------------------------------------------------------------

Table load_csv(const std::string& path, const std::vector<ColumnSpec>& schema) {
  const auto rows = csv::parse_file(path);
  require(!rows.empty(), Errc::empty_input, "CSV file has no header: " + path);
  const auto& header = rows.front();
  require(header.size() == schema.size(), Errc::unknown_column,
          "CSV has " + std::to_string(header.size()) + " columns, schema declares " +
              std::to_string(schema.size()));
  for (std::size_t c = 0; c < schema.size(); ++c)
    require(header[c] == schema[c].name, Errc::unknown_column,
            "CSV column '" + header[c] + "' does not match schema column '" +
                schema[c].name + "'");

  Table table;
  table.specs = schema;
  table.n_rows = rows.size() - 1;
  table.columns.resize(schema.size());
  table.missing.assign(schema.size(), std::vector<std::uint8_t>(table.n_rows, 0));

  // Category lookup per column.
  std::vector<std::map<std::string, std::int32_t>> lookup(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema[c].kind == Kind::continuous) {
      table.columns[c].num.assign(table.n_rows, kNaN);
    } else {
      table.columns[c].cat.assign(table.n_rows, -1);
      for (std::size_t i = 0; i < schema[c].categories.size(); ++i)
        lookup[c][schema[c].categories[i]] = static_cast<std::int32_t>(i);
    }
  }

  for (std::size_t r = 0; r < table.n_rows; ++r) {
    const auto& cells = rows[r + 1];
    require(cells.size() == schema.size(), Errc::type_parse,
            "row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                " cells, expected " + std::to_string(schema.size()));
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const std::string& cell = cells[c];
      if (cell.empty() || cell == "NA") {
        table.missing[c][r] = 1;
        continue;
      }
      if (schema[c].kind == Kind::continuous) {
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0' || std::isnan(v))
          fail(Errc::type_parse, "row " + std::to_string(r + 1) + ", column '" +
                                     schema[c].name + "': cannot parse number '" + cell + "'");
        table.columns[c].num[r] = v;
      } else {
        const auto it = lookup[c].find(cell);
        if (it == lookup[c].end())
          fail(Errc::unknown_category, "row " + std::to_string(r + 1) + ", column '" +
                                           schema[c].name + "': unknown category '" + cell + "'");
        table.columns[c].cat[r] = it->second;
      }
    }
  }
  return table;
}

void save_csv(const Table& table, const std::string& path) {
  std::vector<std::string> header;
  for (const auto& spec : table.specs) header.push_back(spec.name);
  std::vector<std::vector<std::string>> rows(table.n_rows);
  for (std::size_t r = 0; r < table.n_rows; ++r) {
    auto& row = rows[r];
    row.reserve(table.n_cols());
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
      if (table.is_missing(c, r)) {
        row.emplace_back();
      } else if (table.specs[c].kind == Kind::continuous) {
        row.push_back(format_roundtrip(table.columns[c].num[r]));
      } else {
        row.push_back(table.specs[c].categories[table.columns[c].cat[r]]);
      }
    }
  }
  csv::write_file(path, header, rows);
}

}  // namespace tabstack::data
