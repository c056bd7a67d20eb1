#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabstack/matrix.hpp"

namespace tabstack::data {

enum class Domain { patient, clinical, system, outcome };
enum class Kind { continuous, categorical };

const char* domain_name(Domain d);
const char* kind_name(Kind k);
Domain parse_domain(const std::string& s);
Kind parse_kind(const std::string& s);

struct ColumnSpec {
  std::string name;
  Domain domain = Domain::clinical;
  Kind kind = Kind::continuous;
  // Declared order; also the merge-adjacency order for ordered categories.
  std::vector<std::string> categories;
};

// One column of values. Continuous columns use `num` (NaN where missing),
// categorical columns use `cat` (index into spec.categories, -1 where
// missing). The missing mask is the authoritative missing indicator; the
// sentinels are kept in sync with it.
struct Column {
  std::vector<double> num;
  std::vector<std::int32_t> cat;
};

struct Table {
  std::vector<ColumnSpec> specs;
  std::size_t n_rows = 0;
  std::vector<Column> columns;
  std::vector<std::vector<std::uint8_t>> missing;  // [column][row]

  std::size_t n_cols() const { return specs.size(); }
  std::optional<std::size_t> find_column(const std::string& name) const;
  std::size_t column_index(const std::string& name) const;  // throws unknown_column
  bool is_missing(std::size_t col, std::size_t row) const { return missing[col][row] != 0; }
  std::size_t missing_count(std::size_t col) const;

  bool operator==(const Table& other) const = default;
};

void validate(const Table& table);

// Row subset preserving order.
Table subset(const Table& table, std::span<const std::size_t> rows);

// Column subset by name, preserving the table's column order.
Table select_columns(const Table& table, const std::vector<std::string>& names);

struct EncodedMatrix {
  std::vector<std::string> feature_names;   // "col" or "col=category"
  std::vector<std::string> source_column;   // per feature
  Matrix X;
  std::vector<int> y;  // optional labels; empty when absent
};

enum class EncodeMode { full, drop_first };

// Continuous columns copy through; categorical columns expand to indicators
// in lexicographic category order. drop_first removes the first sorted
// category of each column (for VIF, where full encoding is collinear).
EncodedMatrix one_hot_encode(const Table& table, EncodeMode mode);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

// Per-class shuffle then largest-remainder allocation so the train size is
// exactly round(n * fraction) and each class is within one row of its global
// proportion.
SplitIndices stratified_split(const std::vector<int>& labels, double train_fraction,
                              std::uint64_t seed);

// Stratified k-fold assignment; returns fold index per row.
std::vector<int> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed);

struct OutcomeSpec {
  std::string los_column;
  double percentile = 0.75;
  std::string label_name = "prolonged_los";
};

struct OutcomeResult {
  std::vector<int> labels;
  double threshold_value;  // the raw percentile t; label = 1 iff value > t
  double threshold_days;   // floor(t)+1 when all values are integral, else t
};

// Linear-interpolation percentile: h = (n-1)*q over the ascending sort.
double percentile(std::span<const double> values, double q);

// rows: optional subset over which the percentile is computed (e.g. the
// training rows); labels are produced for every row either way.
OutcomeResult dichotomize_outcome(const Table& table, const OutcomeSpec& spec,
                                  std::span<const std::size_t> rows = {});

// CSV / schema sidecar -------------------------------------------------------

std::vector<ColumnSpec> load_schema(const std::string& path);
void save_schema(const std::vector<ColumnSpec>& specs, const std::string& path);

// RFC 4180 CSV with a header row; empty string or "NA" marks a missing cell.
Table load_csv(const std::string& path, const std::vector<ColumnSpec>& schema);
void save_csv(const Table& table, const std::string& path);

}  // namespace tabstack::data
