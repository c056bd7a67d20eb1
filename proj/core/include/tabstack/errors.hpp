#pragma once

#include <stdexcept>
#include <string>

namespace tabstack {

// Every failure mode the library reports. Codes group into three CLI exit
// classes: config (bad options/specs), data (bad or insufficient input),
// numeric (computation blew up).
enum class Errc {
  // data / parsing
  unknown_column,
  type_parse,
  unknown_category,
  empty_input,
  length_mismatch,
  missing_cells_present,
  io_error,
  // statistical preconditions
  single_class,
  constant_input,
  degenerate_outcome,
  degenerate_table,
  degenerate_groups,
  too_few_rows,
  zero_expected_count,
  zero_predictors,
  empty_domain,
  dimension_mismatch,
  all_missing_column,
  no_predictors_available,
  too_many_features,
  empty_background,
  empty_matrix,
  // config
  invalid_spec,
  invalid_config,
  // numeric
  non_finite_gradient,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::unknown_column: return "UnknownColumn";
    case Errc::type_parse: return "TypeParseError";
    case Errc::unknown_category: return "UnknownCategory";
    case Errc::empty_input: return "EmptyInput";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::missing_cells_present: return "MissingCellsPresent";
    case Errc::io_error: return "IoError";
    case Errc::single_class: return "SingleClass";
    case Errc::constant_input: return "ConstantInput";
    case Errc::degenerate_outcome: return "DegenerateOutcome";
    case Errc::degenerate_table: return "DegenerateTable";
    case Errc::degenerate_groups: return "DegenerateGroups";
    case Errc::too_few_rows: return "TooFewRows";
    case Errc::zero_expected_count: return "ZeroExpectedCount";
    case Errc::zero_predictors: return "ZeroPredictors";
    case Errc::empty_domain: return "EmptyDomain";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::all_missing_column: return "AllMissingColumn";
    case Errc::no_predictors_available: return "NoPredictorsAvailable";
    case Errc::too_many_features: return "TooManyFeatures";
    case Errc::empty_background: return "EmptyBackground";
    case Errc::empty_matrix: return "EmptyMatrix";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::non_finite_gradient: return "NonFiniteGradient";
  }
  return "UnknownError";
}

// Exit-code class per the CLI contract: 2 config, 3 data, 4 numeric.
inline int errc_exit_code(Errc code) {
  switch (code) {
    case Errc::invalid_spec:
    case Errc::invalid_config:
      return 2;
    case Errc::non_finite_gradient:
      return 4;
    default:
      return 3;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, Errc code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace tabstack
