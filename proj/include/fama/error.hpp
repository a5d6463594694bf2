#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fama {

enum class Errc {
  DimensionMismatch,
  NonFiniteEntry,
  EmptyView,
  RankTooLarge,
  ConvergenceFailure,
  DegenerateVariance,
  ZeroMatrix,
  InvalidRange,
  NonOrthogonalFactors,
  NegativeDelta,
  IndexOutOfRange,
  SingularCore,
  DegenerateNu,
  DegenerateInput,
  InfeasibleAssignment,
  ZeroTruth,
  ParseError,
  RowCountMismatch,
  ConstantColumn,
  InvalidArgument,
  IoError,
  SchemaError,
};

std::string_view errc_name(Errc code) noexcept;

// Data errors are problems with the inputs (shape, parse, finiteness); the
// remaining codes are numerical failures. The CLI maps the two onto distinct
// exit codes.
bool is_data_error(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace fama
