#include "fama/error.hpp"

namespace fama {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteEntry: return "NonFiniteEntry";
    case Errc::EmptyView: return "EmptyView";
    case Errc::RankTooLarge: return "RankTooLarge";
    case Errc::ConvergenceFailure: return "ConvergenceFailure";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::ZeroMatrix: return "ZeroMatrix";
    case Errc::InvalidRange: return "InvalidRange";
    case Errc::NonOrthogonalFactors: return "NonOrthogonalFactors";
    case Errc::NegativeDelta: return "NegativeDelta";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::SingularCore: return "SingularCore";
    case Errc::DegenerateNu: return "DegenerateNu";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::InfeasibleAssignment: return "InfeasibleAssignment";
    case Errc::ZeroTruth: return "ZeroTruth";
    case Errc::ParseError: return "ParseError";
    case Errc::RowCountMismatch: return "RowCountMismatch";
    case Errc::ConstantColumn: return "ConstantColumn";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
    case Errc::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

bool is_data_error(Errc code) noexcept {
  switch (code) {
    case Errc::DimensionMismatch:
    case Errc::NonFiniteEntry:
    case Errc::EmptyView:
    case Errc::IndexOutOfRange:
    case Errc::ParseError:
    case Errc::RowCountMismatch:
    case Errc::ConstantColumn:
    case Errc::IoError:
    case Errc::SchemaError:
    case Errc::DegenerateInput:
      return true;
    default:
      return false;
  }
}

}  // namespace fama
