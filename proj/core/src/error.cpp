#include "supertc/error.hpp"

namespace supertc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyFormula: return "empty_formula";
    case ErrorCode::kUnknownElement: return "unknown_element";
    case ErrorCode::kMalformedNumber: return "malformed_number";
    case ErrorCode::kZeroAmount: return "zero_amount";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParseRow: return "parse_row";
    case ErrorCode::kNegativeTc: return "negative_tc";
    case ErrorCode::kEmptyDataset: return "empty_dataset";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kInvalidGeometry: return "invalid_geometry";
    case ErrorCode::kGraphConsumed: return "graph_consumed";
    case ErrorCode::kInvalidConfig: return "invalid_config";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kCorruptCheckpoint: return "corrupt_checkpoint";
    case ErrorCode::kNonFiniteLoss: return "non_finite_loss";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kEmpty: return "empty";
    case ErrorCode::kUsage: return "usage";
  }
  return "unknown";
}

ErrorCategory error_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage:
    case ErrorCode::kInvalidConfig:
      return ErrorCategory::kUsage;
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kInvalidGeometry:
    case ErrorCode::kGraphConsumed:
    case ErrorCode::kNonFiniteLoss:
      return ErrorCategory::kNumeric;
    default:
      return ErrorCategory::kData;
  }
}

}  // namespace supertc
