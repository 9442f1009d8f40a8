#include "panrpca/error.hpp"

namespace panrpca {

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPointAtInfinity:
    case ErrorCode::kDegenerateConfiguration:
    case ErrorCode::kNormalization:
    case ErrorCode::kNoModel:
    case ErrorCode::kInsufficientFeatures:
    case ErrorCode::kSingularTransform:
    case ErrorCode::kUndefinedSnr:
    case ErrorCode::kDivergence:
      return true;
    default:
      return false;
  }
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kPointAtInfinity: return "point at infinity";
    case ErrorCode::kDegenerateConfiguration: return "degenerate configuration";
    case ErrorCode::kNormalization: return "normalization failure";
    case ErrorCode::kNoModel: return "no model";
    case ErrorCode::kInsufficientFeatures: return "insufficient features";
    case ErrorCode::kSingularTransform: return "singular transform";
    case ErrorCode::kOutOfBounds: return "out of bounds";
    case ErrorCode::kUndefinedSnr: return "undefined SNR";
    case ErrorCode::kEmptyRegion: return "empty region";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace panrpca
