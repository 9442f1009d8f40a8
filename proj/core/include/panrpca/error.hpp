#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace panrpca {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kNonFinite,
  kPointAtInfinity,
  kDegenerateConfiguration,
  kNormalization,
  kNoModel,
  kInsufficientFeatures,
  kSingularTransform,
  kOutOfBounds,
  kUndefinedSnr,
  kEmptyRegion,
  kDivergence,
  kIo,
};

// Errors that stem from the numerics (as opposed to bad user input).
bool is_numerical(ErrorCode code);

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace panrpca
