#pragma once

#include <stdexcept>
#include <string>

namespace lcfuse {

enum class ErrorCode {
  InvalidArgument,
  MalformedHeader,
  SizeMismatch,
  BadProbability,
  InvalidValue,
  IoFailure,
  DegenerateDistribution,
  GeometryMismatch,
  WindowTooLarge,
  InsufficientData,
  TooFewPixels,
  DegenerateCloud,
  RankDeficient,
  EmptyOverlap,
  UnnormalizedInput,
  TooManyClasses,
  MissingInput,
  ClassUndersampled,
  DimensionMismatch,
  SampleOffGrid,
  EmptyMatrix,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::MalformedHeader: return "malformed_header";
    case ErrorCode::SizeMismatch: return "size_mismatch";
    case ErrorCode::BadProbability: return "bad_probability";
    case ErrorCode::InvalidValue: return "invalid_value";
    case ErrorCode::IoFailure: return "io_failure";
    case ErrorCode::DegenerateDistribution: return "degenerate_distribution";
    case ErrorCode::GeometryMismatch: return "geometry_mismatch";
    case ErrorCode::WindowTooLarge: return "window_too_large";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::TooFewPixels: return "too_few_pixels";
    case ErrorCode::DegenerateCloud: return "degenerate_cloud";
    case ErrorCode::RankDeficient: return "rank_deficient";
    case ErrorCode::EmptyOverlap: return "empty_overlap";
    case ErrorCode::UnnormalizedInput: return "unnormalized_input";
    case ErrorCode::TooManyClasses: return "too_many_classes";
    case ErrorCode::MissingInput: return "missing_input";
    case ErrorCode::ClassUndersampled: return "class_undersampled";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::SampleOffGrid: return "sample_off_grid";
    case ErrorCode::EmptyMatrix: return "empty_matrix";
  }
  return "unknown";
}

/// Exception carrying a machine-checkable error code plus a human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool cond, ErrorCode code, const std::string& message) {
  if (!cond) fail(code, message);
}

}  // namespace lcfuse
