#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace voteml {

enum class ErrorCode {
  MissingColumn,
  RaggedRow,
  InvalidTargetValue,
  TargetMissingEntries,
  DisallowedMissing,
  SchemaInvalid,
  AllMissingColumn,
  UnknownColumn,
  UnseenCategory,
  DegenerateSplit,
  TooFewMinority,
  DimensionMismatch,
  LengthMismatch,
  NonFiniteLoss,
  BatchTooSmall,
  EmptyEnsemble,
  InvalidArgument,
  Config,
  Io,
};

/// Coarse grouping used to map failures onto CLI exit codes.
enum class ErrorCategory { Config, Data, Training, Usage };

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::InvalidTargetValue: return "InvalidTargetValue";
    case ErrorCode::TargetMissingEntries: return "TargetMissingEntries";
    case ErrorCode::DisallowedMissing: return "DisallowedMissing";
    case ErrorCode::SchemaInvalid: return "SchemaInvalid";
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::UnseenCategory: return "UnseenCategory";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::TooFewMinority: return "TooFewMinority";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

constexpr ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::SchemaInvalid:
      return ErrorCategory::Config;
    case ErrorCode::NonFiniteLoss:
      return ErrorCategory::Training;
    case ErrorCode::DimensionMismatch:
    case ErrorCode::LengthMismatch:
    case ErrorCode::BatchTooSmall:
    case ErrorCode::EmptyEnsemble:
    case ErrorCode::InvalidArgument:
      return ErrorCategory::Usage;
    default:
      return ErrorCategory::Data;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

inline void require(bool condition, ErrorCode code, const std::string& detail) {
  if (!condition) fail(code, detail);
}

}  // namespace voteml
