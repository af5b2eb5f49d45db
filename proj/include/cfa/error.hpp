#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfa {

enum class ErrorCode {
  // input / validation
  InvalidSchema,
  InvalidData,
  ParseError,
  MissingData,
  BadFoldCount,
  BadConfig,
  SchemaMismatch,
  UnknownDimension,
  // estimation
  AllMissingColumn,
  NotEnumerable,
  UnknownStratum,
  Degenerate,
  FoldCollapse,
  EmptyGroup,
  EmptyStratum,
  InsufficientVariation,
  DegenerateModel,
  ConstructionFailure,
  EmptyAfterTrim,
};

inline std::string_view error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingData: return "MissingData";
    case ErrorCode::BadFoldCount: return "BadFoldCount";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::UnknownDimension: return "UnknownDimension";
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::NotEnumerable: return "NotEnumerable";
    case ErrorCode::UnknownStratum: return "UnknownStratum";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::FoldCollapse: return "FoldCollapse";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::EmptyStratum: return "EmptyStratum";
    case ErrorCode::InsufficientVariation: return "InsufficientVariation";
    case ErrorCode::DegenerateModel: return "DegenerateModel";
    case ErrorCode::ConstructionFailure: return "ConstructionFailure";
    case ErrorCode::EmptyAfterTrim: return "EmptyAfterTrim";
  }
  return "Unknown";
}

/// True for errors caused by bad inputs rather than by the estimation itself.
inline bool is_validation_error(ErrorCode c) {
  return c <= ErrorCode::UnknownDimension;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cfa
