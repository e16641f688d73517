#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace larnet {

enum class ErrorCode {
  NotSkewSymmetric,
  NotARotation,
  NumericalDomain,
  Singular,
  InvalidArgument,
  LengthMismatch,
  EmptyInput,
  NonFiniteObjective,
  AngleOutOfRange,
  ShapeMismatch,
  EmptyDataset,
  NonFiniteLoss,
  InvalidConfig,
  EmptyScores,
  DuplicateGalleryIdentity,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotSkewSymmetric: return "NotSkewSymmetric";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::NumericalDomain: return "NumericalDomain";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::AngleOutOfRange: return "AngleOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::DuplicateGalleryIdentity: return "DuplicateGalleryIdentity";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace larnet
