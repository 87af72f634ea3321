#pragma once

#include <stdexcept>
#include <string>

namespace stableflow {

enum class ErrorCode {
  InvalidArgument,
  DegenerateExtent,
  TooShort,
  Empty,
  EmptyBatch,
  DimensionMismatch,
  LengthMismatch,
  GoalSingularity,
  AtGoal,
  NonFinite,
  Corrupt,
  VersionMismatch,
  Io,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-readable category; the CLI maps categories to
/// exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The description without the category prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateExtent: return "DegenerateExtent";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::GoalSingularity: return "GoalSingularity";
    case ErrorCode::AtGoal: return "AtGoal";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::Corrupt: return "Corrupt";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace stableflow
