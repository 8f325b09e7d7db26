#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace specseg {

enum class ErrorCode {
  EmptyInput,
  InvalidGridSize,
  InvalidConfig,
  BadRange,
  ZeroSegment,
  ZeroMass,
  SupportMismatch,
  GridMismatch,
  Infeasible,
  WindowTooSmall,
  DegenerateData,
  NonCausalAR,
  UnknownCase,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidGridSize: return "InvalidGridSize";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::ZeroSegment: return "ZeroSegment";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::NonCausalAR: return "NonCausalAR";
    case ErrorCode::UnknownCase: return "UnknownCase";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace specseg
