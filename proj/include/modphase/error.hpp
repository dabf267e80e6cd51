#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace modphase {

enum class ErrorCode {
  NonFiniteState,
  StepUnderflow,
  InvalidArgument,
  SyntaxError,
  UnknownFunction,
  UnknownSymbol,
  UnboundVariable,
  NonFiniteResult,
  UnknownSystem,
  UnknownParameter,
  DegenerateTerm,
  MissingTerm,
  TooShort,
  NotOscillatory,
  GridMismatch,
  EmptyBins,
  IncompatibleReports,
  TooFewSamples,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteState:      return "NonFiniteState";
    case ErrorCode::StepUnderflow:       return "StepUnderflow";
    case ErrorCode::InvalidArgument:     return "InvalidArgument";
    case ErrorCode::SyntaxError:         return "SyntaxError";
    case ErrorCode::UnknownFunction:     return "UnknownFunction";
    case ErrorCode::UnknownSymbol:       return "UnknownSymbol";
    case ErrorCode::UnboundVariable:     return "UnboundVariable";
    case ErrorCode::NonFiniteResult:     return "NonFiniteResult";
    case ErrorCode::UnknownSystem:       return "UnknownSystem";
    case ErrorCode::UnknownParameter:    return "UnknownParameter";
    case ErrorCode::DegenerateTerm:      return "DegenerateTerm";
    case ErrorCode::MissingTerm:         return "MissingTerm";
    case ErrorCode::TooShort:            return "TooShort";
    case ErrorCode::NotOscillatory:      return "NotOscillatory";
    case ErrorCode::GridMismatch:        return "GridMismatch";
    case ErrorCode::EmptyBins:           return "EmptyBins";
    case ErrorCode::IncompatibleReports: return "IncompatibleReports";
    case ErrorCode::TooFewSamples:       return "TooFewSamples";
  }
  return "Unknown";
}

// Base exception for every failure raised by the library. The code lets
// callers (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the error-code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

// Integration diverged; carries the simulation time at which it happened.
class NonFiniteStateError : public Error {
 public:
  NonFiniteStateError(double time, const std::string& message)
      : Error(ErrorCode::NonFiniteState, message + " at t=" + std::to_string(time)), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Parse failure. `offset` is a byte offset into the parsed text; line and
// column are 1-based and filled in when parsing a multi-line definition.
class SyntaxError : public Error {
 public:
  SyntaxError(std::string detail, std::size_t offset, std::vector<std::string> expected,
              std::size_t line = 1, std::size_t column = 0)
      : Error(ErrorCode::SyntaxError, format(detail, offset, expected, line, column)),
        detail_(std::move(detail)),
        offset_(offset),
        expected_(std::move(expected)),
        line_(line),
        column_(column == 0 ? offset + 1 : column) {}

  const std::string& detail() const noexcept { return detail_; }
  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& detail, std::size_t offset,
                            const std::vector<std::string>& expected, std::size_t line,
                            std::size_t column) {
    std::string out = detail + " (line " + std::to_string(line) + ", column " +
                      std::to_string(column == 0 ? offset + 1 : column) + ")";
    if (!expected.empty()) {
      out += "; expected one of:";
      for (const auto& e : expected) out += " " + e;
    }
    return out;
  }

  std::string detail_;
  std::size_t offset_;
  std::vector<std::string> expected_;
  std::size_t line_;
  std::size_t column_;
};

}  // namespace modphase
