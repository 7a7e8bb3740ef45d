#pragma once

#include <stdexcept>
#include <string>

namespace qplayout {

// Mirrors qp_status in qplayout.h; the numeric values are part of the C ABI.
enum class ErrorCode {
  InvalidArgument = 1,
  Domain = 2,
  InsufficientData = 3,
  Degenerate = 4,
  Parse = 5,
  Validation = 6,
  Config = 7,
  Io = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCode::Domain, what) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what)
      : Error(ErrorCode::InsufficientData, what) {}
};

class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what) : Error(ErrorCode::Degenerate, what) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorCode::Validation, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::Config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::Io, what) {}
};

}  // namespace qplayout
