#pragma once

#include <stdexcept>
#include <string>

namespace tpik {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (dimension mismatch, bad index).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Distance-based task evaluated where its gradient direction is undefined.
class DegenerateGradient : public Error {
 public:
  using Error::Error;
};

/// Augmented Jacobian used for projection has more rows than joints.
class OverConstrained : public Error {
 public:
  using Error::Error;
};

/// Too many simultaneously active set-based tasks to enumerate.
class CombinatorialLimit : public Error {
 public:
  using Error::Error;
};

/// A set-based task value left its physical band by more than the hard margin.
class HardLimitBreach : public Error {
 public:
  using Error::Error;
};

/// Name lookup (object id, task id, frame) failed.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Configuration file could not be parsed or validated.
class ConfigError : public Error {
 public:
  ConfigError(std::string file, int line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const { return file_; }
  /// 1-based line number, 0 when unknown.
  int line() const { return line_; }

 private:
  std::string file_;
  int line_;
};

}  // namespace tpik
