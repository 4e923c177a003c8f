#pragma once

#include <stdexcept>
#include <string>

namespace momsurv {

// Categories map one-to-one onto the CLI exit codes.
enum class ErrorKind { validation = 2, numerical = 3, io = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

// Rejected input: domain errors, malformed data, inconsistent configuration.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

// Quadrature non-convergence, degenerate envelopes, non-finite chain output.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

// Throws ValidationError with `message` unless `condition` holds.
void require(bool condition, const std::string& message);

}  // namespace momsurv
