#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sfnse {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its mathematical domain (alpha, grid bounds, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Array lengths disagree with the grid or with each other.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Dense materialization requested above the test-scale guard.
class SizeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class DivisibilityError : public Error {
 public:
  using Error::Error;
};

class UnsupportedNonlinearity : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised by the implicit midpoint solver when the fixed-point loop does not
/// reach its tolerance. `step` is filled in by the trajectory driver.
class NonConvergence : public Error {
 public:
  static constexpr std::size_t kNoStep = static_cast<std::size_t>(-1);

  NonConvergence(int iterations, double residual, std::size_t step = kNoStep)
      : Error(format(iterations, residual, step)),
        iterations_(iterations),
        residual_(residual),
        step_(step) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }
  std::size_t step() const noexcept { return step_; }

  NonConvergence at_step(std::size_t step) const {
    return NonConvergence(iterations_, residual_, step);
  }

 private:
  static std::string format(int iterations, double residual, std::size_t step) {
    std::string msg = "fixed-point iteration did not converge after " +
                      std::to_string(iterations) +
                      " iterations (last update " + std::to_string(residual) +
                      ")";
    if (step != kNoStep) msg += " at step " + std::to_string(step);
    return msg;
  }

  int iterations_;
  double residual_;
  std::size_t step_;
};

class ParseError : public ConfigError {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : ConfigError("line " + std::to_string(line) + ", column " +
                    std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public ConfigError {
 public:
  ValidationError(std::string key, const std::string& message)
      : ConfigError(key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class UnknownKeyError : public ConfigError {
 public:
  explicit UnknownKeyError(std::string key)
      : ConfigError("unknown key '" + key + "'"), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace sfnse
