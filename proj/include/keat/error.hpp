#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace keat {

/// Incompatible tensor or matrix shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument outside the operation's domain (negative time, empty input, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  [[nodiscard]] auto line() const -> std::size_t { return line_; }

 private:
  std::size_t line_;
};

/// Non-finite values or overflow during evaluation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  [[nodiscard]] auto epoch() const -> int { return epoch_; }

 private:
  int epoch_;
};

/// Unknown or malformed configuration key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& what, std::string key)
      : std::invalid_argument(what), key_(std::move(key)) {}
  [[nodiscard]] auto key() const -> const std::string& { return key_; }

 private:
  std::string key_;
};

}  // namespace keat
