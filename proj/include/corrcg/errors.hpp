#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace corrcg {

/// A precondition on an argument was violated (bad order, negative distance,
/// undefined length-scale conversion, dimension mismatch).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration document failed strict validation. `key()` names the
/// offending entry using a dotted path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Base for numerical failures: size guards, breakdowns, truncation, search.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeGuardError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TruncationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SearchRangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// CG found <p, Sp> <= 0 (up to tolerance); the operator is not SPD.
class BreakdownError : public NumericalError {
 public:
  BreakdownError(std::size_t iteration, const std::string& what)
      : NumericalError(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Raised by the ensemble driver when one member fails; wraps the index.
class RealizationError : public NumericalError {
 public:
  RealizationError(std::size_t realization, const std::string& what)
      : NumericalError(what), realization_(realization) {}
  std::size_t realization() const noexcept { return realization_; }

 private:
  std::size_t realization_;
};

}  // namespace corrcg
