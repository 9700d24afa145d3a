#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ibf {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument to a numerical routine (order out of range, negative abscissa, ...).
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Model construction or model-dependent precondition failed.
class ModelError : public Error {
public:
  using Error::Error;
};

class NormalizationError : public Error {
public:
  using Error::Error;
};

/// A user-supplied integrand or table returned a non-finite value.
class EvaluationError : public Error {
public:
  EvaluationError(const std::string& what, double abscissa)
      : Error(what), abscissa_(abscissa) {}
  double abscissa() const noexcept { return abscissa_; }

private:
  double abscissa_;
};

/// Covariance factorization failed even at the largest jitter.
class DegenerateConfigurationError : public Error {
public:
  DegenerateConfigurationError(const std::string& what, std::size_t i, std::size_t j)
      : Error(what), first_(i), second_(j) {}
  std::size_t first() const noexcept { return first_; }
  std::size_t second() const noexcept { return second_; }

private:
  std::size_t first_;
  std::size_t second_;
};

class NumericUnderflowError : public Error {
public:
  using Error::Error;
};

/// Config document failed schema or range validation; names the offending field.
class ConfigError : public Error {
public:
  ConfigError(const std::string& field, const std::string& constraint)
      : Error(field + ": " + constraint), field_(field) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// True for the failures the CLI maps to exit status 3.
inline bool is_numeric_failure(const std::exception& e) {
  return dynamic_cast<const EvaluationError*>(&e) != nullptr ||
         dynamic_cast<const DegenerateConfigurationError*>(&e) != nullptr ||
         dynamic_cast<const NumericUnderflowError*>(&e) != nullptr;
}

}  // namespace ibf
