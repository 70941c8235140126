#ifndef MIMIC_ERROR_HPP
#define MIMIC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mimic {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A density or rate was queried at a point carrying no mass at time t.
class QueryOutsideSupport : public Error {
 public:
  using Error::Error;
};

class UnsupportedFamily : public Error {
 public:
  using Error::Error;
};

/// The family does not satisfy the dispersion assumption needed by the
/// binomial (minimal variation) kernel.
class NoDispersion : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

class InvalidProfile : public Error {
 public:
  using Error::Error;
};

class UnboundedRate : public Error {
 public:
  using Error::Error;
};

class UnsupportedExample : public Error {
 public:
  using Error::Error;
};

class NonFiniteVariationInput : public Error {
 public:
  using Error::Error;
};

/// Configuration or input file could not be validated.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mimic

#endif  // MIMIC_ERROR_HPP
