#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lodspde {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Vector living in one discrete space was handed to an operation on another.
class TagMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class EllipticityViolation : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class CorrectorSolveFailure : public SolverError {
 public:
  CorrectorSolveFailure(std::int64_t element, const std::string& what)
      : SolverError("corrector solve failed on coarse element " +
                    std::to_string(element) + ": " + what),
        element_(element) {}

  std::int64_t element() const noexcept { return element_; }

 private:
  std::int64_t element_;
};

/// On-disk corrector cache does not match the requested configuration.
class CacheMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lodspde
