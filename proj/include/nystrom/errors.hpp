#pragma once

#include <stdexcept>
#include <string>

namespace nystrom {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside the kernel's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Requested Bernoulli degree (or squared-kernel order) is not tabulated.
class UnsupportedDegree : public Error {
 public:
  using Error::Error;
};

/// The kernel has no closed-form spectrum, mean embedding or squared kernel.
class NoAnalyticForm : public Error {
 public:
  using Error::Error;
};

class InvalidMatrix : public Error {
 public:
  using Error::Error;
};

class InvalidRank : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A quantity that must be nonnegative came out clearly negative.
class NumericalConsistencyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nystrom
