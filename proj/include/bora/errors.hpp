#pragma once

#include <stdexcept>
#include <string>

namespace bora {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument's value or shape was violated.
class DomainError : public Error {
public:
  using Error::Error;
};

// A value type's invariant (simplex sum, budget equality) does not hold.
class InvariantError : public Error {
public:
  using Error::Error;
};

// Gram matrix not positive definite even after jitter escalation.
class FitError : public Error {
public:
  using Error::Error;
};

// Operation called in a setting it does not support.
class ContractError : public Error {
public:
  using Error::Error;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace bora
