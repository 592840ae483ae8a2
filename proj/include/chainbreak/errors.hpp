#pragma once

#include <stdexcept>
#include <string>

namespace chainbreak {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A potential evaluated to a non-finite number.
class EvaluationError : public Error {
  public:
    using Error::Error;
};

/// The convex continuation of a potential could not be built.
class ExtensionError : public Error {
  public:
    using Error::Error;
};

/// Deterministic integration failed (step too large, left its domain).
class IntegrationError : public Error {
  public:
    using Error::Error;
};

/// The model violates a structural assumption (e.g. A(t) >= 0).
class ModelViolation : public Error {
  public:
    using Error::Error;
};

/// An operation was called outside of its documented preconditions.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// Two inputs that must share a noise realisation do not.
class ContractError : public Error {
  public:
    using Error::Error;
};

/// Malformed or inconsistent configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

}  // namespace chainbreak
