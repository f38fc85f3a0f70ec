#pragma once

#include <stdexcept>
#include <string>

namespace allee {

/// Invalid parameters, grid or initial-condition requests.
class DomainError : public std::invalid_argument {
public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failure inside a time integration or eigen solve.
class SolverError : public std::runtime_error {
public:
  enum class Kind { BlowUp, StepUnderflow, NegativityBreach, NonConvergence, SignError };

  SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

  static const char* kind_name(Kind k) noexcept {
    switch (k) {
      case Kind::BlowUp: return "BlowUp";
      case Kind::StepUnderflow: return "StepUnderflow";
      case Kind::NegativityBreach: return "NegativityBreach";
      case Kind::NonConvergence: return "NonConvergence";
      case Kind::SignError: return "SignError";
    }
    return "Unknown";
  }

private:
  Kind kind_;
};

/// A trajectory lacks a record the caller depends on (T/2 or T for classification).
class MissingRecord : public std::runtime_error {
public:
  explicit MissingRecord(const std::string& what) : std::runtime_error(what) {}
};

/// Front tracking failures in the 1D oracle.
class FrontError : public std::runtime_error {
public:
  enum class Kind { FrontNotFound, BoundaryContamination };

  FrontError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// Malformed configuration text; carries the offending line and key.
class ConfigError : public std::runtime_error {
public:
  ConfigError(int line, std::string key, const std::string& what)
      : std::runtime_error(what), line_(line), key_(std::move(key)) {}

  int line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

private:
  int line_;
  std::string key_;
};

}  // namespace allee
