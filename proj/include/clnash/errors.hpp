#pragma once

#include <stdexcept>
#include <string>

namespace clnash {

enum class ErrorKind {
  Domain,               // invalid parameters or argument outside a formula's domain
  Config,               // malformed or unreadable configuration
  NoConvergence,        // root finder exhausted its iteration budget
  BranchInvalid,        // solution exists but violates the equilibrium sign constraints
  DenominatorVanished,  // h3 - beta - rho, h4 or a linear-system denominator is zero
  SignConstraint,       // a_bar <= 0 or M_rate <= 0
  NoAdmissibleRoot,     // Gamma filter kept zero or several cubic roots
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures of the numerical pipeline (as opposed to bad input).
  bool is_solver_failure() const noexcept {
    return kind_ != ErrorKind::Domain && kind_ != ErrorKind::Config;
  }

 private:
  ErrorKind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class SolverError : public Error {
 public:
  SolverError(ErrorKind kind, const std::string& what) : Error(kind, what) {}
};

}  // namespace clnash
