#pragma once

#include <stdexcept>
#include <string>

namespace plus {

/// Bad input data: malformed files, misaligned layers, inconsistent demands.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Caller-side misuse: out-of-range parameters, unknown options.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A problem that has no solution under its constraints.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public SolverError {
public:
  using SolverError::SolverError;
};

class UnboundedError : public SolverError {
public:
  using SolverError::SolverError;
};

/// A land-use class cannot reach its demand (no admissible source cells).
class InfeasibleDemandError : public SolverError {
public:
  InfeasibleDemandError(int class_id, const std::string& what)
      : SolverError(what), class_id_(class_id) {}
  int class_id() const noexcept { return class_id_; }

private:
  int class_id_;
};

}  // namespace plus
