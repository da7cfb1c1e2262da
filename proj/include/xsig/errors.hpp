#pragma once

#include <stdexcept>
#include <string>

namespace xsig {

/// Malformed or invariant-violating input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by a caller (bad span, misaligned columns, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure inside a solver.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pipeline stage failed; `stage()` names it (ingest, indicators, ...).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, bool data_error)
      : std::runtime_error("[" + stage + "] " + what),
        stage_(std::move(stage)),
        data_error_(data_error) {}

  const std::string& stage() const noexcept { return stage_; }
  bool is_data_error() const noexcept { return data_error_; }

 private:
  std::string stage_;
  bool data_error_;
};

}  // namespace xsig
