#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace logbekk {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input: the caller can fix it.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown on otherwise well-formed input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NotSymmetric : public InputError {
 public:
  explicit NotSymmetric(double max_asymmetry)
      : InputError("matrix is not symmetric (max |m_ij - m_ji| = " + std::to_string(max_asymmetry) + ")"),
        max_asymmetry_(max_asymmetry) {}
  double max_asymmetry() const noexcept { return max_asymmetry_; }

 private:
  double max_asymmetry_;
};

class NotPositiveDefinite : public InputError {
 public:
  explicit NotPositiveDefinite(double min_eigenvalue)
      : InputError("matrix is not positive definite (min eigenvalue = " + std::to_string(min_eigenvalue) + ")"),
        min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class BadLength : public InputError {
 public:
  using InputError::InputError;
};

class DimensionMismatch : public InputError {
 public:
  using InputError::InputError;
};

class NonStationaryParams : public InputError {
 public:
  using InputError::InputError;
};

class BoundaryParams : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : InputError(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// One failing data row found during validation.
struct RowDiagnostic {
  std::size_t line;
  double min_eigenvalue;
  std::string message;
};

/// Collects every failing row instead of stopping at the first.
class ValidationError : public InputError {
 public:
  explicit ValidationError(std::vector<RowDiagnostic> rows)
      : InputError(format(rows)), rows_(std::move(rows)) {}
  const std::vector<RowDiagnostic>& rows() const noexcept { return rows_; }

 private:
  static std::string format(const std::vector<RowDiagnostic>& rows) {
    std::string s = std::to_string(rows.size()) + " invalid row(s):";
    for (const auto& r : rows) s += "\n  line " + std::to_string(r.line) + ": " + r.message;
    return s;
  }
  std::vector<RowDiagnostic> rows_;
};

class SingularCovariance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ZeroTrace : public NumericalError {
 public:
  ZeroTrace() : NumericalError("residual scale matrix has zero trace (degenerate constant input)") {}
};

class NonFiniteLikelihood : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace logbekk
