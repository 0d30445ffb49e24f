#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stvel {

/// Grid extent and point-pattern window do not overlap.
class DomainMismatchError : public std::runtime_error {
 public:
  explicit DomainMismatchError(const std::string& what) : std::runtime_error(what) {}
};

/// A covariance or Hessian matrix could not be factorized even at maximum jitter.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, double smallest_eigenvalue)
      : std::runtime_error(what + " (smallest eigenvalue " +
                           std::to_string(smallest_eigenvalue) + ")"),
        smallest_eigenvalue_(smallest_eigenvalue) {}
  double smallest_eigenvalue() const { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

/// Intensity exceeded the caller-supplied dominating bound during thinning.
class BoundViolationError : public std::runtime_error {
 public:
  BoundViolationError(const std::string& what, double observed, double bound)
      : std::runtime_error(what + " (observed " + std::to_string(observed) +
                           " > bound " + std::to_string(bound) + ")"),
        observed_(observed),
        bound_(bound) {}
  double observed() const { return observed_; }
  double bound() const { return bound_; }

 private:
  double observed_, bound_;
};

/// Design matrix is rank deficient; names the offending columns.
class CollinearityError : public std::runtime_error {
 public:
  CollinearityError(const std::string& what, std::vector<std::string> columns)
      : std::runtime_error(what + ": " + join(columns)), columns_(std::move(columns)) {}
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  static std::string join(const std::vector<std::string>& cols) {
    std::string out;
    for (const auto& c : cols) {
      if (!out.empty()) out += ", ";
      out += c;
    }
    return out;
  }
  std::vector<std::string> columns_;
};

/// Iterative solver failed to make progress; carries the objective trace.
class OptimizationError : public std::runtime_error {
 public:
  OptimizationError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Iteration budget exhausted before reaching the gradient tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_gradient_norm)
      : std::runtime_error(what + " (last gradient norm " +
                           std::to_string(last_gradient_norm) + ")"),
        last_gradient_norm_(last_gradient_norm) {}
  double last_gradient_norm() const { return last_gradient_norm_; }

 private:
  double last_gradient_norm_;
};

/// Raster does not overlap the target grid.
class CoverageError : public std::runtime_error {
 public:
  explicit CoverageError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file; carries the 1-based line number where parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, long line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        path_(path),
        line_(line) {}
  const std::string& path() const { return path_; }
  long line() const { return line_; }

 private:
  std::string path_;
  long line_;
};

/// Invalid run configuration (bad schema, unknown field, missing input).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stvel
