#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace varbound {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_point(const Eigen::VectorXd& x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) os << ", ";
    os << x[i];
  }
  os << ')';
  return os.str();
}

}  // namespace detail

// A parameter lies outside the natural parameter space (or the declared
// parameter set). Carries the offending point.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, Eigen::VectorXd point)
      : Error(what + " at x = " + detail::format_point(point)), point_(std::move(point)) {}
  explicit DomainError(const std::string& what) : Error(what) {}

  const Eigen::VectorXd& point() const noexcept { return point_; }

 private:
  Eigen::VectorXd point_;
};

// f(y; x0) vanishes for an observation drawn at the reference parameter, so
// the likelihood ratio is undefined.
class SupportError : public Error {
 public:
  using Error::Error;
};

// A finite-difference stencil hit a non-finite function value.
class StencilError : public Error {
 public:
  StencilError(const std::string& what, Eigen::VectorXd point)
      : Error(what + " at stencil point " + detail::format_point(point)),
        point_(std::move(point)) {}

  const Eigen::VectorXd& point() const noexcept { return point_; }

 private:
  Eigen::VectorXd point_;
};

// The stencil of a derivative of the moment-generating function left the
// natural parameter space.
class BoundaryError : public StencilError {
 public:
  using StencilError::StencilError;
};

// Malformed or inconsistent user input (configuration, shapes, indices).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: overflow, singular score, rank-deficient constraints.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Monte Carlo data containing non-finite values.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::vector<std::size_t> offending)
      : Error(what), offending_(std::move(offending)) {}

  const std::vector<std::size_t>& offending_draws() const noexcept { return offending_; }

 private:
  std::vector<std::size_t> offending_;
};

}  // namespace varbound
