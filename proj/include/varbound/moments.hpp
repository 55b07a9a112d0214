#pragma once

#include <cmath>
#include <map>

#include "varbound/error.hpp"
#include "varbound/finite_difference.hpp"
#include "varbound/model.hpp"
#include "varbound/multi_index.hpp"

namespace varbound {

struct MomentValue {
  double value = 1.0;
  bool finite_difference = false;  // closed form unavailable, value from FD of lambda
};

// Step for the finite-difference moment path. Richardson extrapolation on top
// of the second-order stencils makes the truncation error O(h^4), so these are
// larger than default_fd_config.
inline FDConfig moment_fd_config(const Vector& x, const MultiIndex& p) {
  FDConfig cfg = default_fd_config(x, p);
  cfg.step *= 10.0;
  return cfg;
}

// E_x{phi^p(y)} = (1 / lambda(x)) d^p lambda(x) / dx^p.
inline MomentValue moment_detailed(const ExponentialFamilyModel& model, const Vector& x, const MultiIndex& p) {
  require_natural_space(model, x);
  if (static_cast<int>(p.size()) != model.param_dim) throw ConfigError("multi-index dimension mismatch");
  if (p.is_zero()) return {1.0, false};
  if (model.closed_moments) return {model.closed_moments(x, p), false};

  if (p.order() > kMaxDerivativeOrder)
    throw ConfigError("finite-difference moments are limited to order 4, got " + p.to_string());
  const double a0 = cumulant(model, x);
  const ScalarField normalized_mgf = [&](const Vector& z) {
    const ExtendedReal a = model.log_lambda(z);
    if (!a.is_finite()) throw BoundaryError("moment-generating function is infinite on the stencil", z);
    return std::exp(a.value() - a0);
  };
  return {partial_derivative_richardson(normalized_mgf, x, p, moment_fd_config(x, p)), true};
}

inline double moment(const ExponentialFamilyModel& model, const Vector& x, const MultiIndex& p) {
  return moment_detailed(model, x, p).value;
}

// Moments at a fixed parameter, memoized, plus the derivatives of
// w(x) = lambda(x0) / lambda(x) at x0 (needed for kernel derivatives).
class MomentCache {
 public:
  MomentCache(const ExponentialFamilyModel& model, Vector x) : model_(&model), x_(std::move(x)) {
    require_natural_space(model, x_);
  }

  const Vector& point() const noexcept { return x_; }
  bool used_finite_differences() const noexcept { return used_fd_; }

  double operator()(const MultiIndex& p) {
    if (auto it = moments_.find(p); it != moments_.end()) return it->second;
    const MomentValue m = moment_detailed(*model_, x_, p);
    used_fd_ = used_fd_ || m.finite_difference;
    moments_.emplace(p, m.value);
    return m.value;
  }

  // d^q w / dx^q at x, where w = lambda(x_) / lambda(.). Follows from
  // sum_{a <= q} C(q, a) m_{q-a} w_a = 0 for q != 0, w_0 = 1.
  double inverse_mgf_derivative(const MultiIndex& q) {
    if (auto it = inverse_.find(q); it != inverse_.end()) return it->second;
    double w = 1.0;
    if (!q.is_zero()) {
      w = 0.0;
      for (const MultiIndex& a : multi_indices_leq(q)) {
        if (a == q) continue;
        w -= static_cast<double>(multi_binomial(q, a)) * (*this)(q - a) * inverse_mgf_derivative(a);
      }
    }
    inverse_.emplace(q, w);
    return w;
  }

 private:
  const ExponentialFamilyModel* model_;
  Vector x_;
  std::map<MultiIndex, double> moments_;
  std::map<MultiIndex, double> inverse_;
  bool used_fd_ = false;
};

}  // namespace varbound
