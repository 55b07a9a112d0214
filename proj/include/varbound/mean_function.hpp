#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "varbound/error.hpp"
#include "varbound/finite_difference.hpp"
#include "varbound/linalg.hpp"
#include "varbound/model.hpp"
#include "varbound/moments.hpp"
#include "varbound/multi_index.hpp"

namespace varbound {

// Prescribed mean gamma(x) = E_x{g_hat(y)} of the estimators under study.
struct MeanFunction {
  std::function<double(const Vector&)> value;
  // Optional d^p gamma / dx^p; finite differences are used when empty.
  std::function<double(const Vector&, const MultiIndex&)> derivative;
};

inline double mean_derivative(const MeanFunction& gamma, const Vector& x, const MultiIndex& p) {
  if (static_cast<Eigen::Index>(p.size()) != x.size()) throw ConfigError("multi-index dimension mismatch");
  if (p.is_zero()) return gamma.value(x);
  if (gamma.derivative) return gamma.derivative(x, p);
  FDConfig cfg = default_fd_config(x, p);
  cfg.step *= 10.0;
  return partial_derivative_richardson(gamma.value, x, p, cfg);
}

inline Vector mean_gradient(const MeanFunction& gamma, const Vector& x) {
  const auto n = static_cast<std::size_t>(x.size());
  Vector g(x.size());
  for (std::size_t k = 0; k < n; ++k) g[static_cast<Eigen::Index>(k)] = mean_derivative(gamma, x, MultiIndex::unit(n, k));
  return g;
}

namespace means {

namespace detail {

inline bool only_axis(const MultiIndex& p, std::size_t axis) {
  for (std::size_t k = 0; k < p.size(); ++k)
    if (k != axis && p[k] != 0) return false;
  return true;
}

}  // namespace detail

inline MeanFunction constant(double c) {
  return {[c](const Vector&) { return c; },
          [c](const Vector&, const MultiIndex& p) { return p.is_zero() ? c : 0.0; }};
}

// gamma(x) = sum_i coefficients[i] * x_component^i
inline MeanFunction polynomial(std::vector<double> coefficients, std::size_t component = 0) {
  auto value = [coefficients, component](const Vector& x) {
    const double t = x[static_cast<Eigen::Index>(component)];
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * t + *it;
    return acc;
  };
  auto derivative = [coefficients, component, value](const Vector& x, const MultiIndex& p) {
    if (p.is_zero()) return value(x);
    if (!detail::only_axis(p, component)) return 0.0;
    const int order = p[component];
    const double t = x[static_cast<Eigen::Index>(component)];
    double acc = 0.0;
    for (std::size_t i = static_cast<std::size_t>(order); i < coefficients.size(); ++i) {
      double falling = 1.0;
      for (int j = 0; j < order; ++j) falling *= static_cast<double>(i - static_cast<std::size_t>(j));
      acc += coefficients[i] * falling * std::pow(t, static_cast<double>(i - static_cast<std::size_t>(order)));
    }
    return acc;
  };
  return {value, derivative};
}

// gamma(x) = x_component (unbiased estimation of one natural parameter).
inline MeanFunction identity(std::size_t component = 0) { return polynomial({0.0, 1.0}, component); }

// gamma(x) = E_x{phi_component(y)} = dA/dx_component, the mean-value parameter.
inline MeanFunction expfam_mean(const ExponentialFamilyModel& model, std::size_t component = 0) {
  const auto n = static_cast<std::size_t>(model.param_dim);
  if (component >= n) throw ConfigError("mean-function component out of range");
  return {[model, n, component](const Vector& x) { return moment(model, x, MultiIndex::unit(n, component)); }, {}};
}

}  // namespace means
}  // namespace varbound
