#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "varbound/error.hpp"
#include "varbound/extended_real.hpp"
#include "varbound/linalg.hpp"
#include "varbound/multi_index.hpp"

namespace varbound {

// Draws `count` i.i.d. observations at parameter x. Must be a pure function of
// (x, seed, count).
using Sampler = std::function<std::vector<Observation>(const Vector& x, std::uint64_t seed, std::size_t count)>;

// Canonical exponential family
//   f(y; x) = h(y) exp(phi(y)^T x - A(x)),   lambda(x) = exp(A(x)).
struct ExponentialFamilyModel {
  std::string name;
  int param_dim = 1;
  int obs_dim = 1;

  std::function<Vector(const Observation&)> phi;
  // log h(y); minus infinity off the support.
  std::function<ExtendedReal(const Observation&)> log_h;
  // log lambda(x) = A(x); plus infinity outside the natural parameter space.
  std::function<ExtendedReal(const Vector&)> log_lambda;
  Sampler sampler;

  // Optional: E_x{phi^p(y)} in closed form.
  std::function<double(const Vector& x, const MultiIndex& p)> closed_moments;
  // Optional: closed form of A(x1 + x2 - x0) + A(x0) - A(x1) - A(x2), the log
  // of the likelihood-ratio kernel. Must be symmetric in (x1, x2) bitwise and
  // vanish exactly when x1 == x0 or x2 == x0. Only called on in-space inputs.
  std::function<double(const Vector& x0, const Vector& x1, const Vector& x2)> log_kernel;

  std::string natural_space;  // human-readable description
};

// Any parametric model given by its log-density and a sampler.
struct GenericModel {
  std::string name;
  int param_dim = 1;
  int obs_dim = 1;

  // log f(y; x); minus infinity where the density vanishes.
  std::function<ExtendedReal(const Observation& y, const Vector& x)> log_density;
  Sampler sampler;
};

using AnyModel = std::variant<ExponentialFamilyModel, GenericModel>;

namespace detail {

inline void require_param_dim(int param_dim, const Vector& x) {
  if (x.size() != param_dim)
    throw ConfigError("parameter has dimension " + std::to_string(x.size()) + ", model expects " +
                      std::to_string(param_dim));
}

inline void require_obs_dim(int obs_dim, const Observation& y) {
  if (y.size() != obs_dim)
    throw ConfigError("observation has dimension " + std::to_string(y.size()) + ", model expects " +
                      std::to_string(obs_dim));
}

}  // namespace detail

inline bool natural_space_contains(const ExponentialFamilyModel& model, const Vector& x) {
  detail::require_param_dim(model.param_dim, x);
  return model.log_lambda(x).is_finite();
}

inline void require_natural_space(const ExponentialFamilyModel& model, const Vector& x) {
  if (!natural_space_contains(model, x))
    throw DomainError("parameter outside the natural parameter space of " + model.name, x);
}

// A(x); throws DomainError outside the natural parameter space.
inline double cumulant(const ExponentialFamilyModel& model, const Vector& x) {
  detail::require_param_dim(model.param_dim, x);
  const ExtendedReal a = model.log_lambda(x);
  if (!a.is_finite()) throw DomainError("parameter outside the natural parameter space of " + model.name, x);
  return a.value();
}

// phi(y)^T x - A(x) + log h(y).
inline ExtendedReal log_density(const ExponentialFamilyModel& model, const Observation& y, const Vector& x) {
  detail::require_obs_dim(model.obs_dim, y);
  const double a = cumulant(model, x);
  const ExtendedReal lh = model.log_h(y);
  if (lh.is_minus_infinity()) return lh;
  if (!lh.is_finite()) throw NumericalError("log h(y) must not be +inf");
  return model.phi(y).dot(x) - a + lh.value();
}

inline ExtendedReal log_density(const GenericModel& model, const Observation& y, const Vector& x) {
  detail::require_obs_dim(model.obs_dim, y);
  detail::require_param_dim(model.param_dim, x);
  const ExtendedReal v = model.log_density(y, x);
  if (v.is_plus_infinity()) throw NumericalError("log-density evaluated to +inf in " + model.name);
  return v;
}

// rho(y, x) = f(y; x) / f(y; x0).
inline double likelihood_ratio(const GenericModel& model, const Observation& y, const Vector& x, const Vector& x0) {
  const ExtendedReal ref = log_density(model, y, x0);
  if (!ref.is_finite())
    throw SupportError("f(y; x0) vanishes for an observation drawn under the reference parameter");
  const ExtendedReal num = log_density(model, y, x);
  if (num.is_minus_infinity()) return 0.0;
  return std::exp(num.value() - ref.value());
}

// Canonical form: rho(y, x) = exp(phi(y)^T (x - x0) - (A(x) - A(x0))).
inline double likelihood_ratio(const ExponentialFamilyModel& model, const Observation& y, const Vector& x,
                               const Vector& x0) {
  detail::require_obs_dim(model.obs_dim, y);
  const double a0 = cumulant(model, x0);
  const double a = cumulant(model, x);
  if (!model.log_h(y).is_finite())
    throw SupportError("f(y; x0) vanishes: observation outside the support of " + model.name);
  return std::exp(model.phi(y).dot(x - x0) - (a - a0));
}

inline std::vector<Observation> sample(const ExponentialFamilyModel& model, const Vector& x, std::uint64_t seed,
                                       std::size_t count) {
  require_natural_space(model, x);
  if (count == 0) return {};
  return model.sampler(x, seed, count);
}

inline std::vector<Observation> sample(const GenericModel& model, const Vector& x, std::uint64_t seed,
                                       std::size_t count) {
  detail::require_param_dim(model.param_dim, x);
  if (count == 0) return {};
  return model.sampler(x, seed, count);
}

// View of an exponential family through the generic interface.
inline GenericModel to_generic(const ExponentialFamilyModel& model) {
  GenericModel g;
  g.name = model.name;
  g.param_dim = model.param_dim;
  g.obs_dim = model.obs_dim;
  g.log_density = [model](const Observation& y, const Vector& x) { return log_density(model, y, x); };
  g.sampler = model.sampler;
  return g;
}

inline int param_dim(const AnyModel& m) {
  return std::visit([](const auto& v) { return v.param_dim; }, m);
}

inline const std::string& model_name(const AnyModel& m) {
  return std::visit([](const auto& v) -> const std::string& { return v.name; }, m);
}

}  // namespace varbound
