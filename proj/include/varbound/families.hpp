#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "varbound/error.hpp"
#include "varbound/extended_real.hpp"
#include "varbound/model.hpp"
#include "varbound/multi_index.hpp"

namespace varbound::families {

namespace detail {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// E{z^k} for z ~ N(mean, var).
inline double normal_raw_moment(double mean, double var, int k) {
  double prev = 1.0, cur = mean;
  if (k == 0) return prev;
  for (int j = 2; j <= k; ++j) {
    const double next = mean * cur + (j - 1) * var * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// E{z^k} for z ~ Poisson(rate): Touchard polynomial sum_j S(k, j) rate^j.
inline double poisson_raw_moment(double rate, int k) {
  if (k == 0) return 1.0;
  std::vector<double> s(static_cast<std::size_t>(k) + 1, 0.0);  // S(n, j), row n
  s[0] = 1.0;
  for (int n = 1; n <= k; ++n) {
    for (int j = n; j >= 1; --j) s[j] = j * s[j] + s[j - 1];
    s[0] = 0.0;
  }
  double acc = 0.0, pw = 1.0;
  for (int j = 1; j <= k; ++j) {
    pw *= rate;
    acc += s[j] * pw;
  }
  return acc;
}

inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double logistic(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline double dot_offsets(const Vector& x0, const Vector& x1, const Vector& x2) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x0.size(); ++i) acc += (x1[i] - x0[i]) * (x2[i] - x0[i]);
  return acc;
}

inline void require_scalar_index(const MultiIndex& p) {
  if (p.size() != 1) throw ConfigError("scalar family expects a one-dimensional multi-index");
}

}  // namespace detail

// y ~ N(x, 1); phi(y) = y, A(x) = x^2 / 2.
inline ExponentialFamilyModel gaussian_mean() {
  ExponentialFamilyModel m;
  m.name = "gaussian-mean";
  m.param_dim = 1;
  m.obs_dim = 1;
  m.phi = [](const Observation& y) -> Vector { return y; };
  m.log_h = [](const Observation& y) -> ExtendedReal { return -0.5 * y[0] * y[0] - 0.5 * detail::kLogTwoPi; };
  m.log_lambda = [](const Vector& x) -> ExtendedReal { return 0.5 * x[0] * x[0]; };
  m.sampler = [](const Vector& x, std::uint64_t seed, std::size_t count) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist(x[0], 1.0);
    std::vector<Observation> out(count, Observation(1));
    for (auto& y : out) y[0] = dist(gen);
    return out;
  };
  m.closed_moments = [](const Vector& x, const MultiIndex& p) {
    detail::require_scalar_index(p);
    return detail::normal_raw_moment(x[0], 1.0, p[0]);
  };
  m.log_kernel = [](const Vector& x0, const Vector& x1, const Vector& x2) {
    return (x1[0] - x0[0]) * (x2[0] - x0[0]);
  };
  m.natural_space = "all real x";
  return m;
}

// y ~ N(x, I_N); phi(y) = y, A(x) = |x|^2 / 2.
inline ExponentialFamilyModel gaussian_mean_nd(int dim) {
  if (dim < 1) throw ConfigError("gaussian-mean-nd requires dim >= 1");
  ExponentialFamilyModel m;
  m.name = "gaussian-mean-nd";
  m.param_dim = dim;
  m.obs_dim = dim;
  m.phi = [](const Observation& y) -> Vector { return y; };
  m.log_h = [dim](const Observation& y) -> ExtendedReal {
    return -0.5 * y.squaredNorm() - 0.5 * dim * detail::kLogTwoPi;
  };
  m.log_lambda = [](const Vector& x) -> ExtendedReal { return 0.5 * x.squaredNorm(); };
  m.sampler = [dim](const Vector& x, std::uint64_t seed, std::size_t count) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<Observation> out(count, Observation(dim));
    for (auto& y : out)
      for (int k = 0; k < dim; ++k) y[k] = x[k] + dist(gen);
    return out;
  };
  m.closed_moments = [dim](const Vector& x, const MultiIndex& p) {
    if (static_cast<int>(p.size()) != dim) throw ConfigError("multi-index dimension mismatch");
    double acc = 1.0;
    for (int k = 0; k < dim; ++k) acc *= detail::normal_raw_moment(x[k], 1.0, p[static_cast<std::size_t>(k)]);
    return acc;
  };
  m.log_kernel = [](const Vector& x0, const Vector& x1, const Vector& x2) {
    return detail::dot_offsets(x0, x1, x2);
  };
  m.natural_space = "all real x in R^" + std::to_string(dim);
  return m;
}

// y ~ Poisson(e^x); phi(y) = y, h(y) = 1/y!, A(x) = e^x.
inline ExponentialFamilyModel poisson() {
  ExponentialFamilyModel m;
  m.name = "poisson";
  m.param_dim = 1;
  m.obs_dim = 1;
  m.phi = [](const Observation& y) -> Vector { return y; };
  m.log_h = [](const Observation& y) -> ExtendedReal {
    const double v = y[0];
    if (v < 0 || v != std::floor(v)) return ExtendedReal::minus_infinity();
    return -std::lgamma(v + 1.0);
  };
  m.log_lambda = [](const Vector& x) -> ExtendedReal { return ExtendedReal::from_double(std::exp(x[0])); };
  m.sampler = [](const Vector& x, std::uint64_t seed, std::size_t count) {
    std::mt19937_64 gen(seed);
    std::poisson_distribution<std::int64_t> dist(std::exp(x[0]));
    std::vector<Observation> out(count, Observation(1));
    for (auto& y : out) y[0] = static_cast<double>(dist(gen));
    return out;
  };
  m.closed_moments = [](const Vector& x, const MultiIndex& p) {
    detail::require_scalar_index(p);
    return detail::poisson_raw_moment(std::exp(x[0]), p[0]);
  };
  // e^{x1+x2-x0} + e^{x0} - e^{x1} - e^{x2} = e^{x0} (e^{a} - 1)(e^{b} - 1)
  m.log_kernel = [](const Vector& x0, const Vector& x1, const Vector& x2) {
    return std::exp(x0[0]) * (std::expm1(x1[0] - x0[0]) * std::expm1(x2[0] - x0[0]));
  };
  m.natural_space = "all real x";
  return m;
}

// y ~ Bernoulli(logistic(x)); phi(y) = y, A(x) = log(1 + e^x).
inline ExponentialFamilyModel bernoulli() {
  ExponentialFamilyModel m;
  m.name = "bernoulli";
  m.param_dim = 1;
  m.obs_dim = 1;
  m.phi = [](const Observation& y) -> Vector { return y; };
  m.log_h = [](const Observation& y) -> ExtendedReal {
    if (y[0] == 0.0 || y[0] == 1.0) return 0.0;
    return ExtendedReal::minus_infinity();
  };
  m.log_lambda = [](const Vector& x) -> ExtendedReal { return detail::softplus(x[0]); };
  m.sampler = [](const Vector& x, std::uint64_t seed, std::size_t count) {
    std::mt19937_64 gen(seed);
    std::bernoulli_distribution dist(detail::logistic(x[0]));
    std::vector<Observation> out(count, Observation(1));
    for (auto& y : out) y[0] = dist(gen) ? 1.0 : 0.0;
    return out;
  };
  m.closed_moments = [](const Vector& x, const MultiIndex& p) {
    detail::require_scalar_index(p);
    return p[0] == 0 ? 1.0 : detail::logistic(x[0]);
  };
  // (1 + e^s)(1 + e^{x0}) - (1 + e^{x1})(1 + e^{x2}) = e^{x0} (e^a - 1)(e^b - 1), s = x1 + x2 - x0
  m.log_kernel = [](const Vector& x0, const Vector& x1, const Vector& x2) {
    const double scale = std::exp(x0[0] - (detail::softplus(x1[0]) + detail::softplus(x2[0])));
    return std::log1p(scale * (std::expm1(x1[0] - x0[0]) * std::expm1(x2[0] - x0[0])));
  };
  m.natural_space = "all real x";
  return m;
}

// y ~ Exponential(rate -x) on y >= 0; phi(y) = y, A(x) = -log(-x), x < 0.
inline ExponentialFamilyModel exponential_rate() {
  ExponentialFamilyModel m;
  m.name = "exponential-rate";
  m.param_dim = 1;
  m.obs_dim = 1;
  m.phi = [](const Observation& y) -> Vector { return y; };
  m.log_h = [](const Observation& y) -> ExtendedReal {
    if (y[0] < 0.0) return ExtendedReal::minus_infinity();
    return 0.0;
  };
  m.log_lambda = [](const Vector& x) -> ExtendedReal {
    if (!(x[0] < 0.0)) return ExtendedReal::plus_infinity();
    return -std::log(-x[0]);
  };
  m.sampler = [](const Vector& x, std::uint64_t seed, std::size_t count) {
    std::mt19937_64 gen(seed);
    std::exponential_distribution<double> dist(-x[0]);
    std::vector<Observation> out(count, Observation(1));
    for (auto& y : out) y[0] = dist(gen);
    return out;
  };
  m.closed_moments = [](const Vector& x, const MultiIndex& p) {
    detail::require_scalar_index(p);
    const double rate = -x[0];
    double acc = 1.0;
    for (int j = 1; j <= p[0]; ++j) acc *= j / rate;
    return acc;
  };
  // log(x1 x2 / (x0 s)) with x1 x2 - x0 s = (x1 - x0)(x2 - x0)
  m.log_kernel = [](const Vector& x0, const Vector& x1, const Vector& x2) {
    const double s = x1[0] + x2[0] - x0[0];
    return std::log1p(((x1[0] - x0[0]) * (x2[0] - x0[0])) / (x0[0] * s));
  };
  m.natural_space = "x < 0";
  return m;
}

// K i.i.d. draws y_i ~ N(x, 1); phi(y) = sum_i y_i, A(x) = K x^2 / 2.
inline ExponentialFamilyModel gaussian_iid(int count) {
  if (count < 1) throw ConfigError("gaussian-iid requires count >= 1");
  ExponentialFamilyModel m;
  m.name = "gaussian-iid";
  m.param_dim = 1;
  m.obs_dim = count;
  m.phi = [](const Observation& y) -> Vector { return scalar_vector(y.sum()); };
  m.log_h = [count](const Observation& y) -> ExtendedReal {
    return -0.5 * y.squaredNorm() - 0.5 * count * detail::kLogTwoPi;
  };
  m.log_lambda = [count](const Vector& x) -> ExtendedReal { return 0.5 * count * x[0] * x[0]; };
  m.sampler = [count](const Vector& x, std::uint64_t seed, std::size_t n) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist(x[0], 1.0);
    std::vector<Observation> out(n, Observation(count));
    for (auto& y : out)
      for (int k = 0; k < count; ++k) y[k] = dist(gen);
    return out;
  };
  m.closed_moments = [count](const Vector& x, const MultiIndex& p) {
    detail::require_scalar_index(p);
    return detail::normal_raw_moment(count * x[0], count, p[0]);
  };
  m.log_kernel = [count](const Vector& x0, const Vector& x1, const Vector& x2) {
    return count * ((x1[0] - x0[0]) * (x2[0] - x0[0]));
  };
  m.natural_space = "all real x";
  return m;
}

// Induced model of z = sum of K i.i.d. N(x, 1) draws: z ~ N(K x, K) written in
// the same natural parameter x.
inline ExponentialFamilyModel gaussian_sum(int count) {
  if (count < 1) throw ConfigError("gaussian-sum requires count >= 1");
  ExponentialFamilyModel m;
  m.name = "gaussian-sum";
  m.param_dim = 1;
  m.obs_dim = 1;
  m.phi = [](const Observation& z) -> Vector { return z; };
  m.log_h = [count](const Observation& z) -> ExtendedReal {
    return -0.5 * z[0] * z[0] / count - 0.5 * (detail::kLogTwoPi + std::log(static_cast<double>(count)));
  };
  m.log_lambda = [count](const Vector& x) -> ExtendedReal { return 0.5 * count * x[0] * x[0]; };
  m.sampler = [count](const Vector& x, std::uint64_t seed, std::size_t n) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist(count * x[0], std::sqrt(static_cast<double>(count)));
    std::vector<Observation> out(n, Observation(1));
    for (auto& z : out) z[0] = dist(gen);
    return out;
  };
  m.closed_moments = [count](const Vector& x, const MultiIndex& p) {
    detail::require_scalar_index(p);
    return detail::normal_raw_moment(count * x[0], count, p[0]);
  };
  m.log_kernel = [count](const Vector& x0, const Vector& x1, const Vector& x2) {
    return count * ((x1[0] - x0[0]) * (x2[0] - x0[0]));
  };
  m.natural_space = "all real x";
  return m;
}

struct FamilyInfo {
  std::string id;
  std::string hyperparameters;
  std::string natural_space;
  bool closed_moments;
  std::string description;
};

inline std::vector<FamilyInfo> list_families() {
  return {
      {"gaussian-mean", "none", "all real x", true, "y ~ N(x, 1), phi(y) = y"},
      {"gaussian-mean-nd", "dim (default 2)", "all real x in R^dim", true, "y ~ N(x, I), phi(y) = y"},
      {"poisson", "none", "all real x", true, "y ~ Poisson(exp(x)), phi(y) = y"},
      {"bernoulli", "none", "all real x", true, "y ~ Bernoulli(1 / (1 + exp(-x))), phi(y) = y"},
      {"exponential-rate", "none", "x < 0", true, "y ~ Exponential(rate -x), phi(y) = y"},
      {"gaussian-iid", "count (default 3)", "all real x", true, "count i.i.d. N(x, 1) draws, phi(y) = sum(y)"},
      {"gaussian-sum", "count (default 3)", "all real x", true, "sum of count i.i.d. N(x, 1) draws"},
  };
}

inline ExponentialFamilyModel make_family(const std::string& id, const std::map<std::string, double>& hyper = {}) {
  auto integer_hyper = [&](const std::string& key, int fallback) {
    for (const auto& [k, v] : hyper)
      if (k != key) throw ConfigError("family '" + id + "' has no hyperparameter '" + k + "'");
    const auto it = hyper.find(key);
    if (it == hyper.end()) return fallback;
    if (it->second != std::floor(it->second) || it->second < 1)
      throw ConfigError("hyperparameter '" + key + "' must be a positive integer");
    return static_cast<int>(it->second);
  };
  auto no_hyper = [&] {
    if (!hyper.empty()) throw ConfigError("family '" + id + "' takes no hyperparameters");
  };

  if (id == "gaussian-mean") return no_hyper(), gaussian_mean();
  if (id == "gaussian-mean-nd") return gaussian_mean_nd(integer_hyper("dim", 2));
  if (id == "poisson") return no_hyper(), poisson();
  if (id == "bernoulli") return no_hyper(), bernoulli();
  if (id == "exponential-rate") return no_hyper(), exponential_rate();
  if (id == "gaussian-iid") return gaussian_iid(integer_hyper("count", 3));
  if (id == "gaussian-sum") return gaussian_sum(integer_hyper("count", 3));
  throw ConfigError("unknown model family '" + id + "'");
}

}  // namespace varbound::families
