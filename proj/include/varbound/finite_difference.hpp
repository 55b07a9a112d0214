#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "varbound/error.hpp"
#include "varbound/multi_index.hpp"

namespace varbound {

inline constexpr int kMaxDerivativeOrder = 4;

struct FDConfig {
  enum class Scheme { central_2nd_order };

  double step = 1e-4;
  Scheme scheme = Scheme::central_2nd_order;
};

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

namespace detail {

struct StencilTap {
  int offset;
  double weight;
};

// Second-order accurate central stencil for the k-th derivative, unit spacing.
inline std::vector<StencilTap> central_stencil(int k) {
  switch (k) {
    case 0: return {{0, 1.0}};
    case 1: return {{-1, -0.5}, {1, 0.5}};
    case 2: return {{-1, 1.0}, {0, -2.0}, {1, 1.0}};
    case 3: return {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}};
    case 4: return {{-2, 1.0}, {-1, -4.0}, {0, 6.0}, {1, -4.0}, {2, 1.0}};
    default: throw ConfigError("finite-difference order per axis must be <= 4");
  }
}

}  // namespace detail

// Default spacing: 1e-4 for orders 1-2, 1e-3 for orders 3-4, scaled by
// max(1, |x0_k|) over the differentiated axes.
inline FDConfig default_fd_config(const Eigen::VectorXd& x0, const MultiIndex& p) {
  double scale = 1.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] > 0) scale = std::max(scale, std::abs(x0[static_cast<Eigen::Index>(k)]));
  FDConfig cfg;
  cfg.step = (p.order() >= 3 ? 1e-3 : 1e-4) * scale;
  return cfg;
}

// Central-difference approximation of d^p f / dx^p at x0 (tensor product of
// one-dimensional stencils), error O(step^2) per differentiated axis.
inline double partial_derivative(const ScalarField& f, const Eigen::VectorXd& x0, const MultiIndex& p,
                                 const FDConfig& cfg) {
  if (static_cast<Eigen::Index>(p.size()) != x0.size())
    throw ConfigError("multi-index dimension does not match parameter dimension");
  if (p.order() > kMaxDerivativeOrder) throw ConfigError("derivative order is capped at 4");
  if (!(cfg.step > 0.0)) throw ConfigError("finite-difference step must be positive");

  const std::size_t n = p.size();
  std::vector<std::vector<detail::StencilTap>> axes(n);
  for (std::size_t k = 0; k < n; ++k) axes[k] = detail::central_stencil(p[k]);

  std::vector<std::size_t> pos(n, 0);
  double acc = 0.0;
  Eigen::VectorXd x = x0;
  for (;;) {
    double w = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& tap = axes[k][pos[k]];
      w *= tap.weight;
      x[static_cast<Eigen::Index>(k)] = x0[static_cast<Eigen::Index>(k)] + tap.offset * cfg.step;
    }
    const double fx = f(x);
    if (!std::isfinite(fx)) throw StencilError("non-finite function value", x);
    acc += w * fx;

    std::size_t k = n;
    while (k-- > 0) {
      if (++pos[k] < axes[k].size()) break;
      pos[k] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  return acc / std::pow(cfg.step, p.order());
}

// One Richardson step on top of partial_derivative: (4 D(h/2) - D(h)) / 3,
// error O(h^4).
inline double partial_derivative_richardson(const ScalarField& f, const Eigen::VectorXd& x0,
                                            const MultiIndex& p, const FDConfig& cfg) {
  if (p.is_zero()) return partial_derivative(f, x0, p, cfg);
  FDConfig half = cfg;
  half.step = cfg.step / 2.0;
  const double coarse = partial_derivative(f, x0, p, cfg);
  const double fine = partial_derivative(f, x0, p, half);
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace varbound
