#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "varbound/error.hpp"
#include "varbound/finite_difference.hpp"
#include "varbound/gram.hpp"
#include "varbound/linalg.hpp"
#include "varbound/model.hpp"
#include "varbound/moments.hpp"
#include "varbound/multi_index.hpp"

namespace varbound {

// Likelihood-ratio kernel
//   R(x1, x2) = E_{x0}{rho(y, x1) rho(y, x2)},  rho(y, x) = f(y; x) / f(y; x0).
// For a canonical exponential family
//   R(x1, x2) = lambda(x1 + x2 - x0) lambda(x0) / (lambda(x1) lambda(x2)).

enum class KernelMode { expfam_closed_form, monte_carlo };

struct KernelValue {
  double value = 0.0;
  double standard_error = 0.0;       // zero in closed form
  bool heavy_tail_warning = false;   // one summand dominates the MC average
};

// log R(x1, x2) for an exponential family.
inline double log_kernel_expfam(const ExponentialFamilyModel& model, const Vector& x0, const Vector& x1,
                                const Vector& x2) {
  const double a0 = cumulant(model, x0);
  const double a1 = cumulant(model, x1);
  const double a2 = cumulant(model, x2);
  const Vector s = x1 + x2 - x0;
  const ExtendedReal as = model.log_lambda(s);
  if (!as.is_finite())
    throw DomainError("kernel requires x1 + x2 - x0 in the natural parameter space of " + model.name, s);
  if (model.log_kernel) return model.log_kernel(x0, x1, x2);
  return (as.value() + a0) - (a1 + a2);
}

inline double kernel_expfam(const ExponentialFamilyModel& model, const Vector& x0, const Vector& x1,
                            const Vector& x2) {
  const double r = std::exp(log_kernel_expfam(model, x0, x1, x2));
  if (!std::isfinite(r)) throw NumericalError("kernel value overflows double precision");
  return r;
}

// Basis functions of the kernel space, all relative to the evaluator's x0.
struct PointEvaluation {
  Vector x;  // R(., x)
};
struct DifferenceFunction {
  Vector x;  // R(., x) - R(., x0)
};
struct DerivativeFunction {
  MultiIndex p;  // r^(p)(.) = d^p R(., s) / ds^p at s = x0
};
using BasisFunction = std::variant<PointEvaluation, DifferenceFunction, DerivativeFunction>;

class KernelEvaluator {
 public:
  static KernelEvaluator closed_form(ExponentialFamilyModel model, Vector x0) {
    require_natural_space(model, x0);
    KernelEvaluator k;
    k.mode_ = KernelMode::expfam_closed_form;
    k.param_dim_ = model.param_dim;
    k.expfam_ = std::make_shared<const ExponentialFamilyModel>(std::move(model));
    k.x0_ = std::move(x0);
    return k;
  }

  // Draws one frozen sample set at x0 that serves every kernel query.
  static KernelEvaluator monte_carlo(GenericModel model, Vector x0, std::size_t samples, std::uint64_t seed) {
    if (samples < 2) throw ConfigError("Monte Carlo kernel needs at least 2 samples");
    KernelEvaluator k;
    k.mode_ = KernelMode::monte_carlo;
    k.param_dim_ = model.param_dim;
    k.seed_ = seed;
    k.x0_ = std::move(x0);
    k.samples_ = sample(model, k.x0_, seed, samples);
    k.log_ref_.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) {
      const ExtendedReal ld = log_density(model, k.samples_[i], k.x0_);
      if (!ld.is_finite())
        throw SupportError("f(y; x0) vanishes on draw " + std::to_string(i) + " from the reference parameter");
      k.log_ref_[i] = ld.value();
    }
    k.generic_ = std::make_shared<const GenericModel>(std::move(model));
    return k;
  }

  KernelMode mode() const noexcept { return mode_; }
  const Vector& x0() const noexcept { return x0_; }
  int param_dim() const noexcept { return param_dim_; }
  std::size_t sample_count() const noexcept { return samples_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }

  const ExponentialFamilyModel& expfam() const {
    if (!expfam_) throw ConfigError("closed-form kernel operation requested on a Monte Carlo evaluator");
    return *expfam_;
  }

  KernelValue evaluate(const Vector& x1, const Vector& x2) const {
    check_dim(x1);
    check_dim(x2);
    if (mode_ == KernelMode::expfam_closed_form) return {kernel_expfam(*expfam_, x0_, x1, x2), 0.0, false};
    const Vector r1 = likelihood_ratios(x1);
    const Vector r2 = likelihood_ratios(x2);
    return average(r1.cwiseProduct(r2));
  }

  // R(x1, x2) - 1, accurate when the kernel is close to one. Closed form only.
  double excess(const Vector& x1, const Vector& x2) const {
    const double e = std::expm1(log_kernel_expfam(expfam(), x0_, x1, x2));
    if (!std::isfinite(e)) throw NumericalError("kernel value overflows double precision");
    return e;
  }

  // rho(y_i, x) over the frozen sample set. Monte Carlo only.
  Vector likelihood_ratios(const Vector& x) const {
    require_mc();
    check_dim(x);
    Vector r(static_cast<Eigen::Index>(samples_.size()));
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const ExtendedReal ld = log_density(*generic_, samples_[i], x);
      r[static_cast<Eigen::Index>(i)] = ld.is_minus_infinity() ? 0.0 : std::exp(ld.value() - log_ref_[i]);
    }
    return r;
  }

  // Realization of a basis function as a random variable U(y_i) with
  // <u, v> = E_{x0}{U V}. Monte Carlo only.
  Vector basis_samples(const BasisFunction& u) const {
    require_mc();
    return std::visit(
        [&](const auto& b) -> Vector {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, PointEvaluation>) {
            return likelihood_ratios(b.x);
          } else if constexpr (std::is_same_v<T, DifferenceFunction>) {
            return likelihood_ratios(b.x).array() - 1.0;
          } else {
            return ratio_derivatives(b.p);
          }
        },
        u);
  }

  // Mean and standard error of per-draw values.
  static KernelValue average(const Vector& draws) {
    const auto n = static_cast<double>(draws.size());
    const double mean = draws.mean();
    const double var = (draws.array() - mean).square().sum() / (n - 1.0);
    KernelValue out{mean, std::sqrt(var / n), false};
    const double total = draws.cwiseAbs().sum();
    if (draws.size() >= 100 && total > 0.0 && draws.cwiseAbs().maxCoeff() > 0.1 * total)
      out.heavy_tail_warning = true;
    return out;
  }

 private:
  KernelEvaluator() = default;

  void check_dim(const Vector& x) const {
    if (x.size() != param_dim_) throw ConfigError("parameter dimension mismatch in kernel evaluation");
  }
  void require_mc() const {
    if (mode_ != KernelMode::monte_carlo) throw ConfigError("sample-based operation requested in closed-form mode");
  }

  // d^p rho(y_i, x) / dx^p at x0, by finite differences per draw.
  Vector ratio_derivatives(const MultiIndex& p) const {
    if (static_cast<int>(p.size()) != param_dim_) throw ConfigError("multi-index dimension mismatch");
    Vector out(static_cast<Eigen::Index>(samples_.size()));
    if (p.is_zero()) return Vector::Ones(out.size());
    FDConfig cfg = default_fd_config(x0_, p);
    cfg.step *= 10.0;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const ScalarField rho = [&](const Vector& x) {
        const ExtendedReal ld = log_density(*generic_, samples_[i], x);
        return ld.is_minus_infinity() ? 0.0 : std::exp(ld.value() - log_ref_[i]);
      };
      out[static_cast<Eigen::Index>(i)] = partial_derivative_richardson(rho, x0_, p, cfg);
    }
    return out;
  }

  KernelMode mode_ = KernelMode::expfam_closed_form;
  int param_dim_ = 1;
  Vector x0_;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const ExponentialFamilyModel> expfam_;
  std::shared_ptr<const GenericModel> generic_;
  std::vector<Observation> samples_;
  std::vector<double> log_ref_;
};

// (1/n) sum_i rho(y_i, x1) rho(y_i, x2), y_i ~ f(.; x0), with its standard error.
inline KernelValue kernel_mc(const GenericModel& model, const Vector& x0, const Vector& x1, const Vector& x2,
                             std::size_t n, std::uint64_t seed) {
  return KernelEvaluator::monte_carlo(model, x0, n, seed).evaluate(x1, x2);
}

// r^(p)(x_eval) = d^p R(x_eval, s) / ds^p at s = x0, by finite differences of
// the closed-form kernel in its second slot.
inline double derivative_kernel_function(const KernelEvaluator& ev, const MultiIndex& p, const Vector& x_eval) {
  const auto& model = ev.expfam();
  if (static_cast<int>(p.size()) != ev.param_dim()) throw ConfigError("multi-index dimension mismatch");
  if (p.is_zero()) return ev.evaluate(x_eval, ev.x0()).value;
  const ScalarField slice = [&](const Vector& s) {
    try {
      return kernel_expfam(model, ev.x0(), x_eval, s);
    } catch (const DomainError&) {
      throw BoundaryError("derivative stencil left the natural parameter space", s);
    }
  };
  FDConfig cfg = default_fd_config(ev.x0(), p);
  cfg.step *= 10.0;
  return partial_derivative_richardson(slice, ev.x0(), p, cfg);
}

namespace detail {

// r^(p)(a) = sum_{c <= p} C(p, c) E_a{phi^c} w_{p-c}, w = lambda(x0) / lambda(.).
inline double derivative_function_from_moments(MomentCache& at_x0, MomentCache& at_a, const MultiIndex& p) {
  double acc = 0.0;
  for (const MultiIndex& c : multi_indices_leq(p))
    acc += static_cast<double>(multi_binomial(p, c)) * at_a(c) * at_x0.inverse_mgf_derivative(p - c);
  return acc;
}

// <r^(p), r^(q)> = d^p_t d^q_s R(t, s) at (x0, x0)
//               = sum_{a <= p} sum_{b <= q} C(p,a) C(q,b) w_{p-a} w_{q-b} E{phi^{a+b}}.
inline double derivative_inner_product(MomentCache& at_x0, const MultiIndex& p, const MultiIndex& q) {
  double acc = 0.0;
  for (const MultiIndex& a : multi_indices_leq(p)) {
    const double wa = at_x0.inverse_mgf_derivative(p - a);
    if (wa == 0.0) continue;
    for (const MultiIndex& b : multi_indices_leq(q)) {
      const double wb = at_x0.inverse_mgf_derivative(q - b);
      if (wb == 0.0) continue;
      acc += static_cast<double>(multi_binomial(p, a) * multi_binomial(q, b)) * wa * wb * at_x0(a + b);
    }
  }
  return acc;
}

}  // namespace detail

// Same quantity as derivative_kernel_function, computed from moments instead
// of finite differences.
inline double derivative_kernel_function_exact(const KernelEvaluator& ev, const MultiIndex& p,
                                               const Vector& x_eval) {
  const auto& model = ev.expfam();
  MomentCache at_x0(model, ev.x0());
  MomentCache at_a(model, x_eval);
  return detail::derivative_function_from_moments(at_x0, at_a, p);
}

// Gram matrix of the given basis functions. Closed form uses the
// reproducing property on kernel values and moment-based kernel derivatives;
// Monte Carlo averages products of the frozen per-draw realizations.
inline Matrix gram(const KernelEvaluator& ev, const std::vector<BasisFunction>& basis) {
  const auto L = static_cast<Eigen::Index>(basis.size());
  Matrix g(L, L);
  if (L == 0) return g;

  if (ev.mode() == KernelMode::monte_carlo) {
    Matrix u(static_cast<Eigen::Index>(ev.sample_count()), L);
    for (Eigen::Index l = 0; l < L; ++l) u.col(l) = ev.basis_samples(basis[static_cast<std::size_t>(l)]);
    g = (u.transpose() * u) / static_cast<double>(ev.sample_count());
    return 0.5 * (g + g.transpose());
  }

  const auto& model = ev.expfam();
  const Vector& x0 = ev.x0();
  MomentCache at_x0(model, x0);
  auto deriv_at = [&](const MultiIndex& p, const Vector& a) {
    MomentCache at_a(model, a);
    return detail::derivative_function_from_moments(at_x0, at_a, p);
  };
  auto point_of = [](const BasisFunction& b) -> const Vector& {
    return std::holds_alternative<PointEvaluation>(b) ? std::get<PointEvaluation>(b).x
                                                      : std::get<DifferenceFunction>(b).x;
  };

  auto inner = [&](const BasisFunction& u, const BasisFunction& v) -> double {
    const bool u_der = std::holds_alternative<DerivativeFunction>(u);
    const bool v_der = std::holds_alternative<DerivativeFunction>(v);
    if (u_der && v_der)
      return detail::derivative_inner_product(at_x0, std::get<DerivativeFunction>(u).p,
                                              std::get<DerivativeFunction>(v).p);
    if (u_der || v_der) {
      const MultiIndex& p = std::get<DerivativeFunction>(u_der ? u : v).p;
      const BasisFunction& other = u_der ? v : u;
      const double r = deriv_at(p, point_of(other));
      // r^(p)(x0) = d^p 1 = [p == 0]
      if (std::holds_alternative<DifferenceFunction>(other)) return r - (p.is_zero() ? 1.0 : 0.0);
      return r;
    }
    const Vector& a = point_of(u);
    const Vector& b = point_of(v);
    const bool u_diff = std::holds_alternative<DifferenceFunction>(u);
    const bool v_diff = std::holds_alternative<DifferenceFunction>(v);
    if (!u_diff && !v_diff) return ev.evaluate(a, b).value;
    double acc = ev.excess(a, b);
    if (v_diff) acc -= ev.excess(a, x0);
    if (u_diff) acc -= ev.excess(x0, b);
    if (u_diff && v_diff) acc += ev.excess(x0, x0);
    return acc;
  };

  for (Eigen::Index i = 0; i < L; ++i)
    for (Eigen::Index j = i; j < L; ++j) {
      g(i, j) = inner(basis[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(j)]);
      g(j, i) = g(i, j);
    }
  return g;
}

// Kernel invariance under a sufficient statistic z = t(y).
struct SufficiencyProbe {
  Vector x1, x2;
  double value_y = 0.0, value_z = 0.0;
  double se_y = 0.0, se_z = 0.0;
  double abs_difference = 0.0;
  double tolerance = 0.0;
  bool flagged = false;
};

struct SufficiencyReport {
  KernelMode mode = KernelMode::expfam_closed_form;
  std::vector<SufficiencyProbe> probes;
  // Largest |rho_y(y_i, x) - rho_z(t(y_i), x)| / rho_y over draws and probe
  // points, when the statistic map is supplied (Monte Carlo mode).
  double max_pointwise_ratio_deviation = 0.0;
  bool all_agree = true;
};

struct SufficientStatistic {
  std::function<Observation(const Observation&)> map;  // may be empty
  ExponentialFamilyModel induced;
};

struct SufficiencyCheckOptions {
  KernelMode mode = KernelMode::expfam_closed_form;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  double closed_form_tolerance = 1e-9;
  double se_multiplier = 4.0;
};

inline SufficiencyReport suffstat_kernel_check(const ExponentialFamilyModel& model, const SufficientStatistic& stat,
                                               const Vector& x0,
                                               const std::vector<std::pair<Vector, Vector>>& probe_pairs,
                                               const SufficiencyCheckOptions& opt = {}) {
  SufficiencyReport rep;
  rep.mode = opt.mode;
  const bool closed = opt.mode == KernelMode::expfam_closed_form;
  const KernelEvaluator ky = closed ? KernelEvaluator::closed_form(model, x0)
                                    : KernelEvaluator::monte_carlo(to_generic(model), x0, opt.samples, opt.seed);
  // independent draws for the induced model
  const KernelEvaluator kz = closed ? KernelEvaluator::closed_form(stat.induced, x0)
                                    : KernelEvaluator::monte_carlo(to_generic(stat.induced), x0, opt.samples,
                                                                   opt.seed + 0x9E3779B97F4A7C15ULL);
  for (const auto& [x1, x2] : probe_pairs) {
    SufficiencyProbe pr;
    pr.x1 = x1;
    pr.x2 = x2;
    const KernelValue vy = ky.evaluate(x1, x2);
    const KernelValue vz = kz.evaluate(x1, x2);
    pr.value_y = vy.value;
    pr.value_z = vz.value;
    pr.se_y = vy.standard_error;
    pr.se_z = vz.standard_error;
    pr.abs_difference = std::abs(vy.value - vz.value);
    pr.tolerance = closed ? opt.closed_form_tolerance
                          : opt.se_multiplier * std::sqrt(vy.standard_error * vy.standard_error +
                                                          vz.standard_error * vz.standard_error);
    pr.flagged = pr.abs_difference > pr.tolerance;
    rep.all_agree = rep.all_agree && !pr.flagged;
    rep.probes.push_back(std::move(pr));
  }

  if (!closed && stat.map) {
    const auto draws = sample(model, x0, opt.seed, std::min<std::size_t>(opt.samples, 1000));
    for (const auto& [x1, x2] : probe_pairs)
      for (const Vector* x : {&x1, &x2})
        for (const auto& y : draws) {
          const double ry = likelihood_ratio(model, y, *x, x0);
          const double rz = likelihood_ratio(stat.induced, stat.map(y), *x, x0);
          rep.max_pointwise_ratio_deviation = std::max(rep.max_pointwise_ratio_deviation, std::abs(ry - rz) / ry);
        }
  }
  return rep;
}

}  // namespace varbound
