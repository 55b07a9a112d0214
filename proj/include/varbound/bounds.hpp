#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "varbound/error.hpp"
#include "varbound/finite_difference.hpp"
#include "varbound/gram.hpp"
#include "varbound/kernel.hpp"
#include "varbound/linalg.hpp"
#include "varbound/mean_function.hpp"
#include "varbound/model.hpp"
#include "varbound/moments.hpp"
#include "varbound/multi_index.hpp"

namespace varbound {

enum class BoundMethod { crb, constrained_crb, bhattacharyya, hcrb, barankin_approx, expfam_moment, expfam_crb };

inline std::string to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::crb: return "crb";
    case BoundMethod::constrained_crb: return "constrained_crb";
    case BoundMethod::bhattacharyya: return "bhattacharyya";
    case BoundMethod::hcrb: return "hcrb";
    case BoundMethod::barankin_approx: return "barankin_approx";
    case BoundMethod::expfam_moment: return "expfam_moment";
    case BoundMethod::expfam_crb: return "expfam_crb";
  }
  return "unknown";
}

inline BoundMethod parse_bound_method(const std::string& s) {
  for (BoundMethod m : {BoundMethod::crb, BoundMethod::constrained_crb, BoundMethod::bhattacharyya, BoundMethod::hcrb,
                        BoundMethod::barankin_approx, BoundMethod::expfam_moment, BoundMethod::expfam_crb})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown bound method '" + s + "'");
}

struct SearchTraceEntry {
  int restart = 0;
  int level = 0;  // number of step halvings so far
  double step = 0.0;
  double value = 0.0;
  std::vector<Vector> points;
};

struct BoundDiagnostics {
  int gram_rank = 0;
  double condition_number = 1.0;
  bool clamped = false;
  bool finite_difference_moments = false;
  std::optional<double> mc_standard_error;
  std::vector<SearchTraceEntry> search_trace;
  std::vector<Vector> best_points;
};

struct BoundResult {
  double value = 0.0;  // variance lower bound, >= 0
  BoundMethod method = BoundMethod::crb;
  BoundDiagnostics diagnostics;
};

struct MonteCarloOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 20240611;
};

struct BoundOptions {
  double pinv_tol = kDefaultPinvTolerance;
  MonteCarloOptions mc;
};

// HCRB test points / Barankin candidate set.
struct TestPointSet {
  enum class Provenance { user, grid, random, refinement };

  std::vector<Vector> points;
  Provenance provenance = Provenance::user;

  void validate(const Vector& x0) const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].size() != x0.size()) throw ConfigError("test point dimension mismatch");
      if ((points[i] - x0).norm() < 1e-12) throw ConfigError("test points must exclude the reference parameter");
      for (std::size_t j = 0; j < i; ++j)
        if ((points[i] - points[j]).norm() < 1e-12) throw ConfigError("duplicate test points");
    }
  }
};

namespace detail {

inline BoundResult finish(BoundMethod method, const GramSystem& sys) {
  const ProjectionResult p = projection(sys);
  BoundResult r;
  r.method = method;
  r.value = p.value;
  r.diagnostics.gram_rank = p.diagnostics.rank;
  r.diagnostics.condition_number = p.diagnostics.condition_number;
  r.diagnostics.clamped = p.diagnostics.clamped;
  return r;
}

inline void check_x0(const AnyModel& model, const Vector& x0) {
  if (const auto* ef = std::get_if<ExponentialFamilyModel>(&model)) {
    require_natural_space(*ef, x0);
  } else if (x0.size() != param_dim(model)) {
    throw ConfigError("reference parameter dimension mismatch");
  }
}

inline void check_indices(const std::vector<MultiIndex>& indices, int dim, bool allow_zero) {
  std::set<MultiIndex> seen;
  for (const auto& p : indices) {
    if (static_cast<int>(p.size()) != dim) throw ConfigError("multi-index " + p.to_string() + " has wrong dimension");
    if (p.order() > kMaxDerivativeOrder) throw ConfigError("multi-index order is capped at 4: " + p.to_string());
    if (!allow_zero && p.is_zero()) throw ConfigError("Bhattacharyya indices must have order >= 1");
    if (!seen.insert(p).second) throw ConfigError("duplicate multi-index " + p.to_string());
  }
}

}  // namespace detail

inline KernelEvaluator make_evaluator(const AnyModel& model, const Vector& x0, const MonteCarloOptions& mc = {}) {
  if (const auto* ef = std::get_if<ExponentialFamilyModel>(&model)) return KernelEvaluator::closed_form(*ef, x0);
  return KernelEvaluator::monte_carlo(std::get<GenericModel>(model), x0, mc.samples, mc.seed);
}

// J(x0) = Cov_{x0}(phi(y)), exact from moments.
inline Matrix fisher_info(const ExponentialFamilyModel& model, const Vector& x0) {
  require_natural_space(model, x0);
  const auto n = static_cast<std::size_t>(model.param_dim);
  MomentCache m(model, x0);
  Matrix j(model.param_dim, model.param_dim);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      const auto ea = MultiIndex::unit(n, a), eb = MultiIndex::unit(n, b);
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      j(ia, ib) = m(ea + eb) - m(ea) * m(eb);
      j(ib, ia) = j(ia, ib);
    }
  if (!j.allFinite()) throw NumericalError("non-finite Fisher information");
  return j;
}

// J(x0) = E_{x0}{s s^T}, score s by central differences of log f, averaged
// over `samples` draws.
inline Matrix fisher_info(const GenericModel& model, const Vector& x0, std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw ConfigError("Fisher information needs at least 2 samples");
  const auto draws = sample(model, x0, seed, samples);
  const int n = model.param_dim;
  Matrix j = Matrix::Zero(n, n);
  Vector score(n);
  for (const auto& y : draws) {
    const ScalarField ld = [&](const Vector& x) { return log_density(model, y, x).to_double(); };
    for (int k = 0; k < n; ++k) {
      const auto e = MultiIndex::unit(static_cast<std::size_t>(n), static_cast<std::size_t>(k));
      FDConfig cfg = default_fd_config(x0, e);
      cfg.step *= 10.0;
      try {
        score[k] = partial_derivative_richardson(ld, x0, e, cfg);
      } catch (const StencilError&) {
        throw NumericalError("non-finite score in " + model.name);
      }
    }
    j.noalias() += score * score.transpose();
  }
  return j / static_cast<double>(samples);
}

inline Matrix fisher_info(const AnyModel& model, const Vector& x0, const MonteCarloOptions& mc = {}) {
  if (const auto* ef = std::get_if<ExponentialFamilyModel>(&model)) return fisher_info(*ef, x0);
  return fisher_info(std::get<GenericModel>(model), x0, mc.samples, mc.seed);
}

// b^T J^+ b, b = grad gamma(x0).
inline BoundResult crb(const AnyModel& model, const MeanFunction& gamma, const Vector& x0,
                       const BoundOptions& opt = {}) {
  detail::check_x0(model, x0);
  return detail::finish(BoundMethod::crb,
                        make_gram_system(fisher_info(model, x0, opt.mc), mean_gradient(gamma, x0), opt.pinv_tol));
}

// Orthonormal basis of the null space of a full-row-rank Q x N matrix.
inline Matrix null_space_onb(const Matrix& f) {
  const Eigen::Index q = f.rows(), n = f.cols();
  if (q == 0) return Matrix::Identity(n, n);
  if (q > n) throw NumericalError("constraint Jacobian has more rows than parameters (redundant constraints)");
  Eigen::JacobiSVD<Matrix> svd(f, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  if (!(s.maxCoeff() > 0.0) || s.minCoeff() <= 1e-10 * s.maxCoeff())
    throw NumericalError("constraint Jacobian is rank deficient (redundant constraints)");
  return svd.matrixV().rightCols(n - q);
}

// b^T U (U^T J U)^+ U^T b with U an ONB of null(F).
inline BoundResult constrained_crb(const AnyModel& model, const MeanFunction& gamma, const Vector& x0,
                                   const Matrix& constraint_jacobian, const BoundOptions& opt = {}) {
  detail::check_x0(model, x0);
  if (constraint_jacobian.cols() != x0.size()) throw ConfigError("constraint Jacobian must have N columns");
  const Matrix u = null_space_onb(constraint_jacobian);
  if (u.cols() == 0) return {0.0, BoundMethod::constrained_crb, {}};
  const Matrix j = fisher_info(model, x0, opt.mc);
  const Vector b = mean_gradient(gamma, x0);
  return detail::finish(BoundMethod::constrained_crb,
                        make_gram_system(u.transpose() * j * u, u.transpose() * b, opt.pinv_tol));
}

// a^T B^+ a, a_l = d^{p_l} gamma(x0), B_{l,l'} = <r^(p_l), r^(p_l')>.
inline BoundResult bhattacharyya(const AnyModel& model, const MeanFunction& gamma, const Vector& x0,
                                 const std::vector<MultiIndex>& indices, const BoundOptions& opt = {}) {
  detail::check_x0(model, x0);
  detail::check_indices(indices, param_dim(model), false);
  const KernelEvaluator ev = make_evaluator(model, x0, opt.mc);
  std::vector<BasisFunction> basis;
  Vector a(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t l = 0; l < indices.size(); ++l) {
    basis.emplace_back(DerivativeFunction{indices[l]});
    a[static_cast<Eigen::Index>(l)] = mean_derivative(gamma, x0, indices[l]);
  }
  auto r = detail::finish(BoundMethod::bhattacharyya, make_gram_system(gram(ev, basis), a, opt.pinv_tol));
  if (ev.mode() == KernelMode::expfam_closed_form) r.diagnostics.finite_difference_moments = !ev.expfam().closed_moments;
  return r;
}

// m^T V^+ m, m_l = gamma(x_l) - gamma(x0), V the Gram matrix of the
// differences R(., x_l) - R(., x0).
inline BoundResult hcrb(const KernelEvaluator& ev, const MeanFunction& gamma, const std::vector<Vector>& points,
                        double pinv_tol = kDefaultPinvTolerance) {
  std::vector<BasisFunction> basis;
  Vector m(static_cast<Eigen::Index>(points.size()));
  const double g0 = gamma.value(ev.x0());
  for (std::size_t l = 0; l < points.size(); ++l) {
    basis.emplace_back(DifferenceFunction{points[l]});
    m[static_cast<Eigen::Index>(l)] = gamma.value(points[l]) - g0;
  }
  return detail::finish(BoundMethod::hcrb, make_gram_system(gram(ev, basis), m, pinv_tol));
}

inline BoundResult hcrb(const AnyModel& model, const MeanFunction& gamma, const Vector& x0, const TestPointSet& tps,
                        const BoundOptions& opt = {}) {
  detail::check_x0(model, x0);
  tps.validate(x0);
  return hcrb(make_evaluator(model, x0, opt.mc), gamma, tps.points, opt.pinv_tol);
}

// n^T S^+ n - gamma(x0)^2 with
//   n_l = sum_{q <= p_l} C(p_l, q) E{phi^{p_l - q}} d^q gamma(x0),
//   S_{l,l'} = E{phi^{p_l + p_l'}},
// clamped at zero.
inline BoundResult expfam_bound(const ExponentialFamilyModel& model, const MeanFunction& gamma, const Vector& x0,
                                const std::vector<MultiIndex>& indices, const BoundOptions& opt = {}) {
  require_natural_space(model, x0);
  detail::check_indices(indices, model.param_dim, true);
  MomentCache m(model, x0);
  const auto L = static_cast<Eigen::Index>(indices.size());
  Vector n = Vector::Zero(L);
  Matrix s(L, L);
  for (Eigen::Index l = 0; l < L; ++l) {
    const MultiIndex& pl = indices[static_cast<std::size_t>(l)];
    for (const MultiIndex& q : multi_indices_leq(pl))
      n[l] += static_cast<double>(multi_binomial(pl, q)) * m(pl - q) * mean_derivative(gamma, x0, q);
    for (Eigen::Index k = l; k < L; ++k) {
      s(l, k) = m(pl + indices[static_cast<std::size_t>(k)]);
      s(k, l) = s(l, k);
    }
  }
  const GramSystem sys = make_gram_system(s, n, opt.pinv_tol);
  const ProjectionResult p = projection(sys);
  const double g0 = gamma.value(x0);
  BoundResult r;
  r.method = BoundMethod::expfam_moment;
  r.value = p.value - g0 * g0;
  r.diagnostics.gram_rank = p.diagnostics.rank;
  r.diagnostics.condition_number = p.diagnostics.condition_number;
  r.diagnostics.finite_difference_moments = m.used_finite_differences();
  if (r.value < 0.0) {
    r.value = 0.0;
    r.diagnostics.clamped = true;
  }
  return r;
}

// n^T J^+ n with n = grad gamma(x0) and J = S - E{phi} E{phi}^T.
inline BoundResult expfam_crb(const ExponentialFamilyModel& model, const MeanFunction& gamma, const Vector& x0,
                              const BoundOptions& opt = {}) {
  require_natural_space(model, x0);
  auto r = detail::finish(BoundMethod::expfam_crb,
                          make_gram_system(fisher_info(model, x0), mean_gradient(gamma, x0), opt.pinv_tol));
  r.diagnostics.finite_difference_moments = !model.closed_moments;
  return r;
}

}  // namespace varbound
