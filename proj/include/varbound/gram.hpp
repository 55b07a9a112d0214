#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "varbound/error.hpp"
#include "varbound/linalg.hpp"

namespace varbound {

inline constexpr double kDefaultPinvTolerance = 1e-10;

struct GramDiagnostics {
  int rank = 0;                 // singular values kept by the pseudoinverse
  double min_eigenvalue = 0.0;
  double max_singular_value = 0.0;
  double condition_number = 1.0;  // over the retained spectrum
  double asymmetry = 0.0;         // max |G - G^T|
  bool clamped = false;           // projected norm was negative and set to 0
  int leading_terms = 0;          // size of the leading subsystem attaining the projection
};

// G_{l,l'} = <u_l, u_l'>, rhs_l = <gamma, u_l>.
struct GramSystem {
  Matrix gram;
  Vector rhs;
  double pinv_tol = kDefaultPinvTolerance;
  GramDiagnostics diagnostics;
};

namespace detail {

struct SymmetricSpectrum {
  Vector eigenvalues;
  Matrix eigenvectors;
};

inline SymmetricSpectrum symmetric_spectrum(const Matrix& g) {
  const Matrix sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition of the Gram matrix failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace detail

inline GramSystem make_gram_system(Matrix gram, Vector rhs, double pinv_tol = kDefaultPinvTolerance) {
  if (gram.rows() != gram.cols()) throw ConfigError("Gram matrix must be square");
  if (gram.rows() != rhs.size()) throw ConfigError("Gram matrix and right-hand side sizes differ");
  if (!(pinv_tol > 0.0)) throw ConfigError("pseudoinverse tolerance must be positive");
  if (!gram.allFinite() || !rhs.allFinite()) throw NumericalError("Gram system contains non-finite entries");

  GramSystem sys{std::move(gram), std::move(rhs), pinv_tol, {}};
  auto& d = sys.diagnostics;
  if (sys.gram.size() == 0) return sys;

  d.asymmetry = (sys.gram - sys.gram.transpose()).cwiseAbs().maxCoeff();
  const auto spec = detail::symmetric_spectrum(sys.gram);
  d.min_eigenvalue = spec.eigenvalues.minCoeff();
  d.max_singular_value = spec.eigenvalues.cwiseAbs().maxCoeff();
  double smallest_kept = d.max_singular_value;
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    const double s = std::abs(spec.eigenvalues[i]);
    if (d.max_singular_value > 0.0 && s > pinv_tol * d.max_singular_value) {
      ++d.rank;
      smallest_kept = std::min(smallest_kept, s);
    }
  }
  d.condition_number = d.rank > 0 ? d.max_singular_value / smallest_kept : 1.0;
  return sys;
}

struct ProjectionResult {
  double value = 0.0;
  GramDiagnostics diagnostics;
};

namespace detail {

inline double truncated_quadratic(const Matrix& g, const Vector& rhs, double pinv_tol) {
  const auto spec = symmetric_spectrum(g);
  const double sigma_max = spec.eigenvalues.cwiseAbs().maxCoeff();
  if (sigma_max == 0.0) return 0.0;
  const Vector coords = spec.eigenvectors.transpose() * rhs;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    const double lam = spec.eigenvalues[i];
    if (std::abs(lam) > pinv_tol * sigma_max) acc += coords[i] * coords[i] / lam;
  }
  return acc;
}

}  // namespace detail

// rhs^T G^+ rhs with singular values below pinv_tol * sigma_max dropped.
// Truncation can discard directions that a leading sub-basis still resolves,
// so the value is the maximum over the leading k x k subsystems, k = 1..L;
// each is a projection onto a subspace, and in exact arithmetic the maximum
// is attained at k = L. Negative results (rounding noise) are clamped to zero
// and flagged.
inline ProjectionResult projection(const GramSystem& sys) {
  ProjectionResult out{0.0, sys.diagnostics};
  const Eigen::Index n = sys.gram.rows();
  if (n == 0) return out;
  double best = detail::truncated_quadratic(sys.gram, sys.rhs, sys.pinv_tol);
  out.diagnostics.leading_terms = static_cast<int>(n);
  for (Eigen::Index k = 1; k < n; ++k) {
    const double v = detail::truncated_quadratic(sys.gram.topLeftCorner(k, k), sys.rhs.head(k), sys.pinv_tol);
    if (v > best) {
      best = v;
      out.diagnostics.leading_terms = static_cast<int>(k);
    }
  }
  if (best < 0.0) {
    out.diagnostics.clamped = true;
    best = 0.0;
  }
  out.value = best;
  return out;
}

inline double projected_sq_norm(const GramSystem& sys) { return projection(sys).value; }

// Moore-Penrose pseudoinverse of a symmetric matrix with relative truncation.
inline Matrix symmetric_pinv(const Matrix& g, double pinv_tol = kDefaultPinvTolerance) {
  if (g.size() == 0) return g;
  const auto spec = detail::symmetric_spectrum(g);
  const double sigma_max = spec.eigenvalues.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(spec.eigenvalues.size());
  for (Eigen::Index i = 0; i < inv.size(); ++i)
    if (sigma_max > 0.0 && std::abs(spec.eigenvalues[i]) > pinv_tol * sigma_max) inv[i] = 1.0 / spec.eigenvalues[i];
  return spec.eigenvectors * inv.asDiagonal() * spec.eigenvectors.transpose();
}

}  // namespace varbound
