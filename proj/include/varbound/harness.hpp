#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "varbound/bound_request.hpp"
#include "varbound/bounds.hpp"
#include "varbound/csv.hpp"
#include "varbound/error.hpp"
#include "varbound/linalg.hpp"
#include "varbound/mean_function.hpp"
#include "varbound/model.hpp"

namespace varbound {

inline constexpr double kDefaultMarginSe = 4.0;

namespace detail {

// Runs fn(i) for i in [0, n) on a small worker pool; results land in index
// order, so output does not depend on scheduling.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, Fn fn) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline std::vector<Observation> draw(const AnyModel& model, const Vector& x, std::uint64_t seed, std::size_t n) {
  return std::visit([&](const auto& m) { return sample(m, x, seed, n); }, model);
}

}  // namespace detail

struct EstimatorSpec {
  std::string name;
  std::function<double(const Observation&)> map;
  std::optional<MeanFunction> declared_mean;
};

struct EstimatorStats {
  double mean = 0.0;
  double variance = 0.0;     // unbiased sample variance
  double se_mean = 0.0;      // jackknife
  double se_variance = 0.0;  // jackknife
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

inline EstimatorStats estimator_variance_mc(const AnyModel& model, const EstimatorSpec& est, const Vector& x0,
                                            std::size_t n, std::uint64_t seed) {
  if (n < 100) throw ConfigError("estimator variance needs at least 100 draws");
  const auto draws = detail::draw(model, x0, seed, n);
  Vector g(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < n; ++i) {
    g[static_cast<Eigen::Index>(i)] = est.map(draws[i]);
    if (!std::isfinite(g[static_cast<Eigen::Index>(i)])) bad.push_back(i);
  }
  if (!bad.empty())
    throw DataError("estimator '" + est.name + "' returned non-finite values on " + std::to_string(bad.size()) +
                        " draws",
                    bad);

  const double nn = static_cast<double>(n);
  EstimatorStats s;
  s.samples = n;
  s.seed = seed;
  s.mean = g.mean();
  const Vector c = g.array() - s.mean;
  const double ss = c.squaredNorm();
  s.variance = ss / (nn - 1.0);
  s.se_mean = std::sqrt(s.variance / nn);

  // leave-one-out variances: (ss - n c_i^2 / (n - 1)) / (n - 2)
  const Vector loo = (ss - c.array().square() * (nn / (nn - 1.0))) / (nn - 2.0);
  const double loo_mean = loo.mean();
  s.se_variance = std::sqrt((nn - 1.0) / nn * (loo.array() - loo_mean).square().sum());
  return s;
}

// Monte Carlo mean of the estimator vs its declared mean at probe parameters.
struct DeclaredMeanCheck {
  std::vector<Vector> probes;
  std::vector<double> mc_mean, declared, se;
  bool consistent = true;
};

inline DeclaredMeanCheck check_declared_mean(const AnyModel& model, const EstimatorSpec& est,
                                             const std::vector<Vector>& probes, std::size_t n, std::uint64_t seed,
                                             double se_multiplier = kDefaultMarginSe) {
  if (!est.declared_mean) throw ConfigError("estimator '" + est.name + "' has no declared mean");
  DeclaredMeanCheck out;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const EstimatorStats s = estimator_variance_mc(model, est, probes[i], n, seed + i);
    const double d = est.declared_mean->value(probes[i]);
    out.probes.push_back(probes[i]);
    out.mc_mean.push_back(s.mean);
    out.declared.push_back(d);
    out.se.push_back(s.se_mean);
    out.consistent = out.consistent && std::abs(s.mean - d) <= se_multiplier * s.se_mean + 1e-12;
  }
  return out;
}

struct ValidationEntry {
  BoundMethod method = BoundMethod::crb;
  double bound = 0.0;
  double margin = 0.0;     // empirical variance - bound
  double threshold = 0.0;  // se_multiplier * se_variance
  bool passes = true;      // margin >= -threshold
  BoundDiagnostics diagnostics;
};

struct ValidationReport {
  EstimatorStats stats;
  Vector x0;
  std::vector<ValidationEntry> entries;
  bool all_pass = true;
};

inline ValidationReport validate_bounds(const AnyModel& model, const EstimatorSpec& est, const Vector& x0,
                                        const std::vector<BoundRequest>& bounds, std::size_t n, std::uint64_t seed,
                                        const BoundOptions& opt = {}, double se_multiplier = kDefaultMarginSe) {
  if (!bounds.empty() && !est.declared_mean)
    throw ConfigError("estimator '" + est.name + "' needs a declared mean function to evaluate bounds");
  ValidationReport rep;
  rep.x0 = x0;
  rep.stats = estimator_variance_mc(model, est, x0, n, seed);
  for (const auto& req : bounds) {
    const BoundResult b = compute_bound(model, *est.declared_mean, x0, req, opt);
    ValidationEntry e;
    e.method = b.method;
    e.bound = b.value;
    e.margin = rep.stats.variance - b.value;
    e.threshold = se_multiplier * rep.stats.se_variance;
    e.passes = e.margin >= -e.threshold;
    e.diagnostics = b.diagnostics;
    rep.all_pass = rep.all_pass && e.passes;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

struct ScanReport {
  std::vector<Vector> grid;
  std::vector<double> values;
  std::vector<BoundDiagnostics> diagnostics;
  BoundMethod method = BoundMethod::barankin_approx;
  double largest_downward_jump = 0.0;  // max over adjacent pairs of v_i - v_{i+1}, >= 0
  std::uint64_t seed = 0;
};

// Evaluates one bound with each grid point as reference parameter.
inline ScanReport semicontinuity_scan(const AnyModel& model, const MeanFunction& gamma, const std::vector<Vector>& grid,
                                      const BoundRequest& request, const BoundOptions& opt = {}) {
  auto results = detail::parallel_map<BoundResult>(
      grid.size(), [&](std::size_t i) { return compute_bound(model, gamma, grid[i], request, opt); });
  ScanReport rep;
  rep.grid = grid;
  rep.method = request.method;
  rep.seed = request.method == BoundMethod::barankin_approx ? request.search.seed : opt.mc.seed;
  for (auto& r : results) {
    if (!std::isfinite(r.value) || r.value < 0.0) throw NumericalError("scan produced an invalid bound value");
    rep.values.push_back(r.value);
    rep.diagnostics.push_back(std::move(r.diagnostics));
  }
  for (std::size_t i = 0; i + 1 < rep.values.size(); ++i)
    rep.largest_downward_jump = std::max(rep.largest_downward_jump, rep.values[i] - rep.values[i + 1]);
  return rep;
}

// Evenly spaced grid on the segment [lower, upper].
inline std::vector<Vector> linear_grid(const Vector& lower, const Vector& upper, std::size_t count) {
  if (lower.size() != upper.size()) throw ConfigError("grid bounds differ in dimension");
  if (count == 0) throw ConfigError("grid needs at least one point");
  std::vector<Vector> g;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    g.push_back(lower + t * (upper - lower));
  }
  return g;
}

struct ReductionReport {
  Vector x0;
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<BoundDiagnostics> diagnostics;
  double spread = 0.0;  // max - min over radii
  std::uint64_t seed = 0;
};

// Barankin approximation with test points confined to B(x0, r) per radius.
inline ReductionReport reduction_experiment(const AnyModel& model, const MeanFunction& gamma, const Vector& x0,
                                            const std::vector<double>& radii, const BarankinSearch& search,
                                            const BoundOptions& opt = {}) {
  for (double r : radii)
    if (!(r > 0.0)) throw ConfigError("reduction radii must be positive");
  auto results = detail::parallel_map<BoundResult>(radii.size(), [&](std::size_t i) {
    BarankinSearch s = search;
    s.radius = radii[i];
    s.half_width = std::min(s.half_width, radii[i]);
    s.initial_step = std::min(s.initial_step, radii[i] / 2.0);
    s.initial.erase(std::remove_if(s.initial.begin(), s.initial.end(),
                                   [&](const Vector& p) { return !((p - x0).norm() < radii[i]); }),
                    s.initial.end());
    return barankin_approx(model, gamma, x0, s, opt);
  });
  ReductionReport rep;
  rep.x0 = x0;
  rep.radii = radii;
  rep.seed = search.seed;
  for (auto& r : results) {
    rep.values.push_back(r.value);
    rep.diagnostics.push_back(std::move(r.diagnostics));
  }
  if (!rep.values.empty()) {
    const auto [lo, hi] = std::minmax_element(rep.values.begin(), rep.values.end());
    rep.spread = *hi - *lo;
  }
  return rep;
}

inline CsvTable scan_csv(const ScanReport& rep) {
  CsvTable t;
  const Eigen::Index n = rep.grid.empty() ? 0 : rep.grid.front().size();
  for (Eigen::Index k = 0; k < n; ++k) t.header.push_back("x" + std::to_string(k + 1));
  for (const char* h : {"method", "value", "gram_rank", "condition_number", "clamped", "seed"}) t.header.emplace_back(h);
  for (std::size_t i = 0; i < rep.grid.size(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index k = 0; k < n; ++k) row.push_back(format_double(rep.grid[i][k]));
    const auto& d = rep.diagnostics[i];
    row.push_back(to_string(rep.method));
    row.push_back(format_double(rep.values[i]));
    row.push_back(std::to_string(d.gram_rank));
    row.push_back(format_double(d.condition_number));
    row.push_back(d.clamped ? "1" : "0");
    row.push_back(std::to_string(rep.seed));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable reduction_csv(const ReductionReport& rep) {
  CsvTable t;
  for (Eigen::Index k = 0; k < rep.x0.size(); ++k) t.header.push_back("x" + std::to_string(k + 1));
  for (const char* h : {"radius", "value", "gram_rank", "condition_number", "clamped", "seed"}) t.header.emplace_back(h);
  for (std::size_t i = 0; i < rep.radii.size(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index k = 0; k < rep.x0.size(); ++k) row.push_back(format_double(rep.x0[k]));
    const auto& d = rep.diagnostics[i];
    row.push_back(format_double(rep.radii[i]));
    row.push_back(format_double(rep.values[i]));
    row.push_back(std::to_string(d.gram_rank));
    row.push_back(format_double(d.condition_number));
    row.push_back(d.clamped ? "1" : "0");
    row.push_back(std::to_string(rep.seed));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace varbound
