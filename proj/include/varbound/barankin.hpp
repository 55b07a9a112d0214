#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <random>
#include <vector>

#include "varbound/bounds.hpp"
#include "varbound/error.hpp"
#include "varbound/kernel.hpp"
#include "varbound/linalg.hpp"
#include "varbound/mean_function.hpp"
#include "varbound/model.hpp"

namespace varbound {

// Local search for the supremum of the HCRB projection over test-point sets.
// Each run perturbs one coordinate of one test point at a time by +-step,
// accepts strict improvements, and halves the step when a sweep finds none.
struct BarankinSearch {
  std::vector<Vector> initial;  // starting set for the first run; random when empty
  std::size_t max_points = 4;
  int restarts = 5;             // random runs after the first
  double initial_step = 0.5;
  int halvings = 8;
  std::uint64_t seed = 20240611;
  double half_width = 3.0;      // test points stay in the box x0 +- half_width
  std::optional<double> radius; // and, if set, in the open ball B(x0, radius)
  double min_distance = 1e-6;   // test points closer than this to x0 or to each other are rejected
  int max_sweeps_per_level = 200;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct SearchRun {
  double value = -1.0;
  std::vector<Vector> points;
  BoundResult best;
  std::vector<SearchTraceEntry> trace;
};

class BarankinObjective {
 public:
  BarankinObjective(const KernelEvaluator& ev, const MeanFunction& gamma, const BarankinSearch& search,
                    double pinv_tol)
      : ev_(ev), gamma_(gamma), search_(search), pinv_tol_(pinv_tol) {}

  bool admissible(const Vector& p) const {
    const Vector d = p - ev_.x0();
    if (d.cwiseAbs().maxCoeff() > search_.half_width) return false;
    if (search_.radius && !(d.norm() < *search_.radius)) return false;
    return d.norm() >= search_.min_distance;
  }

  std::optional<BoundResult> operator()(const std::vector<Vector>& pts) const {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!admissible(pts[i])) return std::nullopt;
      for (std::size_t j = 0; j < i; ++j)
        if ((pts[i] - pts[j]).norm() < search_.min_distance) return std::nullopt;
    }
    try {
      BoundResult r = hcrb(ev_, gamma_, pts, pinv_tol_);
      if (!std::isfinite(r.value)) return std::nullopt;
      return r;
    } catch (const Error&) {
      // outside the kernel's domain or overflow: not a usable candidate
      return std::nullopt;
    }
  }

  Vector random_point(std::mt19937_64& gen) const {
    const double w = search_.radius ? std::min(search_.half_width, *search_.radius) : search_.half_width;
    std::uniform_real_distribution<double> u(-w, w);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Vector p = ev_.x0();
      for (Eigen::Index k = 0; k < p.size(); ++k) p[k] += u(gen);
      if (admissible(p)) return p;
    }
    throw NumericalError("could not draw an admissible Barankin test point");
  }

 private:
  const KernelEvaluator& ev_;
  const MeanFunction& gamma_;
  const BarankinSearch& search_;
  double pinv_tol_;
};

inline SearchRun run_search(const BarankinObjective& objective, const BarankinSearch& search, int restart) {
  std::mt19937_64 gen(splitmix64(search.seed + static_cast<std::uint64_t>(restart)));
  SearchRun run;

  std::optional<BoundResult> current;
  std::vector<Vector> pts;
  if (restart == 0 && !search.initial.empty()) {
    pts = search.initial;
    current = objective(pts);
  }
  const std::size_t count = restart == 0 ? (search.initial.empty() ? 1 : search.initial.size())
                                         : 1 + static_cast<std::size_t>(restart - 1) % search.max_points;
  for (int attempt = 0; !current && attempt < 100; ++attempt) {
    pts.clear();
    for (std::size_t l = 0; l < count; ++l) pts.push_back(objective.random_point(gen));
    current = objective(pts);
  }
  if (!current) return run;

  run.value = current->value;
  run.points = pts;
  run.best = *current;

  double step = search.initial_step;
  for (int level = 0; level <= search.halvings; ++level, step /= 2.0) {
    for (int sweep = 0; sweep < search.max_sweeps_per_level; ++sweep) {
      bool improved = false;
      for (std::size_t l = 0; l < pts.size(); ++l)
        for (Eigen::Index k = 0; k < pts[l].size(); ++k)
          for (double dir : {1.0, -1.0}) {
            auto candidate = pts;
            candidate[l][k] += dir * step;
            const auto r = objective(candidate);
            if (r && r->value > run.value + 1e-15 * std::max(1.0, std::abs(run.value))) {
              pts = std::move(candidate);
              run.value = r->value;
              run.points = pts;
              run.best = *r;
              run.trace.push_back({restart, level, step, run.value, pts});
              improved = true;
            }
          }
      if (!improved) break;
    }
  }
  return run;
}

}  // namespace detail

inline BoundResult barankin_approx(const KernelEvaluator& ev, const MeanFunction& gamma, const BarankinSearch& search,
                                   double pinv_tol = kDefaultPinvTolerance) {
  if (search.max_points == 0) throw ConfigError("Barankin search needs max_points >= 1");
  if (search.restarts < 0 || search.halvings < 0) throw ConfigError("Barankin search budget must be nonnegative");
  if (!(search.initial_step > 0.0) || !(search.half_width > 0.0)) throw ConfigError("Barankin step and box must be positive");
  if (search.radius && !(*search.radius > search.min_distance)) throw ConfigError("Barankin radius too small");
  for (const auto& p : search.initial)
    if (p.size() != ev.x0().size()) throw ConfigError("initial test point dimension mismatch");

  const detail::BarankinObjective objective(ev, gamma, search, pinv_tol);
  std::vector<std::future<detail::SearchRun>> futures;
  for (int r = 0; r <= search.restarts; ++r)
    futures.push_back(std::async(std::launch::async, [&objective, &search, r] {
      return detail::run_search(objective, search, r);
    }));

  BoundResult out;
  out.method = BoundMethod::barankin_approx;
  double best = 0.0;
  bool have = false;
  for (auto& f : futures) {
    detail::SearchRun run = f.get();
    out.diagnostics.search_trace.insert(out.diagnostics.search_trace.end(), run.trace.begin(), run.trace.end());
    if (run.value >= 0.0 && (!have || run.value > best)) {
      have = true;
      best = run.value;
      out.diagnostics.gram_rank = run.best.diagnostics.gram_rank;
      out.diagnostics.condition_number = run.best.diagnostics.condition_number;
      out.diagnostics.clamped = run.best.diagnostics.clamped;
      out.diagnostics.best_points = run.points;
    }
  }
  out.value = best;
  return out;
}

inline BoundResult barankin_approx(const AnyModel& model, const MeanFunction& gamma, const Vector& x0,
                                   const BarankinSearch& search, const BoundOptions& opt = {}) {
  detail::check_x0(model, x0);
  return barankin_approx(make_evaluator(model, x0, opt.mc), gamma, search, opt.pinv_tol);
}

}  // namespace varbound
