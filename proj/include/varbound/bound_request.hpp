#pragma once

#include <variant>
#include <vector>

#include "varbound/barankin.hpp"
#include "varbound/bounds.hpp"
#include "varbound/error.hpp"
#include "varbound/linalg.hpp"
#include "varbound/mean_function.hpp"
#include "varbound/model.hpp"
#include "varbound/multi_index.hpp"

namespace varbound {

// One bound evaluation with its method-specific options.
struct BoundRequest {
  BoundMethod method = BoundMethod::crb;
  std::vector<MultiIndex> indices;   // bhattacharyya, expfam_moment
  std::vector<Vector> points;        // hcrb test points
  bool points_relative = false;      // points (and Barankin initial points) are offsets from x0
  Matrix constraint_jacobian;        // constrained_crb, Q x N
  BarankinSearch search;             // barankin_approx
};

inline BoundResult compute_bound(const AnyModel& model, const MeanFunction& gamma, const Vector& x0,
                                 const BoundRequest& req, const BoundOptions& opt = {}) {
  auto shifted = [&](const std::vector<Vector>& pts) {
    std::vector<Vector> out = pts;
    if (req.points_relative)
      for (auto& p : out) {
        if (p.size() != x0.size()) throw ConfigError("test point dimension mismatch");
        p += x0;
      }
    return out;
  };
  auto expfam = [&]() -> const ExponentialFamilyModel& {
    if (const auto* ef = std::get_if<ExponentialFamilyModel>(&model)) return *ef;
    throw ConfigError(to_string(req.method) + " requires an exponential-family model");
  };

  switch (req.method) {
    case BoundMethod::crb: return crb(model, gamma, x0, opt);
    case BoundMethod::constrained_crb: {
      Matrix f = req.constraint_jacobian;
      if (f.size() == 0) f.resize(0, x0.size());
      return constrained_crb(model, gamma, x0, f, opt);
    }
    case BoundMethod::bhattacharyya: return bhattacharyya(model, gamma, x0, req.indices, opt);
    case BoundMethod::hcrb:
      return hcrb(model, gamma, x0, TestPointSet{shifted(req.points), TestPointSet::Provenance::user}, opt);
    case BoundMethod::barankin_approx: {
      BarankinSearch s = req.search;
      s.initial = shifted(s.initial);
      return barankin_approx(model, gamma, x0, s, opt);
    }
    case BoundMethod::expfam_moment: return expfam_bound(expfam(), gamma, x0, req.indices, opt);
    case BoundMethod::expfam_crb: return expfam_crb(expfam(), gamma, x0, opt);
  }
  throw ConfigError("unhandled bound method");
}

}  // namespace varbound
