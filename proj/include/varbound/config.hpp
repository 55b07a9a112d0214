#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "varbound/bound_request.hpp"
#include "varbound/bounds.hpp"
#include "varbound/error.hpp"
#include "varbound/families.hpp"
#include "varbound/linalg.hpp"
#include "varbound/mean_function.hpp"

namespace varbound::config {

using json = nlohmann::json;

struct ModelConfig {
  std::string family = "gaussian-mean";
  std::map<std::string, double> hyperparameters;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// kind: identity | constant | expfam-mean | polynomial
struct MeanConfig {
  std::string kind = "identity";
  double value = 0.0;
  int component = 0;
  std::vector<double> coefficients;
  friend bool operator==(const MeanConfig&, const MeanConfig&) = default;
};

struct GridConfig {
  std::vector<double> lower, upper;
  int count = 0;
  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

// Either explicit points or a grid.
struct ReferenceConfig {
  std::vector<std::vector<double>> points;
  std::optional<GridConfig> grid;
  friend bool operator==(const ReferenceConfig&, const ReferenceConfig&) = default;
};

struct SearchConfig {
  std::vector<std::vector<double>> initial;
  int max_points = 4;
  int restarts = 5;
  double initial_step = 0.5;
  int halvings = 8;
  double half_width = 3.0;
  std::optional<double> radius;
  friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

struct MethodConfig {
  std::string name;
  std::vector<std::vector<int>> indices;
  std::vector<std::vector<double>> points;
  std::vector<std::vector<double>> jacobian;
  bool relative = false;  // points and search.initial are offsets from x0
  SearchConfig search;
  friend bool operator==(const MethodConfig&, const MethodConfig&) = default;
};

struct McConfig {
  std::uint64_t samples = 100000;
  std::uint64_t seed = 20240611;
  friend bool operator==(const McConfig&, const McConfig&) = default;
};

struct OutputConfig {
  std::string path;
  std::string format = "pretty";  // csv | pretty
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct ReduceConfig {
  std::vector<double> radii{0.25, 1.0, 4.0};
  friend bool operator==(const ReduceConfig&, const ReduceConfig&) = default;
};

// estimator: sufficient-statistic (g(y) = phi_component(y)) or polynomial
// (g(y) = sum_i coefficients[i] phi_component(y)^i).
struct ValidateConfig {
  std::string estimator = "sufficient-statistic";
  int component = 0;
  std::vector<double> coefficients;
  friend bool operator==(const ValidateConfig&, const ValidateConfig&) = default;
};

struct RunConfig {
  ModelConfig model;
  MeanConfig mean_function;
  ReferenceConfig x0;
  std::vector<MethodConfig> methods;
  McConfig mc;
  OutputConfig output;
  ReduceConfig reduce;
  ValidateConfig validate;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError(path + ": unknown key '" + key + "'");
}

template <typename T>
T get(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& path) {
  if (auto it = obj.find(key); it != obj.end()) out = get<T>(*it, path + "." + key);
}

inline std::vector<std::vector<double>> read_points(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of points");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (j[i].is_number()) out.push_back({get<double>(j[i], p)});
    else out.push_back(get<std::vector<double>>(j[i], p));
  }
  return out;
}

inline SearchConfig parse_search(const json& j, const std::string& path) {
  check_keys(j, {"initial", "max_points", "restarts", "initial_step", "halvings", "half_width", "radius"}, path);
  SearchConfig s;
  if (j.contains("initial")) s.initial = read_points(j["initial"], path + ".initial");
  read(j, "max_points", s.max_points, path);
  read(j, "restarts", s.restarts, path);
  read(j, "initial_step", s.initial_step, path);
  read(j, "halvings", s.halvings, path);
  read(j, "half_width", s.half_width, path);
  if (j.contains("radius") && !j["radius"].is_null()) s.radius = get<double>(j["radius"], path + ".radius");
  if (s.max_points < 1) throw ConfigError(path + ".max_points: must be >= 1");
  if (s.restarts < 0 || s.halvings < 0) throw ConfigError(path + ": restarts and halvings must be >= 0");
  if (!(s.initial_step > 0.0) || !(s.half_width > 0.0)) throw ConfigError(path + ": step and half_width must be > 0");
  return s;
}

inline json search_to_json(const SearchConfig& s) {
  json j = {{"initial", s.initial},       {"max_points", s.max_points}, {"restarts", s.restarts},
            {"initial_step", s.initial_step}, {"halvings", s.halvings},   {"half_width", s.half_width}};
  j["radius"] = s.radius ? json(*s.radius) : json(nullptr);
  return j;
}

}  // namespace detail

inline RunConfig from_json(const json& j) {
  using namespace detail;
  check_keys(j, {"model", "mean_function", "x0", "methods", "mc", "output", "reduce", "validate"}, "config");
  RunConfig c;

  if (!j.contains("model")) throw ConfigError("config: missing required key 'model'");
  check_keys(j["model"], {"family", "hyperparameters"}, "model");
  read(j["model"], "family", c.model.family, "model");
  read(j["model"], "hyperparameters", c.model.hyperparameters, "model");

  if (j.contains("mean_function")) {
    const auto& m = j["mean_function"];
    check_keys(m, {"kind", "value", "component", "coefficients"}, "mean_function");
    read(m, "kind", c.mean_function.kind, "mean_function");
    read(m, "value", c.mean_function.value, "mean_function");
    read(m, "component", c.mean_function.component, "mean_function");
    read(m, "coefficients", c.mean_function.coefficients, "mean_function");
    const auto& k = c.mean_function.kind;
    if (k != "identity" && k != "constant" && k != "expfam-mean" && k != "polynomial")
      throw ConfigError("mean_function.kind: unknown kind '" + k + "'");
    if (c.mean_function.component < 0) throw ConfigError("mean_function.component: must be >= 0");
  }

  if (!j.contains("x0")) throw ConfigError("config: missing required key 'x0'");
  const auto& x = j["x0"];
  if (x.is_number()) {
    c.x0.points = {{get<double>(x, "x0")}};
  } else if (x.is_array()) {
    if (!x.empty() && x[0].is_number()) c.x0.points = {get<std::vector<double>>(x, "x0")};
    else c.x0.points = read_points(x, "x0");
  } else if (x.is_object()) {
    check_keys(x, {"grid"}, "x0");
    check_keys(x.at("grid"), {"lower", "upper", "count"}, "x0.grid");
    GridConfig g;
    read(x["grid"], "lower", g.lower, "x0.grid");
    read(x["grid"], "upper", g.upper, "x0.grid");
    read(x["grid"], "count", g.count, "x0.grid");
    if (g.lower.size() != g.upper.size() || g.lower.empty())
      throw ConfigError("x0.grid: lower and upper must be nonempty and of equal length");
    if (g.count < 1) throw ConfigError("x0.grid.count: must be >= 1");
    c.x0.grid = g;
  } else {
    throw ConfigError("x0: expected a number, a point, a list of points, or {\"grid\": ...}");
  }

  if (j.contains("methods")) {
    const auto& ms = j["methods"];
    if (!ms.is_array()) throw ConfigError("methods: expected an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string path = "methods[" + std::to_string(i) + "]";
      MethodConfig m;
      if (ms[i].is_string()) {
        m.name = ms[i].get<std::string>();
      } else {
        check_keys(ms[i], {"name", "indices", "points", "jacobian", "relative", "search"}, path);
        if (!ms[i].contains("name")) throw ConfigError(path + ": missing 'name'");
        read(ms[i], "name", m.name, path);
        if (ms[i].contains("indices")) {
          const auto& ix = ms[i]["indices"];
          if (!ix.is_array()) throw ConfigError(path + ".indices: expected an array");
          for (std::size_t k = 0; k < ix.size(); ++k) {
            const std::string p = path + ".indices[" + std::to_string(k) + "]";
            if (ix[k].is_number_integer()) m.indices.push_back({get<int>(ix[k], p)});
            else m.indices.push_back(get<std::vector<int>>(ix[k], p));
          }
        }
        if (ms[i].contains("points")) m.points = read_points(ms[i]["points"], path + ".points");
        if (ms[i].contains("jacobian")) m.jacobian = read_points(ms[i]["jacobian"], path + ".jacobian");
        read(ms[i], "relative", m.relative, path);
        if (ms[i].contains("search")) m.search = parse_search(ms[i]["search"], path + ".search");
      }
      try {
        (void)parse_bound_method(m.name);
      } catch (const ConfigError& e) {
        throw ConfigError(path + ".name: " + e.what());
      }
      c.methods.push_back(std::move(m));
    }
  }

  if (j.contains("mc")) {
    check_keys(j["mc"], {"samples", "seed"}, "mc");
    read(j["mc"], "samples", c.mc.samples, "mc");
    read(j["mc"], "seed", c.mc.seed, "mc");
    if (c.mc.samples < 2) throw ConfigError("mc.samples: must be >= 2");
  }
  if (j.contains("output")) {
    check_keys(j["output"], {"path", "format"}, "output");
    read(j["output"], "path", c.output.path, "output");
    read(j["output"], "format", c.output.format, "output");
    if (c.output.format != "csv" && c.output.format != "pretty")
      throw ConfigError("output.format: expected 'csv' or 'pretty'");
  }
  if (j.contains("reduce")) {
    check_keys(j["reduce"], {"radii"}, "reduce");
    read(j["reduce"], "radii", c.reduce.radii, "reduce");
  }
  if (j.contains("validate")) {
    check_keys(j["validate"], {"estimator", "component", "coefficients"}, "validate");
    read(j["validate"], "estimator", c.validate.estimator, "validate");
    read(j["validate"], "component", c.validate.component, "validate");
    read(j["validate"], "coefficients", c.validate.coefficients, "validate");
    if (c.validate.estimator != "sufficient-statistic" && c.validate.estimator != "polynomial")
      throw ConfigError("validate.estimator: expected 'sufficient-statistic' or 'polynomial'");
  }
  return c;
}

inline json to_json(const RunConfig& c) {
  json j;
  j["model"] = {{"family", c.model.family}, {"hyperparameters", c.model.hyperparameters}};
  j["mean_function"] = {{"kind", c.mean_function.kind},
                        {"value", c.mean_function.value},
                        {"component", c.mean_function.component},
                        {"coefficients", c.mean_function.coefficients}};
  if (c.x0.grid)
    j["x0"] = {{"grid", {{"lower", c.x0.grid->lower}, {"upper", c.x0.grid->upper}, {"count", c.x0.grid->count}}}};
  else
    j["x0"] = c.x0.points;
  j["methods"] = json::array();
  for (const auto& m : c.methods)
    j["methods"].push_back({{"name", m.name},
                            {"indices", m.indices},
                            {"points", m.points},
                            {"jacobian", m.jacobian},
                            {"relative", m.relative},
                            {"search", detail::search_to_json(m.search)}});
  j["mc"] = {{"samples", c.mc.samples}, {"seed", c.mc.seed}};
  j["output"] = {{"path", c.output.path}, {"format", c.output.format}};
  j["reduce"] = {{"radii", c.reduce.radii}};
  j["validate"] = {{"estimator", c.validate.estimator},
                   {"component", c.validate.component},
                   {"coefficients", c.validate.coefficients}};
  return j;
}

// Parses a JSON document; syntax errors report line and column.
inline RunConfig parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  return from_json(j);
}

inline std::string serialize(const RunConfig& c) { return to_json(c).dump(2); }

// --- conversion to library objects ---

inline ExponentialFamilyModel build_model(const RunConfig& c) {
  return families::make_family(c.model.family, c.model.hyperparameters);
}

inline MeanFunction build_mean(const RunConfig& c, const ExponentialFamilyModel& model) {
  const auto comp = static_cast<std::size_t>(c.mean_function.component);
  if (c.mean_function.kind != "constant" && comp >= static_cast<std::size_t>(model.param_dim))
    throw ConfigError("mean_function.component: out of range for a " + std::to_string(model.param_dim) +
                      "-dimensional parameter");
  if (c.mean_function.kind == "identity") return means::identity(comp);
  if (c.mean_function.kind == "constant") return means::constant(c.mean_function.value);
  if (c.mean_function.kind == "expfam-mean") return means::expfam_mean(model, comp);
  if (c.mean_function.coefficients.empty()) throw ConfigError("mean_function.coefficients: required for polynomial");
  return means::polynomial(c.mean_function.coefficients, comp);
}

inline std::vector<Vector> reference_points(const RunConfig& c, int dim) {
  std::vector<Vector> pts;
  if (c.x0.grid) {
    const auto& g = *c.x0.grid;
    const Vector lo = to_vector(g.lower), hi = to_vector(g.upper);
    for (int i = 0; i < g.count; ++i) {
      const double t = g.count == 1 ? 0.0 : static_cast<double>(i) / (g.count - 1);
      pts.push_back(lo + t * (hi - lo));
    }
  } else {
    for (const auto& p : c.x0.points) pts.push_back(to_vector(p));
  }
  if (pts.empty()) throw ConfigError("x0: no reference points");
  for (const auto& p : pts)
    if (p.size() != dim)
      throw ConfigError("x0: point dimension " + std::to_string(p.size()) + " does not match model dimension " +
                        std::to_string(dim));
  return pts;
}

inline BarankinSearch build_search(const SearchConfig& s, std::uint64_t seed) {
  BarankinSearch b;
  for (const auto& p : s.initial) b.initial.push_back(to_vector(p));
  b.max_points = static_cast<std::size_t>(s.max_points);
  b.restarts = s.restarts;
  b.initial_step = s.initial_step;
  b.halvings = s.halvings;
  b.half_width = s.half_width;
  b.radius = s.radius;
  b.seed = seed;
  return b;
}

inline BoundRequest build_request(const MethodConfig& m, int dim, std::uint64_t seed) {
  BoundRequest r;
  r.method = parse_bound_method(m.name);
  for (const auto& ix : m.indices) {
    if (static_cast<int>(ix.size()) != dim) throw ConfigError("methods: multi-index dimension mismatch");
    r.indices.emplace_back(ix);
  }
  for (const auto& p : m.points) {
    if (static_cast<int>(p.size()) != dim) throw ConfigError("methods: test point dimension mismatch");
    r.points.push_back(to_vector(p));
  }
  if (!m.jacobian.empty()) {
    r.constraint_jacobian.resize(static_cast<Eigen::Index>(m.jacobian.size()), dim);
    for (std::size_t q = 0; q < m.jacobian.size(); ++q) {
      if (static_cast<int>(m.jacobian[q].size()) != dim) throw ConfigError("methods: jacobian rows must have N entries");
      for (int k = 0; k < dim; ++k) r.constraint_jacobian(static_cast<Eigen::Index>(q), k) = m.jacobian[q][static_cast<std::size_t>(k)];
    }
  } else {
    r.constraint_jacobian.resize(0, dim);
  }
  r.points_relative = m.relative;
  r.search = build_search(m.search, seed);
  if (r.method == BoundMethod::bhattacharyya || r.method == BoundMethod::expfam_moment) {
    if (r.indices.empty()) throw ConfigError("methods: " + m.name + " requires 'indices'");
  }
  if (r.method == BoundMethod::hcrb && r.points.empty()) throw ConfigError("methods: hcrb requires 'points'");
  return r;
}

}  // namespace varbound::config
