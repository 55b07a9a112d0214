#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "varbound/config.hpp"
#include "varbound/csv.hpp"
#include "varbound/families.hpp"
#include "varbound/harness.hpp"

namespace varbound::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

// Raised for failures inside a named stage; carries the exit code to use.
class StageError : public Error {
 public:
  StageError(const std::string& what, int code) : Error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

struct Options {
  std::string config_path;
  std::string output_path;
  std::optional<std::uint64_t> seed;
  std::string format;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string point_string(const Vector& x) { return varbound::detail::format_point(x); }

inline std::string short_double(double v) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::setprecision(10) << v;
  return ss.str();
}

// Renders a CSV table as aligned columns.
inline void write_pretty(const CsvTable& t, std::ostream& os) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back(t.header);
  for (const auto& r : t.rows) cells.push_back(r);
  std::vector<std::size_t> width(t.header.size(), 0);
  for (const auto& r : cells)
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      os << std::left << std::setw(static_cast<int>(width[i])) << cells[r][i];
      os << (i + 1 < cells[r].size() ? "  " : "");
    }
    os << '\n';
    if (r == 0) {
      for (std::size_t i = 0; i < width.size(); ++i) os << std::string(width[i], '-') << (i + 1 < width.size() ? "  " : "");
      os << '\n';
    }
  }
}

inline void emit(const CsvTable& t, const std::vector<std::string>& notes, const config::RunConfig& cfg,
                 std::ostream& out) {
  if (!cfg.output.path.empty()) {
    std::ofstream f(cfg.output.path, std::ios::binary);
    if (!f) throw StageError("output: cannot write '" + cfg.output.path + "'", kExitConfig);
    t.write(f);
  }
  if (cfg.output.format == "csv") {
    t.write(out);
  } else {
    write_pretty(t, out);
    for (const auto& n : notes) out << n << '\n';
  }
}

inline std::vector<std::string> point_columns(Eigen::Index n) {
  std::vector<std::string> h;
  for (Eigen::Index k = 0; k < n; ++k) h.push_back("x" + std::to_string(k + 1));
  return h;
}

struct Setup {
  ExponentialFamilyModel model;
  MeanFunction gamma;
  std::vector<Vector> points;
  std::vector<BoundRequest> requests;
  BoundOptions options;
};

inline Setup prepare(const config::RunConfig& cfg, bool need_methods) {
  try {
    Setup s{config::build_model(cfg), {}, {}, {}, {}};
    s.gamma = config::build_mean(cfg, s.model);
    s.points = config::reference_points(cfg, s.model.param_dim);
    if (need_methods && cfg.methods.empty()) throw ConfigError("methods: at least one bound method is required");
    for (const auto& m : cfg.methods) s.requests.push_back(config::build_request(m, s.model.param_dim, cfg.mc.seed));
    s.options.mc.samples = static_cast<std::size_t>(cfg.mc.samples);
    s.options.mc.seed = cfg.mc.seed;
    return s;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("setup: ") + e.what());
  }
}

inline std::string describe_failure(const std::string& stage, BoundMethod m, const Vector& x0, const std::exception& e) {
  return stage + ": method " + to_string(m) + " failed at x0=" + point_string(x0) + ": " + e.what();
}

inline int cmd_run(const config::RunConfig& cfg, std::ostream& out) {
  const Setup s = prepare(cfg, true);
  const auto n = s.model.param_dim;
  CsvTable t;
  t.header = point_columns(n);
  for (const char* h : {"method", "value", "gram_rank", "condition_number", "clamped", "seed"}) t.header.emplace_back(h);
  std::vector<std::string> notes;
  for (const auto& x0 : s.points) {
    for (const auto& req : s.requests) {
      BoundResult r;
      try {
        r = compute_bound(s.model, s.gamma, x0, req, s.options);
      } catch (const ConfigError& e) {
        throw StageError(describe_failure("run", req.method, x0, e), kExitConfig);
      } catch (const Error& e) {
        throw StageError(describe_failure("run", req.method, x0, e), kExitNumerical);
      }
      std::vector<std::string> row;
      for (Eigen::Index k = 0; k < n; ++k) row.push_back(format_double(x0[k]));
      row.push_back(to_string(r.method));
      row.push_back(format_double(r.value));
      row.push_back(std::to_string(r.diagnostics.gram_rank));
      row.push_back(format_double(r.diagnostics.condition_number));
      row.push_back(r.diagnostics.clamped ? "1" : "0");
      row.push_back(std::to_string(req.method == BoundMethod::barankin_approx ? req.search.seed : cfg.mc.seed));
      t.rows.push_back(std::move(row));
      if (r.diagnostics.clamped)
        notes.push_back("note: " + to_string(r.method) + " at x0=" + point_string(x0) + " was clamped to 0");
      if (r.diagnostics.finite_difference_moments)
        notes.push_back("note: " + to_string(r.method) + " at x0=" + point_string(x0) +
                        " used finite-difference moments");
    }
  }
  emit(t, notes, cfg, out);
  return kExitOk;
}

inline int cmd_scan(const config::RunConfig& cfg, std::ostream& out) {
  config::RunConfig c = cfg;
  if (c.methods.empty()) c.methods.push_back({"barankin_approx", {}, {}, {}, false, {}});
  const Setup s = prepare(c, true);
  CsvTable all;
  std::vector<std::string> notes;
  for (const auto& req : s.requests) {
    ScanReport rep;
    try {
      rep = semicontinuity_scan(s.model, s.gamma, s.points, req, s.options);
    } catch (const ConfigError& e) {
      throw StageError(describe_failure("scan", req.method, s.points.front(), e), kExitConfig);
    } catch (const Error& e) {
      throw StageError("scan: method " + to_string(req.method) + " failed on the grid: " + e.what(), kExitNumerical);
    }
    CsvTable t = scan_csv(rep);
    if (all.header.empty()) all.header = t.header;
    for (auto& r : t.rows) all.rows.push_back(std::move(r));
    notes.push_back(to_string(req.method) + ": largest downward jump " + short_double(rep.largest_downward_jump));
  }
  emit(all, notes, c, out);
  return kExitOk;
}

inline int cmd_reduce(const config::RunConfig& cfg, std::ostream& out) {
  const Setup s = prepare(cfg, false);
  BarankinSearch search;
  search.seed = cfg.mc.seed;
  bool relative = false;
  for (std::size_t i = 0; i < cfg.methods.size(); ++i)
    if (s.requests[i].method == BoundMethod::barankin_approx) {
      search = s.requests[i].search;
      relative = s.requests[i].points_relative;
      break;
    }
  CsvTable all;
  std::vector<std::string> notes;
  for (const auto& x0 : s.points) {
    BarankinSearch local = search;
    if (relative)
      for (auto& p : local.initial) p += x0;
    ReductionReport rep;
    try {
      rep = reduction_experiment(s.model, s.gamma, x0, cfg.reduce.radii, local, s.options);
    } catch (const ConfigError& e) {
      throw StageError(describe_failure("reduce", BoundMethod::barankin_approx, x0, e), kExitConfig);
    } catch (const Error& e) {
      throw StageError(describe_failure("reduce", BoundMethod::barankin_approx, x0, e), kExitNumerical);
    }
    CsvTable t = reduction_csv(rep);
    if (all.header.empty()) all.header = t.header;
    for (auto& r : t.rows) all.rows.push_back(std::move(r));
    notes.push_back("x0=" + point_string(x0) + ": spread across radii " + short_double(rep.spread));
  }
  emit(all, notes, cfg, out);
  return kExitOk;
}

inline EstimatorSpec build_estimator(const config::RunConfig& cfg, const Setup& s) {
  const auto& v = cfg.validate;
  const ExponentialFamilyModel model = s.model;
  const auto comp = static_cast<Eigen::Index>(v.component);
  if (v.component < 0 || comp >= model.param_dim) throw ConfigError("validate.component: out of range");
  EstimatorSpec est;
  est.declared_mean = s.gamma;
  if (v.estimator == "sufficient-statistic") {
    est.name = "phi_" + std::to_string(v.component + 1);
    est.map = [model, comp](const Observation& y) { return model.phi(y)[comp]; };
  } else {
    if (v.coefficients.empty()) throw ConfigError("validate.coefficients: required for a polynomial estimator");
    est.name = "polynomial";
    est.map = [model, comp, c = v.coefficients](const Observation& y) {
      const double t = model.phi(y)[comp];
      double acc = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
      return acc;
    };
  }
  return est;
}

inline int cmd_validate(const config::RunConfig& cfg, std::ostream& out) {
  const Setup s = prepare(cfg, false);
  const EstimatorSpec est = build_estimator(cfg, s);
  const auto n = s.model.param_dim;
  CsvTable t;
  t.header = point_columns(n);
  for (const char* h : {"method", "bound", "empirical_variance", "se_variance", "margin", "passes", "seed"})
    t.header.emplace_back(h);
  std::vector<std::string> notes;
  bool all_pass = true;
  for (const auto& x0 : s.points) {
    ValidationReport rep;
    try {
      rep = validate_bounds(s.model, est, x0, s.requests, static_cast<std::size_t>(cfg.mc.samples), cfg.mc.seed,
                            s.options);
    } catch (const ConfigError& e) {
      throw StageError("validate: failed at x0=" + point_string(x0) + ": " + e.what(), kExitConfig);
    } catch (const Error& e) {
      throw StageError("validate: failed at x0=" + point_string(x0) + ": " + e.what(), kExitNumerical);
    }
    for (const auto& e : rep.entries) {
      std::vector<std::string> row;
      for (Eigen::Index k = 0; k < n; ++k) row.push_back(format_double(x0[k]));
      row.push_back(to_string(e.method));
      row.push_back(format_double(e.bound));
      row.push_back(format_double(rep.stats.variance));
      row.push_back(format_double(rep.stats.se_variance));
      row.push_back(format_double(e.margin));
      row.push_back(e.passes ? "1" : "0");
      row.push_back(std::to_string(rep.stats.seed));
      t.rows.push_back(std::move(row));
    }
    all_pass = all_pass && rep.all_pass;
  }
  notes.push_back(all_pass ? "all bounds below the empirical variance" : "warning: some bound exceeds the empirical variance");
  emit(t, notes, cfg, out);
  return kExitOk;
}

inline void list_models(std::ostream& out) {
  for (const auto& f : families::list_families()) {
    out << f.id << '\n';
    out << "  " << f.description << '\n';
    out << "  natural space: " << f.natural_space << '\n';
    out << "  closed-form moments: " << (f.closed_moments ? "yes" : "no") << '\n';
    out << "  hyperparameters: " << f.hyperparameters << '\n';
  }
}

}  // namespace detail

inline config::RunConfig load_config(const Options& o) {
  config::RunConfig cfg = config::parse(detail::read_file(o.config_path));
  if (!o.output_path.empty()) cfg.output.path = o.output_path;
  if (!o.format.empty()) cfg.output.format = o.format;
  if (o.seed) {
    cfg.mc.seed = *o.seed;
  }
  return cfg;
}

// Entry point shared by the executable and the tests. args excludes argv[0].
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variance lower bounds for parametric estimation", "varbound"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON run configuration")->required();
    sub->add_option("--output", opt.output_path, "also write CSV to this path");
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--format", opt.format, "csv or pretty")->check(CLI::IsMember({"csv", "pretty"}));
  };
  auto* run = app.add_subcommand("run", "evaluate each bound method at each reference point");
  auto* scan = app.add_subcommand("scan", "evaluate bounds along a reference grid and report downward jumps");
  auto* reduce = app.add_subcommand("reduce", "Barankin approximation with test points restricted to balls");
  auto* validate = app.add_subcommand("validate", "compare bounds with Monte Carlo estimator variance");
  auto* models = app.add_subcommand("models", "list built-in model families");
  for (auto* sub : {run, scan, reduce, validate}) add_common(sub);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (models->parsed()) {
    detail::list_models(out);
    return kExitOk;
  }
  for (auto* sub : {run, scan, reduce, validate})
    if (sub->parsed() && sub->count("--seed") > 0) opt.seed = seed;

  config::RunConfig cfg;
  try {
    cfg = load_config(opt);
  } catch (const ConfigError& e) {
    err << "error: config: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    if (run->parsed()) return detail::cmd_run(cfg, out);
    if (scan->parsed()) return detail::cmd_scan(cfg, out);
    if (reduce->parsed()) return detail::cmd_reduce(cfg, out);
    return detail::cmd_validate(cfg, out);
  } catch (const StageError& e) {
    err << "error: " << e.what() << '\n';
    return e.code();
  } catch (const ConfigError& e) {
    err << "error: config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace varbound::cli
