#pragma once

// Run configuration and command dispatch for the polyflux executable.
//
// Exit codes: 0 success, 1 an asserted check failed, 2 usage or config error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyflux/errors.hpp"
#include "polyflux/initial_data.hpp"
#include "polyflux/io.hpp"
#include "polyflux/mollify.hpp"
#include "polyflux/pwl_convex.hpp"
#include "polyflux/stochastic.hpp"
#include "polyflux/variational.hpp"
#include "polyflux/verify.hpp"

namespace polyflux {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> cmds{"conjugate", "solve",  "discrete",
                                             "mollify",   "verify", "stochastic"};
  return cmds;
}

struct GridSpec {
  double x_min = -3.0;
  double x_max = 3.0;
  int points = 256;
  std::vector<double> t{1.0};
};

struct StochasticSpec {
  std::size_t paths = 256;
  double step = 0.01;
  double scale = 1.0;
  double margin = 0.1;
};

struct RunConfig {
  std::string command;
  nlohmann::json flux;          // validated {"breaks","slopes","anchor"}
  nlohmann::json initial_data;  // validated, see make_initial_data
  GridSpec grid;
  SearchConfig search;
  std::vector<double> epsilons{0.2, 0.1, 0.05, 0.025};
  MollifyOptions mollify;
  std::string delta_mode = "eps_squared";
  StochasticSpec stochastic;
  std::optional<std::string> field_file;  // verify: check this CSV instead of solving
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  nlohmann::json resolved;  // full config with defaults, echoed into outputs
};

namespace detail {

template <class T>
T read_key(const nlohmann::json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + key, "wrong type");
  }
}

inline void require_object(const nlohmann::json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError(key, "expected an object");
}

inline void require_known_keys(const nlohmann::json& j, const std::string& path,
                               std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; });
    if (!ok) throw ConfigError(path + k, "unknown key");
  }
}

inline void validate_data(const nlohmann::json& d) {
  require_object(d, "initial_data");
  const auto type = read_key<std::string>(d, "type", "initial_data.", "");
  if (type == "polynomial") {
    require_known_keys(d, "initial_data.", {"type", "coeffs", "window"});
    const auto c = read_key<std::vector<double>>(d, "coeffs", "initial_data.", {});
    if (c.empty()) throw ConfigError("initial_data.coeffs", "need at least one coefficient");
    if (d.contains("window")) {
      const auto w = read_key<std::vector<double>>(d, "window", "initial_data.", {});
      if (w.size() != 2 || !(w[0] < w[1])) throw ConfigError("initial_data.window", "expected [lo, hi] with lo < hi");
    }
  } else if (type == "piecewise_constant") {
    require_known_keys(d, "initial_data.", {"type", "jumps", "values"});
    const auto jumps = read_key<std::vector<double>>(d, "jumps", "initial_data.", {});
    const auto values = read_key<std::vector<double>>(d, "values", "initial_data.", {});
    if (values.size() != jumps.size() + 1)
      throw ConfigError("initial_data.values", "expected one more value than jumps");
    for (std::size_t k = 1; k < jumps.size(); ++k)
      if (!(jumps[k - 1] < jumps[k])) throw ConfigError("initial_data.jumps", "must be strictly increasing");
  } else if (type == "sampled") {
    require_known_keys(d, "initial_data.", {"type", "x0", "step", "values", "file"});
    if (!d.contains("file")) {
      if (read_key<double>(d, "step", "initial_data.", 0.0) <= 0.0)
        throw ConfigError("initial_data.step", "must be positive");
      if (read_key<std::vector<double>>(d, "values", "initial_data.", {}).size() < 2)
        throw ConfigError("initial_data.values", "need at least two samples");
      read_key<double>(d, "x0", "initial_data.", 0.0);
    } else {
      read_key<std::string>(d, "file", "initial_data.", "");
    }
  } else if (type == "brownian") {
    require_known_keys(d, "initial_data.", {"type"});
  } else {
    throw ConfigError("initial_data.type",
                      "expected polynomial, piecewise_constant, sampled or brownian");
  }
}

}  // namespace detail

// Validates `j` and fills defaults. `command` (from the command line) wins
// over a "command" key in the file.
inline RunConfig parse_config(const nlohmann::json& j, const std::string& command = "") {
  using detail::read_key;
  detail::require_object(j, "config");
  detail::require_known_keys(j, "", {"command", "flux", "initial_data", "grid", "search",
                                      "epsilons", "blend_width_factor", "blend", "delta_mode",
                                      "delta", "stochastic", "field_file", "seed"});
  RunConfig c;
  c.command = command.empty() ? read_key<std::string>(j, "command", "", "") : command;
  if (std::find(known_commands().begin(), known_commands().end(), c.command) == known_commands().end())
    throw ConfigError("command", "unknown command '" + c.command + "'");

  if (!j.contains("flux")) throw ConfigError("flux", "missing key");
  detail::require_object(j.at("flux"), "flux");
  detail::require_known_keys(j.at("flux"), "flux.", {"breaks", "slopes", "anchor"});
  pwl_from_json(j.at("flux"));  // throws on convexity / ordering violations
  c.flux = j.at("flux");

  if (c.command != "conjugate") {
    if (!j.contains("initial_data")) throw ConfigError("initial_data", "missing key");
    detail::validate_data(j.at("initial_data"));
    c.initial_data = j.at("initial_data");
  }

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    detail::require_object(g, "grid");
    detail::require_known_keys(g, "grid.", {"x_min", "x_max", "points", "t"});
    c.grid.x_min = read_key(g, "x_min", "grid.", c.grid.x_min);
    c.grid.x_max = read_key(g, "x_max", "grid.", c.grid.x_max);
    c.grid.points = read_key(g, "points", "grid.", c.grid.points);
    if (g.contains("t")) {
      c.grid.t = g.at("t").is_array() ? read_key<std::vector<double>>(g, "t", "grid.", {})
                                      : std::vector<double>{read_key<double>(g, "t", "grid.", 1.0)};
    }
  }
  if (!(c.grid.x_min < c.grid.x_max)) throw ConfigError("grid.x_max", "must exceed grid.x_min");
  if (c.grid.points < 2) throw ConfigError("grid.points", "need at least two points");
  if (c.grid.t.empty()) throw ConfigError("grid.t", "need at least one time");
  for (double t : c.grid.t)
    if (!(t > 0.0)) throw ConfigError("grid.t", "times must be positive");

  if (j.contains("search")) {
    const auto& s = j.at("search");
    detail::require_object(s, "search");
    detail::require_known_keys(s, "search.", {"grid_points", "tie_eta", "golden_tol", "vertex_tol"});
    c.search.grid_points = read_key(s, "grid_points", "search.", c.search.grid_points);
    c.search.tie_eta = read_key(s, "tie_eta", "search.", c.search.tie_eta);
    c.search.golden_tol = read_key(s, "golden_tol", "search.", c.search.golden_tol);
    c.search.vertex_tol = read_key(s, "vertex_tol", "search.", c.search.vertex_tol);
  }
  if (c.search.grid_points < 3) throw ConfigError("search.grid_points", "need at least 3");
  if (!(c.search.tie_eta >= 0.0)) throw ConfigError("search.tie_eta", "must be nonnegative");

  c.epsilons = read_key(j, "epsilons", "", c.epsilons);
  if (c.epsilons.empty()) throw ConfigError("epsilons", "need at least one value");
  for (std::size_t k = 0; k < c.epsilons.size(); ++k) {
    if (!(c.epsilons[k] > 0.0)) throw ConfigError("epsilons", "values must be positive");
    if (k > 0 && !(c.epsilons[k] < c.epsilons[k - 1]))
      throw ConfigError("epsilons", "must be strictly decreasing");
  }
  c.mollify.width_factor = read_key(j, "blend_width_factor", "", 1.0);
  if (!(c.mollify.width_factor > 0.0)) throw ConfigError("blend_width_factor", "must be positive");
  const auto blend = read_key<std::string>(j, "blend", "", "quadratic");
  if (blend == "quadratic") c.mollify.blend = BlendKind::kQuadratic;
  else if (blend == "quartic") c.mollify.blend = BlendKind::kQuartic;
  else throw ConfigError("blend", "expected quadratic or quartic");
  c.delta_mode = read_key<std::string>(j, "delta_mode", "", c.delta_mode);
  if (c.delta_mode == "fixed") {
    if (!j.contains("delta")) throw ConfigError("delta", "required when delta_mode is fixed");
    c.mollify.delta = read_key<double>(j, "delta", "", 0.0);
    if (!(*c.mollify.delta > 0.0)) throw ConfigError("delta", "must be positive");
  } else if (c.delta_mode != "eps_squared") {
    throw ConfigError("delta_mode", "expected eps_squared or fixed");
  }

  if (j.contains("stochastic")) {
    const auto& s = j.at("stochastic");
    detail::require_object(s, "stochastic");
    detail::require_known_keys(s, "stochastic.", {"paths", "step", "scale", "margin"});
    c.stochastic.paths = read_key(s, "paths", "stochastic.", c.stochastic.paths);
    c.stochastic.step = read_key(s, "step", "stochastic.", c.stochastic.step);
    c.stochastic.scale = read_key(s, "scale", "stochastic.", c.stochastic.scale);
    c.stochastic.margin = read_key(s, "margin", "stochastic.", c.stochastic.margin);
  }
  if (c.stochastic.paths < 2) throw ConfigError("stochastic.paths", "need at least two paths");
  if (!(c.stochastic.step > 0.0)) throw ConfigError("stochastic.step", "must be positive");
  if (!(c.stochastic.margin >= 0.0)) throw ConfigError("stochastic.margin", "must be nonnegative");

  if (j.contains("field_file")) c.field_file = read_key<std::string>(j, "field_file", "", "");
  c.seed = read_key<std::uint64_t>(j, "seed", "", 0);
  return c;
}

inline RunConfig parse_config_file(const std::string& path, const std::string& command = "") {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j, command);
}

// Full configuration with defaults, as echoed into outputs and hashed.
inline nlohmann::json resolve(const RunConfig& c) {
  nlohmann::json j = {
      {"command", c.command},
      {"flux", c.flux},
      {"grid", {{"x_min", c.grid.x_min}, {"x_max", c.grid.x_max}, {"points", c.grid.points}, {"t", c.grid.t}}},
      {"search",
       {{"grid_points", c.search.grid_points},
        {"tie_eta", c.search.tie_eta},
        {"golden_tol", c.search.golden_tol},
        {"vertex_tol", c.search.vertex_tol}}},
      {"epsilons", c.epsilons},
      {"blend_width_factor", c.mollify.width_factor},
      {"blend", c.mollify.blend == BlendKind::kQuadratic ? "quadratic" : "quartic"},
      {"delta_mode", c.delta_mode},
      {"stochastic",
       {{"paths", c.stochastic.paths},
        {"step", c.stochastic.step},
        {"scale", c.stochastic.scale},
        {"margin", c.stochastic.margin}}},
      {"seed", c.seed}};
  if (!c.initial_data.is_null()) j["initial_data"] = c.initial_data;
  if (c.mollify.delta) j["delta"] = *c.mollify.delta;
  if (c.field_file) j["field_file"] = *c.field_file;
  return j;
}

inline std::vector<double> x_grid(const RunConfig& c) {
  return uniform_grid(c.grid.x_min, c.grid.x_max, c.grid.points);
}

inline double max_time(const RunConfig& c) { return *std::max_element(c.grid.t.begin(), c.grid.t.end()); }

inline InitialData make_initial_data(const RunConfig& c, const PwlConvex& h) {
  const auto& d = c.initial_data;
  const auto type = d.at("type").get<std::string>();
  const double t = max_time(c);
  const double lo = c.grid.x_min - h.max_slope() * t - 1.0;
  const double hi = c.grid.x_max - h.min_slope() * t + 1.0;
  if (type == "polynomial") {
    const auto a = d.at("coeffs").get<std::vector<double>>();
    auto g = [a](double y) {
      double v = 0.0;
      for (auto k = a.size(); k-- > 0;) v = v * y + a[k];
      return v;
    };
    auto gp = [a](double y) {
      double v = 0.0;
      for (auto k = a.size(); k-- > 1;) v = v * y + static_cast<double>(k) * a[k];
      return v;
    };
    auto w = d.contains("window") ? d.at("window").get<std::vector<double>>() : std::vector<double>{lo, hi};
    return ClosedFormC1(g, gp, w[0], w[1]);
  }
  if (type == "piecewise_constant")
    return PiecewiseConstantDerivative(d.at("jumps").get<std::vector<double>>(),
                                       d.at("values").get<std::vector<double>>());
  if (type == "sampled") {
    if (d.contains("file")) {
      const auto cols = read_csv_columns(d.at("file").get<std::string>(), {"x", "gprime"});
      if (cols[0].size() < 2) throw ConfigError("initial_data.file", "need at least two samples");
      return SampledPath(cols[0].front(), cols[0][1] - cols[0][0], cols[1]);
    }
    return SampledPath(d.value("x0", 0.0), d.at("step").get<double>(), d.at("values").get<std::vector<double>>());
  }
  // brownian
  const auto xs = x_grid(c);
  const auto win = path_window(h, xs, t, {c.stochastic.step, c.stochastic.scale, c.stochastic.margin});
  return sample_brownian(win.first, win.second, c.stochastic.step, c.seed, c.stochastic.scale);
}

namespace detail {

inline std::string out_path(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.out_dir) / name).string();
}

inline void write_json(const RunConfig& c, const std::string& name, nlohmann::json body) {
  body["config"] = c.resolved;
  body["config_hash"] = config_hash(c.resolved);
  std::ofstream out(out_path(c, name));
  if (!out) throw Error("cannot open " + out_path(c, name) + " for writing");
  out << body.dump(2) << '\n';
}

inline std::string indexed(const std::string& stem, std::size_t i) {
  return stem + "_t" + std::to_string(i) + ".csv";
}

inline int run_conjugate(const RunConfig& c, const PwlConvex& h) {
  const auto l = conjugate(h);
  const auto hash = config_hash(c.resolved);
  CsvWriter csv(out_path(c, "conjugate.csv"), hash, c.seed, "m,L,segment_slope");
  const auto m = l.break_points();
  const auto s = l.segment_slopes();
  for (std::size_t j = 0; j < m.size(); ++j)
    csv.row(m[j], l(m[j]).value(), j < s.size() ? num(s[j]) : std::string());
  write_json(c, "conjugate.json", {{"flux", to_json(h)}, {"conjugate", to_json(l)}});
  std::cout << "conjugate: domain [" << l.domain_lo() << ", " << l.domain_hi() << "], "
            << m.size() << " break points\n";
  return kExitOk;
}

inline int run_solve(const RunConfig& c, const PwlConvex& h, const InitialData& g,
                     const std::string& stem, bool confinement) {
  const Kernel k{SharpKernel{conjugate(h)}};
  const auto xs = x_grid(c);
  const auto hash = config_hash(c.resolved);
  nlohmann::json fields = nlohmann::json::array();
  bool confined = true;
  const auto* pcd = std::get_if<PiecewiseConstantDerivative>(&g);
  const bool matched = pcd && pcd->values_subset_of(h);
  const auto breaks = h.break_points();
  for (std::size_t i = 0; i < c.grid.t.size(); ++i) {
    const auto f = solve_field(k, g, xs, c.grid.t[i], c.search);
    write_solution_csv(out_path(c, indexed(stem, i)), f, hash, c.seed);
    fields.push_back(to_json(f));
    for (double w : f.w)
      confined = confined && std::find(breaks.begin(), breaks.end(), w) != breaks.end();
  }
  nlohmann::json body = {{"fields", fields}};
  int code = kExitOk;
  if (confinement) {
    body["range_confinement"] = {{"data_matched", matched}, {"confined", confined}};
    if (matched && !confined) code = kExitCheckFailed;
    std::cout << stem << ": data matched=" << matched << ", w confined to break points=" << confined << '\n';
  } else {
    std::cout << stem << ": " << c.grid.t.size() << " time level(s), " << xs.size() << " points\n";
  }
  write_json(c, stem + ".json", body);
  return code;
}

inline int run_mollify(const RunConfig& c, const PwlConvex& h, const InitialData& g) {
  const auto xs = x_grid(c);
  const double t = c.grid.t.front();
  const auto r = convergence_study(h, g, xs, t, c.epsilons, c.mollify, c.search);
  CsvWriter csv(out_path(c, "convergence.csv"), config_hash(c.resolved), c.seed,
                "epsilon,conj_gap,w_err,rate");
  for (std::size_t k = 0; k < r.epsilons.size(); ++k)
    csv.row(r.epsilons[k], r.conj_gaps[k], r.w_errors[k], r.rates[k]);
  write_json(c, "convergence.json", {{"t", t}, {"report", to_json(r)}});
  std::cout << "mollify: fitted C = " << r.fitted_c << ", final w error = " << r.w_errors.back() << '\n';
  return kExitOk;
}

// Checks a stored field: y* nondecreasing and w reproduced by the solver
// at every point off the shock set.
inline VerifyReport check_field_file(const RunConfig& c, const PwlConvex& h, const InitialData& g) {
  const auto cols = read_csv_columns(*c.field_file, {"x", "u", "w", "y_star"});
  SolutionField f;
  f.t = c.grid.t.front();
  f.x = cols[0];
  f.u = cols[1];
  f.w = cols[2];
  f.y_star = cols[3];
  VerifyReport rep{monotonicity_check(f, c.search.tie_eta)};
  const Kernel k{SharpKernel{conjugate(h)}};
  const auto ref = solve_field(k, g, f.x, f.t, c.search);
  const auto shock = flag_shocks(ref.x, ref.y_star);
  double worst_w = 0.0;
  double worst_u = 0.0;
  for (std::size_t i = 0; i < f.x.size(); ++i) {
    worst_u = std::max(worst_u, std::abs(f.u[i] - ref.u[i]));
    if (!shock[i]) worst_w = std::max(worst_w, std::abs(f.w[i] - ref.w[i]));
  }
  constexpr double kTol = 1e-6;
  rep.push_back({"field_w_matches_solver", worst_w <= kTol, true, worst_w, kTol, {{"file", *c.field_file}}});
  rep.push_back({"field_u_matches_solver", worst_u <= kTol, true, worst_u, kTol, {{"file", *c.field_file}}});
  return rep;
}

inline VerifyReport check_solution(const RunConfig& c, const PwlConvex& h, const InitialData& g) {
  const auto l = conjugate(h);
  const Kernel k{SharpKernel{l}};
  const auto xs = x_grid(c);
  const bool discrete = std::holds_alternative<PiecewiseConstantDerivative>(g);
  VerifyReport rep;
  for (double t : c.grid.t) {
    const auto f = solve_field(k, g, xs, t, c.search);
    rep.push_back(monotonicity_check(f, discrete ? 0.0 : c.search.tie_eta));
    rep.push_back(tv_bound_check(f, g));
    const double z[] = {xs[1] - xs[0], 4.0 * (xs[1] - xs[0]), 16.0 * (xs[1] - xs[0])};
    rep.push_back(entropy_constant(f, z));
  }
  // Lipschitz / trace bounds on a thinned grid.
  LipschitzProbe probe;
  for (std::size_t i = 0; i < xs.size(); i += std::max<std::size_t>(1, xs.size() / 16)) probe.xs.push_back(xs[i]);
  probe.zs = {0.01, 0.1};
  for (double t : c.grid.t) probe.times.push_back({t, 0.5 * t});
  for (auto& r : lipschitz_bounds_check(l, g, probe, c.search)) rep.push_back(std::move(r));
  // HJ residual at interior points of the first time level.
  const double t0 = c.grid.t.front();
  const double h_fd = std::min(1e-3, 0.25 * t0);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 1; i + 1 < probe.xs.size(); ++i) pts.push_back({probe.xs[i], t0});
  if (!pts.empty()) rep.push_back(hj_refinement_check(k, g, h, pts, h_fd, 10.0, c.search));
  return rep;
}

inline int run_verify(const RunConfig& c, const PwlConvex& h, const InitialData& g) {
  const auto rep = c.field_file ? check_field_file(c, h, g) : check_solution(c, h, g);
  write_json(c, "verify.json", {{"checks", nlohmann::json(rep)}});
  for (const auto& r : rep)
    std::cout << (r.asserted ? (r.passed ? "PASS " : "FAIL ") : "INFO ") << r.name
              << " measured=" << num(r.measured) << '\n';
  return all_asserted_pass(rep) ? kExitOk : kExitCheckFailed;
}

inline int run_stochastic(const RunConfig& c, const PwlConvex& h) {
  const auto xs = x_grid(c);
  const double t = c.grid.t.front();
  const PathConfig path{c.stochastic.step, c.stochastic.scale, c.stochastic.margin};
  const auto st = ensemble_run(h, path, xs, t, c.stochastic.paths, c.seed, {8, {1e-3, 5e-4, 2.5e-4}, c.search});
  const auto vp = variance_profile(st);
  const auto hash = config_hash(c.resolved);
  CsvWriter csv(out_path(c, "ensemble.csv"), hash, c.seed, "x,mean_w,var_w,mean_ystar,ci_half");
  for (std::size_t i = 0; i < st.x.size(); ++i)
    csv.row(st.x[i], st.mean_w[i], st.var_w[i], st.mean_ystar[i], st.ci_half[i]);
  const auto first = sample_brownian(st.window.first, st.window.second, path.step, path_seed(c.seed, 0), path.scale);
  write_path_csv(out_path(c, "path0.csv"), first, hash, path_seed(c.seed, 0));
  const bool monotone = st.monotone_paths == st.n_paths;
  write_json(c, "ensemble.json",
             {{"stats", to_json(st)},
              {"variance_profile",
               {{"abs_x", vp.abs_x},
                {"var_w", vp.var_w},
                {"isotonic", vp.isotonic},
                {"mean_ystar", vp.mean_ystar},
                {"band", vp.band},
                {"monotone_within_band", vp.monotone},
                {"symmetric", vp.symmetric},
                {"symmetry_tested", vp.symmetry_tested}}},
              {"per_path_monotone", monotone}});
  std::cout << "stochastic: " << st.n_paths << " paths, monotone " << st.monotone_paths << '\n';
  return monotone ? kExitOk : kExitCheckFailed;
}

}  // namespace detail

inline int execute(RunConfig c) {
  c.resolved = resolve(c);
  std::filesystem::create_directories(c.out_dir);
  const auto h = pwl_from_json(c.flux);
  if (c.command == "conjugate") return detail::run_conjugate(c, h);
  const auto g = make_initial_data(c, h);
  if (c.command == "solve") return detail::run_solve(c, h, g, "solution", false);
  if (c.command == "discrete") {
    if (!std::holds_alternative<PiecewiseConstantDerivative>(g))
      throw ConfigError("initial_data.type", "discrete needs piecewise_constant data");
    return detail::run_solve(c, h, g, "discrete", true);
  }
  if (c.command == "mollify") return detail::run_mollify(c, h, g);
  if (c.command == "verify") return detail::run_verify(c, h, g);
  return detail::run_stochastic(c, h);
}

}  // namespace polyflux
