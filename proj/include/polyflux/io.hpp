#pragma once

// JSON and CSV encodings of the library types.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "polyflux/errors.hpp"
#include "polyflux/initial_data.hpp"
#include "polyflux/mollify.hpp"
#include "polyflux/pwl_convex.hpp"
#include "polyflux/stochastic.hpp"
#include "polyflux/variational.hpp"

namespace polyflux {

inline nlohmann::json to_json(const PwlConvex& h) {
  return {{"breaks", std::vector<double>(h.break_points().begin(), h.break_points().end())},
          {"slopes", std::vector<double>(h.slopes().begin(), h.slopes().end())},
          {"anchor", h.anchor_value()}};
}

inline PwlConvex pwl_from_json(const nlohmann::json& j, FluxCheck check = FluxCheck::kStrict) {
  for (const char* key : {"breaks", "slopes", "anchor"})
    if (!j.contains(key)) throw ConfigError(key, "missing key");
  try {
    return PwlConvex(j.at("breaks").get<std::vector<double>>(), j.at("slopes").get<std::vector<double>>(),
                     j.at("anchor").get<double>(), check);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("flux", e.what());
  }
}

inline nlohmann::json to_json(const ConjugateFn& l) {
  const auto m = l.break_points();
  const auto c = l.segment_slopes();
  const auto v = l.values_at_breaks();
  return {{"breaks", std::vector<double>(m.begin(), m.end())},
          {"segment_slopes", std::vector<double>(c.begin(), c.end())},
          {"values", std::vector<double>(v.begin(), v.end())},
          {"domain", {l.domain_lo(), l.domain_hi()}},
          {"infinite_outside", true}};
}

inline nlohmann::json to_json(const PiecewiseConstantDerivative& d) {
  return {{"jumps", std::vector<double>(d.jumps().begin(), d.jumps().end())},
          {"values", std::vector<double>(d.values().begin(), d.values().end())}};
}

inline nlohmann::json to_json(const SolutionField& f) {
  std::vector<std::string> kinds;
  for (auto k : f.kind) kinds.emplace_back(to_string(k));
  return {{"t", f.t},       {"x", f.x},         {"u", f.u},
          {"w", f.w},       {"y_star", f.y_star}, {"kind", kinds},
          {"flagged", std::vector<bool>(f.flagged.begin(), f.flagged.end())}};
}

inline nlohmann::json to_json(const ConvergenceReport& r) {
  return {{"epsilons", r.epsilons}, {"conj_gaps", r.conj_gaps}, {"w_errors", r.w_errors},
          {"rates", r.rates},       {"fitted_c", r.fitted_c},   {"excluded", r.excluded}};
}

inline nlohmann::json to_json(const EnsembleStats& s) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : s.cross_checks)
    checks.push_back({{"path", c.path}, {"x", c.x}, {"w", c.w}, {"derivative", c.derivative},
                      {"shock", c.shock}, {"passed", c.passed}});
  return {{"x", s.x},
          {"t", s.t},
          {"n_paths", s.n_paths},
          {"seed", s.seed},
          {"window", {s.window.first, s.window.second}},
          {"mean_w", s.mean_w},
          {"var_w", s.var_w},
          {"mean_ystar", s.mean_ystar},
          {"std_err", s.std_err},
          {"ci_half", s.ci_half},
          {"var_ci_half", s.var_ci_half},
          {"monotone_paths", s.monotone_paths},
          {"cross_checks", checks}};
}

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const nlohmann::json& resolved) {
  return fmt::format("{:016x}", fnv1a(resolved.dump()));
}

inline std::string num(double v) { return fmt::format("{:.17g}", v); }

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& hash, std::uint64_t seed,
            std::string_view header)
      : out_(path) {
    if (!out_) throw Error("cannot open " + path + " for writing");
    out_ << "# config_hash=" << hash << " seed=" << seed << '\n' << header << '\n';
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cell(cells)), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(const char* s) { return s; }

  std::ofstream out_;
};

inline void write_solution_csv(const std::string& path, const SolutionField& f,
                               const std::string& hash, std::uint64_t seed) {
  CsvWriter csv(path, hash, seed, "x,u,w,y_star,kind");
  for (std::size_t i = 0; i < f.x.size(); ++i)
    csv.row(f.x[i], f.u[i], f.w[i], f.y_star[i], to_string(f.kind[i]));
}

inline void write_path_csv(const std::string& path, const SampledPath& p, const std::string& hash,
                           std::uint64_t seed) {
  CsvWriter csv(path, hash, seed, "x,gprime");
  for (std::size_t k = 0; k < p.values().size(); ++k) csv.row(p.node(k), p.values()[k]);
}

// Rows of a numeric CSV with a header line; '#' lines are skipped. Columns
// named in `wanted` are returned in that order.
inline std::vector<std::vector<double>> read_csv_columns(const std::string& path,
                                                         const std::vector<std::string>& wanted) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> cols(wanted.size());
  std::vector<int> index(wanted.size(), -1);
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (header.empty()) {
      header = cells;
      for (std::size_t w = 0; w < wanted.size(); ++w) {
        for (std::size_t h = 0; h < header.size(); ++h)
          if (header[h] == wanted[w]) index[w] = static_cast<int>(h);
        if (index[w] < 0) throw Error(path + ": missing column " + wanted[w]);
      }
      continue;
    }
    for (std::size_t w = 0; w < wanted.size(); ++w) {
      const auto at = static_cast<std::size_t>(index[w]);
      if (at >= cells.size()) throw Error(path + ": short row at line " + std::to_string(line_no));
      try {
        cols[w].push_back(std::stod(cells[at]));
      } catch (const std::exception&) {
        throw Error(path + ": bad number at line " + std::to_string(line_no));
      }
    }
  }
  if (header.empty()) throw Error(path + ": empty file");
  return cols;
}

}  // namespace polyflux
