#pragma once

// Monte Carlo ensembles over two-sided Brownian g'.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "polyflux/errors.hpp"
#include "polyflux/initial_data.hpp"
#include "polyflux/parallel.hpp"
#include "polyflux/pwl_convex.hpp"
#include "polyflux/variational.hpp"

namespace polyflux {

struct PathConfig {
  double step = 0.01;
  double scale = 1.0;   // 0 gives the zero path
  double margin = 0.1;  // fraction of the feasible window added on each side
};

struct EnsembleOptions {
  int cross_checks = 8;  // (x, path) pairs compared against min_x_derivative
  std::vector<double> h_seq{1e-3, 5e-4, 2.5e-4};
  SearchConfig search;
};

struct CrossCheck {
  std::size_t path = 0;
  double x = 0.0;
  double w = 0.0;
  double derivative = 0.0;
  bool shock = false;  // one-sided quotients disagree; not compared
  bool passed = true;
};

struct EnsembleStats {
  std::vector<double> x;
  double t = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::pair<double, double> window;  // sampled path extent
  std::vector<double> mean_w;
  std::vector<double> var_w;
  std::vector<double> mean_ystar;
  std::vector<double> std_err;      // sqrt(var_w / n)
  std::vector<double> ci_half;      // 1.96 std_err
  std::vector<double> var_ci_half;  // 1.96 x standard error of var_w
  std::size_t monotone_paths = 0;
  std::vector<CrossCheck> cross_checks;
};

// Independent 64-bit seed for path i (SplitMix64 finalizer of seed + i).
inline std::uint64_t path_seed(std::uint64_t master, std::uint64_t i) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Feasible window [x_min - m_{N+1} t, x_max - m_1 t], widened by the margin
// and stretched to contain 0.
inline std::pair<double, double> path_window(const PwlConvex& h, std::span<const double> x_grid,
                                             double t, const PathConfig& path) {
  const auto [xa, xb] = std::minmax_element(x_grid.begin(), x_grid.end());
  double lo = *xa - h.max_slope() * t;
  double hi = *xb - h.min_slope() * t;
  const double pad = path.margin * (hi - lo);
  return {std::min(lo - pad, 0.0), std::max(hi + pad, 0.0)};
}

inline EnsembleStats ensemble_run(const PwlConvex& h, const PathConfig& path,
                                  std::span<const double> x_grid, double t, std::size_t n_paths,
                                  std::uint64_t seed, const EnsembleOptions& opts = {}) {
  require_flux(h);
  if (n_paths < 2) throw DomainError("ensemble_run: need at least two paths");
  if (!(t > 0.0)) throw DomainError("ensemble_run: t must be positive");
  if (x_grid.empty()) throw DomainError("ensemble_run: empty x grid");
  const Kernel k{SharpKernel{conjugate(h)}};
  const auto window = path_window(h, x_grid, t, path);
  const std::size_t nx = x_grid.size();

  std::vector<double> w(n_paths * nx);
  std::vector<double> ys(n_paths * nx);
  std::vector<char> monotone(n_paths, 1);
  parallel_for(n_paths, [&](std::size_t p) {
    const InitialData g =
        sample_brownian(window.first, window.second, path.step, path_seed(seed, p), path.scale);
    for (std::size_t i = 0; i < nx; ++i) {
      const auto s = solve_point(k, g, x_grid[i], t, opts.search);
      w[p * nx + i] = s.w;
      ys[p * nx + i] = s.y_star;
      if (i > 0 && s.y_star < ys[p * nx + i - 1]) monotone[p] = 0;
    }
  });

  EnsembleStats st;
  st.x.assign(x_grid.begin(), x_grid.end());
  st.t = t;
  st.n_paths = n_paths;
  st.seed = seed;
  st.window = window;
  const double n = static_cast<double>(n_paths);
  for (std::size_t i = 0; i < nx; ++i) {
    double mw = 0.0;
    double my = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      mw += w[p * nx + i];
      my += ys[p * nx + i];
    }
    mw /= n;
    my /= n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      const double d = w[p * nx + i] - mw;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    const double var = m2 / (n - 1.0);
    m2 /= n;
    m4 /= n;
    // Var of the sample variance: (mu4 - sigma^4 (n - 3)/(n - 1)) / n.
    const double var_of_var = std::max(0.0, (m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n);
    st.mean_w.push_back(mw);
    st.var_w.push_back(var);
    st.mean_ystar.push_back(my);
    st.std_err.push_back(std::sqrt(var / n));
    st.ci_half.push_back(1.96 * std::sqrt(var / n));
    st.var_ci_half.push_back(1.96 * std::sqrt(var_of_var));
  }
  st.monotone_paths = static_cast<std::size_t>(std::count(monotone.begin(), monotone.end(), 1));

  // Cross-check w = g'(y*) against difference quotients of u on random pairs.
  std::mt19937_64 rng(path_seed(seed, n_paths));
  std::uniform_int_distribution<std::size_t> pick_path(0, n_paths - 1);
  std::uniform_int_distribution<std::size_t> pick_x(0, nx - 1);
  const double tol = 10.0 * opts.h_seq.back();
  for (int c = 0; c < opts.cross_checks; ++c) {
    const std::size_t p = pick_path(rng);
    const std::size_t i = pick_x(rng);
    const InitialData g =
        sample_brownian(window.first, window.second, path.step, path_seed(seed, p), path.scale);
    const auto d = min_x_derivative(k, g, x_grid[i], t, opts.h_seq, opts.search);
    CrossCheck cc{p, x_grid[i], w[p * nx + i], d.value, d.shock, true};
    if (!d.shock) cc.passed = std::abs(d.value - cc.w) <= tol;
    st.cross_checks.push_back(cc);
  }
  return st;
}

// Least-squares nondecreasing fit (pool adjacent violators).
inline std::vector<double> isotonic_fit(std::span<const double> y, std::span<const double> weight) {
  struct Block {
    double sum;
    double w;
    std::size_t n;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < y.size(); ++i) {
    blocks.push_back({y[i] * weight[i], weight[i], 1});
    while (blocks.size() > 1) {
      const auto& b = blocks[blocks.size() - 1];
      const auto& a = blocks[blocks.size() - 2];
      if (a.sum / a.w <= b.sum / b.w) break;
      Block merged{a.sum + b.sum, a.w + b.w, a.n + b.n};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> fit;
  for (const auto& b : blocks) fit.insert(fit.end(), b.n, b.sum / b.w);
  return fit;
}

struct VarianceProfile {
  std::vector<double> abs_x;  // ascending
  std::vector<double> var_w;
  std::vector<double> band;   // var_ci_half
  std::vector<double> isotonic;
  std::vector<double> mean_ystar;
  double max_excess = 0.0;    // max |var - isotonic| - band; <= 0 passes
  bool monotone = true;
  bool symmetric = true;      // var(-x) vs var(x) within combined bands
  bool symmetry_tested = false;
};

// var_w against |x|: nondecreasing up to the confidence bands. The pointwise
// comparison with mean_ystar is recorded, not tested.
inline VarianceProfile variance_profile(const EnsembleStats& st) {
  std::vector<std::size_t> order(st.x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(st.x[a]) < std::abs(st.x[b]);
  });
  VarianceProfile vp;
  std::vector<double> weight;
  for (std::size_t i : order) {
    vp.abs_x.push_back(std::abs(st.x[i]));
    vp.var_w.push_back(st.var_w[i]);
    vp.band.push_back(st.var_ci_half[i]);
    vp.mean_ystar.push_back(st.mean_ystar[i]);
    const double b = st.var_ci_half[i];
    weight.push_back(1.0 / std::max(b * b, 1e-300));
  }
  vp.isotonic = isotonic_fit(vp.var_w, weight);
  vp.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vp.var_w.size(); ++i)
    vp.max_excess = std::max(vp.max_excess, std::abs(vp.var_w[i] - vp.isotonic[i]) - vp.band[i]);
  vp.monotone = vp.max_excess <= 0.0;

  for (std::size_t i = 0; i < st.x.size(); ++i) {
    for (std::size_t j = i + 1; j < st.x.size(); ++j) {
      if (st.x[i] != -st.x[j] || st.x[i] == 0.0) continue;
      vp.symmetry_tested = true;
      if (std::abs(st.var_w[i] - st.var_w[j]) > st.var_ci_half[i] + st.var_ci_half[j])
        vp.symmetric = false;
    }
  }
  return vp;
}

}  // namespace polyflux
