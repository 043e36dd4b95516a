#pragma once

// Hopf-Lax functional and greatest-minimizer solver.
//
//   Q(y; x, t) = t L((x - y)/t) + g(y),   u(x, t) = min_y Q,   w = g'(y*)
//
// where y* is the greatest minimizer of Q. For a polygonal flux L is finite
// only on [m_1, m_{N+1}], so y ranges over the feasible interval
// [x - m_{N+1} t, x - m_1 t].

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "polyflux/errors.hpp"
#include "polyflux/extended_real.hpp"
#include "polyflux/initial_data.hpp"
#include "polyflux/parallel.hpp"
#include "polyflux/pwl_convex.hpp"

namespace polyflux {

struct SearchConfig {
  int grid_points = 1024;         // samples per segment image of L
  double tie_eta = 1e-9;          // Q(y) <= q_min + eta (1 + |q_min|) counts as a tie
  double golden_tol = 1e-12;      // bracket width for golden-section refinement
  double vertex_tol = 1e-9;       // relative distance for vertex classification
  double degenerate_width = 1e-6; // windows narrower than this are sampled densely
  int degenerate_points = 1 << 14;
  // y-window for kernels without an intrinsic domain (TestQuadraticKernel).
  std::optional<std::pair<double, double>> window;
};

// t L((x - y)/t) with L the exact transform of a polygonal flux.
struct SharpKernel {
  ConjugateFn transform;
};

// t K((x - y)/t) for a smooth convex K. The minimizer search is restricted to
// p = (x - y)/t in [p_lo, p_hi].
struct SmoothKernel {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double p_lo = 0.0;
  double p_hi = 0.0;
};

// f(y; x) = (x - y)^2, independent of t.
struct TestQuadraticKernel {};

using Kernel = std::variant<SharpKernel, SmoothKernel, TestQuadraticKernel>;

enum class MinimizerKind { kVertexOfL, kFlatSegment, kVertexOfG, kCoincident };

constexpr std::string_view to_string(MinimizerKind k) {
  switch (k) {
    case MinimizerKind::kVertexOfL: return "VertexOfL";
    case MinimizerKind::kFlatSegment: return "FlatSegment";
    case MinimizerKind::kVertexOfG: return "VertexOfG";
    case MinimizerKind::kCoincident: return "Coincident";
  }
  return "?";
}

struct Candidate {
  double y = 0.0;
  double q = 0.0;
};

struct MinimizerResult {
  double y_star = 0.0;
  double q_min = 0.0;
  MinimizerKind kind = MinimizerKind::kFlatSegment;
  bool multiple = false;
  std::vector<Candidate> candidates;  // tying minimizers, ascending in y
};

struct PointSolution {
  double u = 0.0;
  double w = 0.0;
  double y_star = 0.0;
  MinimizerKind kind = MinimizerKind::kFlatSegment;
  bool multiple = false;
  bool flagged = false;  // w taken as a right limit at a discontinuity
};

struct SolutionField {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> u;
  std::vector<double> w;
  std::vector<double> y_star;
  std::vector<MinimizerKind> kind;
  std::vector<bool> flagged;
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline void require_positive_time(double t) {
  if (!(t > 0.0)) throw DomainError("t must be positive");
}

// p = (x - y)/t snapped onto the domain when rounding put it just outside.
inline double snap_to_domain(const ConjugateFn& l, double p) {
  const double slack = 1e-12 * (1.0 + std::abs(p));
  if (p < l.domain_lo() && p >= l.domain_lo() - slack) return l.domain_lo();
  if (p > l.domain_hi() && p <= l.domain_hi() + slack) return l.domain_hi();
  return p;
}

inline double sharp_term(const ConjugateFn& l, double x, double t, double y) {
  const auto v = l(snap_to_domain(l, (x - y) / t));
  return v.is_finite() ? t * v.value() : kInf;
}

inline double kernel_term(const Kernel& k, double x, double t, double y) {
  if (const auto* s = std::get_if<SharpKernel>(&k)) return sharp_term(s->transform, x, t, y);
  if (const auto* s = std::get_if<SmoothKernel>(&k)) return t * s->value((x - y) / t);
  return (x - y) * (x - y);
}

// dQ/dy on (a, b), a bracket inside one cell of the partition, where the
// sharp kernel is affine in y.
inline std::function<double(double)> q_slope(const Kernel& k, const InitialData& g, double x, double t,
                                             double a, double b) {
  if (const auto* s = std::get_if<SharpKernel>(&k)) {
    const double c = s->transform.right_slope((x - 0.5 * (a + b)) / t);
    return [&g, c](double y) { return eval_gprime(g, y) - c; };
  }
  if (const auto* s = std::get_if<SmoothKernel>(&k))
    return [&g, s, x, t](double y) { return eval_gprime(g, y) - s->derivative((x - y) / t); };
  return [&g, x](double y) { return eval_gprime(g, y) - 2.0 * (x - y); };
}

// Bisection on a sign change of dQ/dy; value-based search alone resolves y
// only to about sqrt(machine epsilon).
inline std::optional<double> stationary_point(const std::function<double(double)>& slope, double a,
                                              double b) {
  if (!(slope(a) < 0.0 && slope(b) > 0.0)) return std::nullopt;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b || b - a <= 1e-16 * (1.0 + std::abs(a) + std::abs(b))) break;
    (slope(mid) < 0.0 ? a : b) = mid;
  }
  return b;
}

inline std::pair<double, double> search_window(const Kernel& k, const InitialData& g, double x,
                                               double t, const SearchConfig& cfg) {
  if (const auto* s = std::get_if<SharpKernel>(&k))
    return {x - s->transform.domain_hi() * t, x - s->transform.domain_lo() * t};
  if (const auto* s = std::get_if<SmoothKernel>(&k)) return {x - s->p_hi * t, x - s->p_lo * t};
  if (cfg.window) return *cfg.window;
  if (const auto* cf = std::get_if<ClosedFormC1>(&g)) return {cf->window_lo(), cf->window_hi()};
  throw DomainError("test-quadratic kernel needs an explicit search window");
}

inline double golden_section(const std::function<double(double)>& f, double a, double b,
                             double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

struct GridSample {
  std::vector<double> y;
  std::vector<double> q;
};

inline std::vector<Candidate> dedupe_ties(std::vector<Candidate> c, double tol) {
  std::sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) { return a.y < b.y; });
  std::vector<Candidate> out;
  for (const auto& p : c) {
    if (!out.empty() && p.y - out.back().y <= tol)
      out.back() = p;  // keep the greater y of a cluster
    else
      out.push_back(p);
  }
  return out;
}

// Groups tie candidates into basins: neighbours belong to one basin when Q
// stays inside the tie band between them. A basin overlapping a flat run is
// represented by its right end, any other basin by its lowest point (the
// right one on equal values).
inline std::vector<Candidate> basin_representatives(std::vector<Candidate> c,
                                                    const std::function<double(double)>& q,
                                                    double tie,
                                                    std::span<const std::pair<double, double>> runs,
                                                    bool& flat) {
  std::sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) { return a.y < b.y; });
  auto joined = [&](double a, double b) {
    for (double f : {0.25, 0.5, 0.75})
      if (!(q(a + f * (b - a)) <= tie)) return false;
    return true;
  };
  auto touches_run = [&](double a, double b) {
    for (const auto& r : runs)
      if (r.first <= b && r.second >= a) return true;
    return false;
  };
  std::vector<Candidate> out;
  flat = false;
  std::size_t i = 0;
  while (i < c.size()) {
    std::size_t j = i;
    while (j + 1 < c.size() && (c[j + 1].y == c[j].y || joined(c[j].y, c[j + 1].y))) ++j;
    if (touches_run(c[i].y, c[j].y)) {
      flat = true;
      out.push_back(c[j]);
    } else {
      Candidate best = c[i];
      for (std::size_t k = i + 1; k <= j; ++k)
        if (c[k].q <= best.q) best = c[k];
      out.push_back(best);
    }
    i = j + 1;
  }
  return out;
}

}  // namespace detail

// Q(y; x, t); +inf where the kernel is infeasible.
inline ExtendedReal functional_q(const Kernel& k, const InitialData& g, double x, double t,
                                 double y) {
  detail::require_positive_time(t);
  const double term = detail::kernel_term(k, x, t, y);
  if (std::isinf(term)) return ExtendedReal::infinity();
  return term + eval_g(g, y);
}

// Exact minimizer for polygonal L and piecewise-constant g'. Q is piecewise
// linear in y with breaks at the vertices x - m_j t and the jumps of g', so
// its minimum over the feasible interval is attained at one of those points.
inline MinimizerResult discrete_exact_minimizer(const ConjugateFn& l,
                                                const PiecewiseConstantDerivative& g, double x,
                                                double t) {
  detail::require_positive_time(t);
  struct Point {
    double y;
    double q;
    double p;
    bool vertex;
    bool jump;
  };
  const auto m = l.break_points();
  const auto lm = l.values_at_breaks();
  const double lo = x - l.domain_hi() * t;
  const double hi = x - l.domain_lo() * t;
  const double span = 1.0 + std::abs(x) + t * std::max(std::abs(m.front()), std::abs(m.back()));
  const double merge_tol = 8.0 * std::numeric_limits<double>::epsilon() * span;

  std::vector<Point> pts;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double y = x - m[j] * t;
    pts.push_back({y, t * lm[j] + g.g(y), m[j], true, false});
  }
  for (double d : g.jumps()) {
    if (d < lo - merge_tol || d > hi + merge_tol) continue;
    const double p = std::clamp(detail::snap_to_domain(l, (x - d) / t), l.domain_lo(), l.domain_hi());
    pts.push_back({d, t * l(p).value() + g.g(d), p, false, true});
  }
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.y < b.y; });
  std::vector<Point> merged;
  for (const auto& p : pts) {
    if (!merged.empty() && p.y - merged.back().y <= merge_tol) {
      auto& b = merged.back();
      if (p.vertex && !b.vertex) {
        b.y = p.y;
        b.q = p.q;
        b.p = p.p;
      }
      b.vertex = b.vertex || p.vertex;
      b.jump = b.jump || p.jump;
    } else {
      merged.push_back(p);
    }
  }

  double q_min = detail::kInf;
  double scale = 1.0;
  for (const auto& p : merged) {
    q_min = std::min(q_min, p.q);
    scale = std::max(scale, std::abs(p.q));
  }
  const double tie = q_min + 64.0 * std::numeric_limits<double>::epsilon() * scale;

  MinimizerResult r;
  r.q_min = q_min;
  const Point* best = nullptr;
  for (const auto& p : merged) {
    if (p.q <= tie) {
      r.candidates.push_back({p.y, p.q});
      best = &p;  // ascending y: the last tie is the greatest
    }
  }
  r.y_star = best->y;
  r.multiple = r.candidates.size() > 1;
  if (best->vertex && best->jump)
    r.kind = MinimizerKind::kCoincident;
  else if (best->vertex)
    r.kind = MinimizerKind::kVertexOfL;
  else
    r.kind = MinimizerKind::kVertexOfG;
  return r;
}

struct DiscreteSolution {
  double w = 0.0;
  double y_star = 0.0;
  double q_min = 0.0;
  MinimizerKind kind = MinimizerKind::kVertexOfL;
  bool multiple = false;
  bool flagged = false;  // Coincident vertex: right-segment convention applied
};

// w from the two-case formula: g'(y*) at a vertex of L, L'((x - y*)/t) at a
// jump of g'. Coincident vertices take the slope of the segment to the right
// of p = (x - y*)/t and are flagged.
inline DiscreteSolution discrete_solve(const ConjugateFn& l, const PiecewiseConstantDerivative& g,
                                       double x, double t) {
  const auto r = discrete_exact_minimizer(l, g, x, t);
  DiscreteSolution s;
  s.y_star = r.y_star;
  s.q_min = r.q_min;
  s.kind = r.kind;
  s.multiple = r.multiple;
  const double p = std::clamp(detail::snap_to_domain(l, (x - r.y_star) / t), l.domain_lo(),
                              l.domain_hi());
  switch (r.kind) {
    case MinimizerKind::kVertexOfL:
    case MinimizerKind::kFlatSegment:
      s.w = g.gprime(r.y_star);
      break;
    case MinimizerKind::kVertexOfG:
      s.w = l.right_slope(p);
      break;
    case MinimizerKind::kCoincident: {
      // Snap p onto the vertex it coincides with before picking the segment.
      const auto m = l.break_points();
      auto it = std::min_element(m.begin(), m.end(), [p](double a, double b) {
        return std::abs(a - p) < std::abs(b - p);
      });
      s.w = l.right_slope(*it);
      s.flagged = true;
      break;
    }
  }
  return s;
}

inline double discrete_w(const ConjugateFn& l, const PiecewiseConstantDerivative& g, double x,
                         double t) {
  return discrete_solve(l, g, x, t).w;
}

// Global minimum of Q over the search window and its greatest minimizer.
inline MinimizerResult greatest_minimizer(const Kernel& k, const InitialData& g, double x,
                                          double t, const SearchConfig& cfg = {}) {
  detail::require_positive_time(t);
  const auto* sharp = std::get_if<SharpKernel>(&k);
  const auto* pcd = std::get_if<PiecewiseConstantDerivative>(&g);
  const auto* path = std::get_if<SampledPath>(&g);
  if (sharp && pcd) return discrete_exact_minimizer(sharp->transform, *pcd, x, t);

  const auto [lo, hi] = detail::search_window(k, g, x, t, cfg);
  if (!(lo <= hi)) throw DomainError("empty search window");
  const std::function<double(double)> q = [&](double y) {
    const double term = detail::kernel_term(k, x, t, y);
    return std::isinf(term) ? term : term + eval_g(g, y);
  };

  // Partition of the window: vertices of the kernel and jumps of g'.
  std::vector<double> parts{lo, hi};
  if (sharp)
    for (double m : sharp->transform.break_points()) parts.push_back(x - m * t);
  if (pcd)
    for (double d : pcd->jumps())
      if (d > lo && d < hi) parts.push_back(d);
  std::sort(parts.begin(), parts.end());
  parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
  parts.erase(std::remove_if(parts.begin(), parts.end(), [lo = lo, hi = hi](double y) {
                return y < lo || y > hi;
              }),
              parts.end());

  std::vector<Candidate> pool;
  for (double y : parts) pool.push_back({y, q(y)});

  std::vector<detail::GridSample> grids;
  if (sharp && path) {
    // Q' = g'(y) - c_j on the segment image of [m_j, m_{j+1}]; the stationary
    // points are the exact level crossings of the interpolated path.
    const auto m = sharp->transform.break_points();
    const auto c = sharp->transform.segment_slopes();
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double a = std::max(lo, x - m[j + 1] * t);
      const double b = std::min(hi, x - m[j] * t);
      for (double y : path->level_crossings(c[j], a, b)) pool.push_back({y, q(y)});
    }
  } else if (hi > lo) {
    auto scan = [&](double a, double b, int n) {
      detail::GridSample s;
      s.y.resize(static_cast<std::size_t>(n));
      s.q.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        s.y[i] = i == n - 1 ? b : a + (b - a) * i / (n - 1);
        s.q[i] = q(s.y[i]);
      }
      for (int i = 0; i < n; ++i) {
        const double qi = s.q[i];
        if (std::isnan(qi)) throw DivergenceError("Hopf-Lax functional is not a number");
        const bool left_ok = i == 0 || qi <= s.q[i - 1];
        const bool right_ok = i == n - 1 || qi <= s.q[i + 1];
        const bool strict = (i > 0 && qi < s.q[i - 1]) || (i < n - 1 && qi < s.q[i + 1]);
        pool.push_back({s.y[i], qi});
        if (left_ok && right_ok && strict && std::isfinite(qi)) {
          const double ba = s.y[std::max(i - 1, 0)];
          const double bb = s.y[std::min(i + 1, n - 1)];
          double yr = detail::golden_section(q, ba, bb, cfg.golden_tol);
          const double qr = q(yr);
          if (const auto root = detail::stationary_point(detail::q_slope(k, g, x, t, ba, bb), ba, bb)) {
            if (q(*root) <= qr + 1e-12 * (1.0 + std::abs(qr))) yr = *root;
          }
          pool.push_back({yr, q(yr)});
        }
      }
      grids.push_back(std::move(s));
    };
    if (hi - lo < cfg.degenerate_width) {
      scan(lo, hi, cfg.degenerate_points);
    } else {
      for (std::size_t i = 0; i + 1 < parts.size(); ++i)
        if (parts[i + 1] > parts[i]) scan(parts[i], parts[i + 1], cfg.grid_points);
    }
  }

  double q_min = detail::kInf;
  for (const auto& c : pool) {
    if (std::isnan(c.q)) throw DivergenceError("Hopf-Lax functional is not a number");
    q_min = std::min(q_min, c.q);
  }
  if (!std::isfinite(q_min)) throw DivergenceError("Hopf-Lax functional has no finite minimum");
  const double tie = q_min + cfg.tie_eta * (1.0 + std::abs(q_min));

  std::vector<Candidate> ties;
  for (const auto& c : pool)
    if (c.q <= tie) ties.push_back(c);

  // Flat runs: when adjacent grid points tie, push the right end of the run
  // to the last point still within the tie band.
  std::vector<std::pair<double, double>> runs;
  for (const auto& s : grids) {
    const std::size_t n = s.y.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!(s.q[i] <= tie && s.q[i + 1] <= tie)) continue;
      std::size_t j = i + 1;
      while (j + 1 < n && s.q[j + 1] <= tie) ++j;
      runs.emplace_back(s.y[i], s.y[j]);
      if (j + 1 < n) {
        double a = s.y[j];
        double b = s.y[j + 1];
        for (int it = 0; it < 200 && b - a > cfg.golden_tol; ++it) {
          const double mid = 0.5 * (a + b);
          (q(mid) <= tie ? a : b) = mid;
        }
        ties.push_back({a, q(a)});
        runs.back().second = a;
      }
      i = j;
    }
  }

  const double scale = 1.0 + std::abs(x) + std::abs(lo) + std::abs(hi);
  MinimizerResult r;
  r.q_min = q_min;
  bool flat = false;
  r.candidates = detail::dedupe_ties(detail::basin_representatives(std::move(ties), q, tie, runs, flat),
                                     cfg.vertex_tol * scale);
  r.y_star = r.candidates.back().y;
  r.multiple = r.candidates.size() > 1 || flat;

  if (const auto* smooth = std::get_if<SmoothKernel>(&k)) {
    // A minimizer pinned to the window edge must not keep decreasing outward.
    const double width = hi - lo;
    auto check_edge = [&](double edge, double beyond) {
      if (std::abs(r.y_star - edge) <= cfg.vertex_tol * scale && q(beyond) < q_min - 1e-9 * (1 + std::abs(q_min)))
        throw DivergenceError("Hopf-Lax functional decreases beyond the search window");
    };
    (void)smooth;
    check_edge(lo, lo - width);
    check_edge(hi, hi + width);
  }

  const double vtol = cfg.vertex_tol * scale;
  bool at_vertex = false;
  if (sharp)
    for (double m : sharp->transform.break_points())
      at_vertex = at_vertex || std::abs(r.y_star - (x - m * t)) <= vtol;
  bool at_jump = false;
  if (pcd)
    for (double d : pcd->jumps()) at_jump = at_jump || std::abs(r.y_star - d) <= vtol;
  if (at_vertex && at_jump)
    r.kind = MinimizerKind::kCoincident;
  else if (at_vertex)
    r.kind = MinimizerKind::kVertexOfL;
  else if (at_jump)
    r.kind = MinimizerKind::kVertexOfG;
  else
    r.kind = MinimizerKind::kFlatSegment;
  return r;
}

// u, w = g'(y*), and y* at one point. t = 0 returns the initial data.
inline PointSolution solve_point(const Kernel& k, const InitialData& g, double x, double t,
                                 const SearchConfig& cfg = {}) {
  if (t == 0.0) {
    const auto gp = eval_gprime_flagged(g, x);
    return {eval_g(g, x), gp.value, x, MinimizerKind::kFlatSegment, false, gp.at_jump};
  }
  detail::require_positive_time(t);
  const auto* sharp = std::get_if<SharpKernel>(&k);
  const auto* pcd = std::get_if<PiecewiseConstantDerivative>(&g);
  if (sharp && pcd) {
    const auto d = discrete_solve(sharp->transform, *pcd, x, t);
    return {d.q_min, d.w, d.y_star, d.kind, d.multiple, d.flagged};
  }
  const auto r = greatest_minimizer(k, g, x, t, cfg);
  const auto gp = eval_gprime_flagged(g, r.y_star);
  return {r.q_min, gp.value, r.y_star, r.kind, r.multiple, gp.at_jump};
}

inline double eval_u(const Kernel& k, const InitialData& g, double x, double t,
                     const SearchConfig& cfg = {}) {
  if (t == 0.0) return eval_g(g, x);
  return greatest_minimizer(k, g, x, t, cfg).q_min;
}

inline double eval_w(const Kernel& k, const InitialData& g, double x, double t,
                     const SearchConfig& cfg = {}) {
  return solve_point(k, g, x, t, cfg).w;
}

struct DerivativeEstimate {
  double value = 0.0;  // right derivative (extrapolated)
  double left = 0.0;   // left derivative (extrapolated)
  double right = 0.0;
  bool shock = false;  // one-sided values disagree
};

// One-sided difference quotients of x -> u(x, t) over a decreasing step
// sequence, each side Richardson-extrapolated from its last two steps.
inline DerivativeEstimate min_x_derivative(const Kernel& k, const InitialData& g, double x,
                                           double t, std::span<const double> h_seq,
                                           const SearchConfig& cfg = {}) {
  detail::require_positive_time(t);
  if (h_seq.empty()) throw DomainError("min_x_derivative: empty step sequence");
  const double u0 = eval_u(k, g, x, t, cfg);
  auto extrapolate = [&](int side) {
    std::vector<double> d;
    for (double h : h_seq) {
      if (!(h > 0.0)) throw DomainError("min_x_derivative: steps must be positive");
      const double uh = eval_u(k, g, x + side * h, t, cfg);
      d.push_back(side * (uh - u0) / h);
    }
    if (d.size() == 1) return d.front();
    const std::size_t n = d.size();
    const double r = h_seq[n - 2] / h_seq[n - 1];
    return (r * d[n - 1] - d[n - 2]) / (r - 1.0);
  };
  DerivativeEstimate e;
  e.right = extrapolate(+1);
  e.left = extrapolate(-1);
  e.value = e.right;
  e.shock = std::abs(e.right - e.left) > 10.0 * h_seq.back() + 1e-8;
  return e;
}

// y-grid of n uniform points over the feasible interval for elapsed time tau,
// merged with the kernel vertices.
inline std::vector<double> feasible_grid(const ConjugateFn& l, double x, double tau, int n) {
  const double lo = x - l.domain_hi() * tau;
  const double hi = x - l.domain_lo() * tau;
  std::vector<double> ys;
  for (int i = 0; i < n; ++i) ys.push_back(i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1));
  for (double m : l.break_points()) ys.push_back(x - m * tau);
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  return ys;
}

// |u(x,t) - min_{y in grid} {(t-s) L((x-y)/(t-s)) + u(y,s)}|.
inline double semigroup_residual(const Kernel& k, const InitialData& g, double x, double t,
                                 double s, std::span<const double> y_grid,
                                 const SearchConfig& cfg = {}) {
  detail::require_positive_time(t);
  if (!(s >= 0.0 && s < t)) throw DomainError("semigroup_residual: need 0 <= s < t");
  const double tau = t - s;
  double best = detail::kInf;
  for (double y : y_grid) {
    const double term = detail::kernel_term(k, x, tau, y);
    if (std::isinf(term)) continue;
    best = std::min(best, term + eval_u(k, g, y, s, cfg));
  }
  return std::abs(eval_u(k, g, x, t, cfg) - best);
}

inline SolutionField solve_field(const Kernel& k, const InitialData& g,
                                 std::span<const double> x_grid, double t,
                                 const SearchConfig& cfg = {}) {
  SolutionField f;
  f.t = t;
  const std::size_t n = x_grid.size();
  f.x.assign(x_grid.begin(), x_grid.end());
  f.u.resize(n);
  f.w.resize(n);
  f.y_star.resize(n);
  f.kind.resize(n);
  std::vector<char> flagged(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const auto p = solve_point(k, g, f.x[i], t, cfg);
    f.u[i] = p.u;
    f.w[i] = p.w;
    f.y_star[i] = p.y_star;
    f.kind[i] = p.kind;
    flagged[i] = p.flagged ? 1 : 0;
  });
  f.flagged.assign(flagged.begin(), flagged.end());
  return f;
}

// Shock-set detector shared by every "almost everywhere" comparison: x_i is
// flagged when |y*(x_{i+1}) - y*(x_{i-1})| > 10 h, h the local grid step.
inline std::vector<bool> flag_shocks(std::span<const double> x, std::span<const double> y_star) {
  const std::size_t n = x.size();
  std::vector<bool> flags(n, false);
  if (n < 2) return flags;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    const double h = (x[b] - x[a]) / static_cast<double>(b - a);
    flags[i] = std::abs(y_star[b] - y_star[a]) > 10.0 * h;
  }
  return flags;
}

}  // namespace polyflux
