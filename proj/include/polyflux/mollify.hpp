#pragma once

// Smoothed, uniformly convex approximants of a polygonal flux:
//
//   H_{eps,delta}(q) = H_eps(q) + delta q^2,   delta = eps^2 by default,
//
// where H_eps replaces each corner c_i by a polynomial blend on
// [c_i - h, c_i + h], h = width_factor * eps, matching value and slope of H
// at both ends. Away from the corners H_eps = H.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "polyflux/errors.hpp"
#include "polyflux/initial_data.hpp"
#include "polyflux/pwl_convex.hpp"
#include "polyflux/variational.hpp"

namespace polyflux {

// kQuadratic is C1 with peak deviation (m_{i+1} - m_i) h / 4 at the corner.
// kQuartic integrates the cubic smoothstep, so H_eps is C2; its peak
// deviation is 3 (m_{i+1} - m_i) h / 16.
enum class BlendKind { kQuadratic, kQuartic };

struct MollifyOptions {
  double width_factor = 1.0;
  BlendKind blend = BlendKind::kQuadratic;
  std::optional<double> delta;  // unset: eps^2
};

class MollifiedFlux {
 public:
  struct Corner {
    double c;      // break point
    double left;   // slope m_i
    double right;  // slope m_{i+1}
    double value;  // H(c)
  };

  MollifiedFlux(PwlConvex base, double epsilon, MollifyOptions opts = {})
      : base_(std::move(base)), eps_(epsilon), opts_(opts) {
    if (!(eps_ > 0.0)) throw DomainError("mollify: epsilon must be positive");
    if (!(opts_.width_factor > 0.0)) throw DomainError("mollify: width factor must be positive");
    half_ = opts_.width_factor * eps_;
    delta_ = opts_.delta.value_or(eps_ * eps_);
    if (!(delta_ > 0.0)) throw DomainError("mollify: delta must be positive");
    const auto c = base_.break_points();
    const auto m = base_.slopes();
    const auto hc = base_.values_at_breaks();
    for (std::size_t i = 1; i < c.size(); ++i)
      if (!(2.0 * half_ < c[i] - c[i - 1]))
        throw OverlapError("mollify: corner blends overlap; reduce epsilon or width factor");
    for (std::size_t i = 0; i < c.size(); ++i) corners_.push_back({c[i], m[i], m[i + 1], hc[i]});
  }

  const PwlConvex& base() const { return base_; }
  double epsilon() const { return eps_; }
  double delta() const { return delta_; }
  double half_width() const { return half_; }
  BlendKind blend() const { return opts_.blend; }
  std::span<const Corner> corners() const { return corners_; }

  // H_eps without the delta q^2 term.
  double blended(double q) const {
    if (const auto* k = corner_at(q)) return blend_value(*k, q - k->c);
    return base_(q);
  }

  double blended_slope(double q) const {
    if (const auto* k = corner_at(q)) return blend_slope(*k, q - k->c);
    return base_.slope_at(q);
  }

  double operator()(double q) const { return blended(q) + delta_ * q * q; }
  double derivative(double q) const { return blended_slope(q) + 2.0 * delta_ * q; }

 private:
  const Corner* corner_at(double q) const {
    for (const auto& k : corners_)
      if (std::abs(q - k.c) < half_) return &k;
    return nullptr;
  }

  double blend_value(const Corner& k, double s) const {
    const double jump = k.right - k.left;
    if (opts_.blend == BlendKind::kQuadratic) {
      const double a = jump / (4.0 * half_);
      const double b = 0.5 * (k.left + k.right);
      return k.value + jump * half_ / 4.0 + b * s + a * s * s;
    }
    const double u = (s + half_) / (2.0 * half_);
    return k.value + k.left * s + 2.0 * half_ * jump * (u * u * u - 0.5 * u * u * u * u);
  }

  double blend_slope(const Corner& k, double s) const {
    const double jump = k.right - k.left;
    if (opts_.blend == BlendKind::kQuadratic)
      return 0.5 * (k.left + k.right) + jump * s / (2.0 * half_);
    const double u = (s + half_) / (2.0 * half_);
    return k.left + jump * u * u * (3.0 - 2.0 * u);
  }

  PwlConvex base_;
  double eps_;
  MollifyOptions opts_;
  double half_ = 0.0;
  double delta_ = 0.0;
  std::vector<Corner> corners_;
};

inline MollifiedFlux build_mollified(const PwlConvex& h, double epsilon, MollifyOptions opts = {}) {
  return MollifiedFlux(h, epsilon, opts);
}

inline double eval_mollified(const MollifiedFlux& f, double q) { return f(q); }
inline double deriv_mollified(const MollifiedFlux& f, double q) { return f.derivative(q); }

// The maximizer q* of p q - F(q), i.e. the root of F'(q) = p.
inline double conjugate_argmax(const MollifiedFlux& f, double p) {
  const double two_delta = 2.0 * f.delta();
  double lo = (p - f.base().max_slope()) / two_delta - 1.0;
  double hi = (p - f.base().min_slope()) / two_delta + 1.0;
  if (!(f.derivative(lo) <= p && f.derivative(hi) >= p))
    throw DivergenceError("numeric_conjugate: slope bracket does not enclose p");
  const double tol = 1e-12 * (1.0 + std::abs(p));
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double d = f.derivative(mid) - p;
    if (std::abs(d) <= tol) break;
    (d < 0.0 ? lo : hi) = mid;
  }
  return mid;
}

// L_{eps,delta}(p) = sup_q { p q - F(q) }, finite for every p.
inline double numeric_conjugate(const MollifiedFlux& f, double p) {
  const double q = conjugate_argmax(f, p);
  return p * q - f(q);
}

// y -> t L_{eps,delta}((x - y)/t) as a smooth Hopf-Lax kernel. The p-window
// [m_1 - 1, m_{N+1} + 1] contains every minimizer: outside it L grows with
// slope at least |q*| >= 1/(2 delta).
inline SmoothKernel smooth_kernel(const MollifiedFlux& f) {
  SmoothKernel k;
  k.value = [f](double p) { return numeric_conjugate(f, p); };
  k.derivative = [f](double p) { return conjugate_argmax(f, p); };
  k.p_lo = f.base().min_slope() - 1.0;
  k.p_hi = f.base().max_slope() + 1.0;
  return k;
}

inline PointSolution smoothed_solve(const MollifiedFlux& f, const InitialData& g, double x,
                                    double t, const SearchConfig& cfg = {}) {
  return solve_point(Kernel{smooth_kernel(f)}, g, x, t, cfg);
}

// w^eps(x, t) = g'(y_eps*(x, t)).
inline double smoothed_w(const MollifiedFlux& f, const InitialData& g, double x, double t,
                         const SearchConfig& cfg = {}) {
  return smoothed_solve(f, g, x, t, cfg).w;
}

inline std::vector<double> uniform_grid(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : (i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1));
  return v;
}

// max over p_grid of |L_{eps,delta}(p) - L(p)|; p_grid must lie in [m_1, m_{N+1}].
inline double conjugate_gap(const PwlConvex& h, double epsilon, std::span<const double> p_grid,
                            MollifyOptions opts = {}) {
  const MollifiedFlux f(h, epsilon, opts);
  const auto l = conjugate(h);
  double gap = 0.0;
  for (double p : p_grid) {
    const auto sharp = l(p);
    if (sharp.is_infinite()) throw DomainError("conjugate_gap: p outside the transform domain");
    gap = std::max(gap, std::abs(numeric_conjugate(f, p) - sharp.value()));
  }
  return gap;
}

inline double conjugate_gap(const PwlConvex& h, double epsilon, MollifyOptions opts = {}) {
  const auto grid = uniform_grid(h.min_slope(), h.max_slope(), 1001);
  return conjugate_gap(h, epsilon, grid, opts);
}

// Reference solution for comparisons: exact solver for piecewise-constant
// data, greatest-minimizer search otherwise.
inline SolutionField sharp_field(const PwlConvex& h, const InitialData& g,
                                 std::span<const double> x_grid, double t,
                                 const SearchConfig& cfg = {}) {
  require_flux(h);
  return solve_field(Kernel{SharpKernel{conjugate(h)}}, g, x_grid, t, cfg);
}

inline SolutionField mollified_field(const MollifiedFlux& f, const InitialData& g,
                                     std::span<const double> x_grid, double t,
                                     const SearchConfig& cfg = {}) {
  return solve_field(Kernel{smooth_kernel(f)}, g, x_grid, t, cfg);
}

struct ConvergenceReport {
  std::vector<double> epsilons;
  std::vector<double> conj_gaps;
  std::vector<double> w_errors;
  std::vector<double> rates;  // conj_gaps[k] / conj_gaps[k-1]; NaN for k = 0
  double fitted_c = 0.0;      // max conj_gap / eps
  std::size_t excluded = 0;   // x points in the flagged shock set
};

inline ConvergenceReport convergence_study(const PwlConvex& h, const InitialData& g,
                                           std::span<const double> x_grid, double t,
                                           std::span<const double> epsilons,
                                           MollifyOptions opts = {},
                                           const SearchConfig& cfg = {}) {
  for (std::size_t k = 1; k < epsilons.size(); ++k)
    if (!(epsilons[k] < epsilons[k - 1]))
      throw DomainError("convergence_study: epsilons must be strictly decreasing");
  const auto ref = sharp_field(h, g, x_grid, t, cfg);
  const auto shock = flag_shocks(ref.x, ref.y_star);

  ConvergenceReport r;
  r.epsilons.assign(epsilons.begin(), epsilons.end());
  r.excluded = static_cast<std::size_t>(std::count(shock.begin(), shock.end(), true));
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    const double eps = epsilons[k];
    const double gap = conjugate_gap(h, eps, opts);
    const MollifiedFlux f(h, eps, opts);
    const auto field = mollified_field(f, g, x_grid, t, cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < x_grid.size(); ++i)
      if (!shock[i]) err = std::max(err, std::abs(field.w[i] - ref.w[i]));
    r.conj_gaps.push_back(gap);
    r.w_errors.push_back(err);
    r.rates.push_back(k == 0 ? std::numeric_limits<double>::quiet_NaN() : gap / r.conj_gaps[k - 1]);
    r.fitted_c = std::max(r.fitted_c, gap / eps);
  }
  return r;
}

struct UniquenessReport {
  std::vector<double> epsilons;
  std::vector<double> sup_diff;  // sup |w^{eps,A} - w^{eps,B}| off the shock set
  std::vector<std::size_t> excluded;
};

// Compares two mollifier families at each eps. Piecewise-constant data is
// optionally replaced by ramps of width eps so both runs see C1 data. The
// exclusion set is the union of the shock flags of the sharp and both
// mollified fields.
inline UniquenessReport limiting_uniqueness_check(const PwlConvex& h, const InitialData& g,
                                                  std::span<const double> x_grid, double t,
                                                  std::span<const double> epsilons,
                                                  MollifyOptions family_a, MollifyOptions family_b,
                                                  bool mollify_data = true,
                                                  const SearchConfig& cfg = {}) {
  const auto ref = sharp_field(h, g, x_grid, t, cfg);
  const auto ref_flags = flag_shocks(ref.x, ref.y_star);
  UniquenessReport r;
  r.epsilons.assign(epsilons.begin(), epsilons.end());
  for (double eps : epsilons) {
    InitialData data = g;
    if (const auto* pcd = std::get_if<PiecewiseConstantDerivative>(&g); pcd && mollify_data) {
      const double lo = x_grid.front() - (h.max_slope() + 1.0) * t;
      const double hi = x_grid.back() - (h.min_slope() - 1.0) * t;
      data = mollify_jumps(*pcd, eps, lo, hi);
    }
    const auto a = mollified_field(MollifiedFlux(h, eps, family_a), data, x_grid, t, cfg);
    const auto b = mollified_field(MollifiedFlux(h, eps, family_b), data, x_grid, t, cfg);
    const auto fa = flag_shocks(a.x, a.y_star);
    const auto fb = flag_shocks(b.x, b.y_star);
    double diff = 0.0;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      if (ref_flags[i] || fa[i] || fb[i]) {
        ++skipped;
        continue;
      }
      diff = std::max(diff, std::abs(a.w[i] - b.w[i]));
    }
    r.sup_diff.push_back(diff);
    r.excluded.push_back(skipped);
  }
  return r;
}

}  // namespace polyflux
