#pragma once

// Initial data (g, g') for the Hopf-Lax problem: u(., 0) = g, w(., 0) = g'.
//
// Three representations:
//  * ClosedFormC1 - a pair of callables with a declared window;
//  * PiecewiseConstantDerivative - g' piecewise constant, g its exact
//    antiderivative with g(0) = 0;
//  * SampledPath - g' piecewise linear through uniform samples, g its exact
//    piecewise-quadratic antiderivative (g(0) = 0 when 0 is on the grid).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "polyflux/errors.hpp"
#include "polyflux/pwl_convex.hpp"

namespace polyflux {

struct GPrimeSample {
  double value = 0.0;
  bool at_jump = false;  // y hit a discontinuity of g'; value is the right limit
};

class ClosedFormC1 {
 public:
  using Fn = std::function<double(double)>;

  // Spot-checks g' against central differences of g at 64 pseudo-random
  // points of the window (relative tolerance 1e-6).
  ClosedFormC1(Fn g, Fn gprime, double window_lo, double window_hi, bool check_derivative = true)
      : g_(std::move(g)), gprime_(std::move(gprime)), lo_(window_lo), hi_(window_hi) {
    if (!(lo_ < hi_)) throw DomainError("closed-form data: empty window");
    if (check_derivative) check();
  }

  double g(double y) const { return g_(y); }
  double gprime(double y) const { return gprime_(y); }
  double window_lo() const { return lo_; }
  double window_hi() const { return hi_; }

 private:
  void check() const {
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> pick(lo_, hi_);
    const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
    for (int k = 0; k < 64; ++k) {
      const double y = pick(rng);
      const double h = h0 * std::max(1.0, std::abs(y));
      const double fd = (g_(y + h) - g_(y - h)) / (2.0 * h);
      const double d = gprime_(y);
      if (std::abs(fd - d) > 1e-6 * std::max(1.0, std::abs(d)))
        throw DomainError("closed-form data: g' is not the derivative of g");
    }
  }

  Fn g_;
  Fn gprime_;
  double lo_;
  double hi_;
};

class PiecewiseConstantDerivative {
 public:
  // g' = values[k] on (jumps[k-1], jumps[k]); values has one more entry than jumps.
  PiecewiseConstantDerivative(std::vector<double> jumps, std::vector<double> values)
      : jumps_(std::move(jumps)), values_(std::move(values)) {
    if (values_.size() != jumps_.size() + 1)
      throw DegenerateSegmentError("values: expected one more value than jump points");
    for (std::size_t k = 1; k < jumps_.size(); ++k)
      if (!(jumps_[k - 1] < jumps_[k]))
        throw DegenerateSegmentError("jumps: jump points must be strictly increasing");
    // Antiderivative relative to the first jump, then shifted so g(0) = 0.
    prefix_.resize(jumps_.size());
    if (!jumps_.empty()) {
      prefix_[0] = 0.0;
      for (std::size_t k = 1; k < jumps_.size(); ++k)
        prefix_[k] = prefix_[k - 1] + values_[k] * (jumps_[k] - jumps_[k - 1]);
    }
    offset_ = 0.0;
    offset_ = raw(0.0);
  }

  std::span<const double> jumps() const { return jumps_; }
  std::span<const double> values() const { return values_; }

  double g(double y) const { return raw(y) - offset_; }

  // Right limit at jump points.
  double gprime(double y) const { return values_[segment(y)]; }

  GPrimeSample gprime_flagged(double y) const {
    return {gprime(y), std::binary_search(jumps_.begin(), jumps_.end(), y)};
  }

  // True when every value of g' is a break point of `flux`.
  bool values_subset_of(const PwlConvex& flux) const {
    const auto c = flux.break_points();
    return std::all_of(values_.begin(), values_.end(), [&](double v) {
      return std::find(c.begin(), c.end(), v) != c.end();
    });
  }

  double lipschitz(double lo, double hi) const {
    double best = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const double a = k == 0 ? -std::numeric_limits<double>::infinity() : jumps_[k - 1];
      const double b = k == jumps_.size() ? std::numeric_limits<double>::infinity() : jumps_[k];
      if (b > lo && a < hi) best = std::max(best, std::abs(values_[k]));
    }
    return best;
  }

  // Variation of the right-continuous g' over [lo, hi]: jumps in (lo, hi].
  double total_variation(double lo, double hi) const {
    double tv = 0.0;
    for (std::size_t k = 0; k < jumps_.size(); ++k)
      if (jumps_[k] > lo && jumps_[k] <= hi) tv += std::abs(values_[k + 1] - values_[k]);
    return tv;
  }

 private:
  std::size_t segment(double y) const {
    return static_cast<std::size_t>(std::upper_bound(jumps_.begin(), jumps_.end(), y) -
                                    jumps_.begin());
  }

  double raw(double y) const {
    if (jumps_.empty()) return values_[0] * y;
    const auto k = segment(y);
    if (k == 0) return values_[0] * (y - jumps_[0]);
    return prefix_[k - 1] + values_[k] * (y - jumps_[k - 1]);
  }

  std::vector<double> jumps_;
  std::vector<double> values_;
  std::vector<double> prefix_;
  double offset_ = 0.0;
};

inline PiecewiseConstantDerivative make_piecewise_constant(std::vector<double> jumps,
                                                           std::vector<double> values) {
  return PiecewiseConstantDerivative(std::move(jumps), std::move(values));
}

class SampledPath {
 public:
  // Samples values[k] of g' at x0 + k*step; g' is held constant beyond the grid.
  SampledPath(double x0, double step, std::vector<double> values)
      : x0_(x0), step_(step), values_(std::move(values)) {
    if (!(step_ > 0.0)) throw DomainError("sampled path: step must be positive");
    if (values_.size() < 2) throw DomainError("sampled path: need at least two samples");
    cumulative_.resize(values_.size());
    cumulative_[0] = 0.0;
    for (std::size_t k = 1; k < values_.size(); ++k)
      cumulative_[k] = cumulative_[k - 1] + 0.5 * (values_[k - 1] + values_[k]) * step_;
    offset_ = 0.0;
    if (x0_ <= 0.0 && node(values_.size() - 1) >= 0.0) offset_ = raw(0.0);
  }

  double x0() const { return x0_; }
  double step() const { return step_; }
  double x_end() const { return node(values_.size() - 1); }
  std::span<const double> values() const { return values_; }
  double node(std::size_t k) const { return x0_ + static_cast<double>(k) * step_; }

  double g(double y) const { return raw(y) - offset_; }

  double gprime(double y) const {
    if (y <= x0_) return values_.front();
    if (y >= x_end()) return values_.back();
    const auto k = cell(y);
    const double s = (y - node(k)) / step_;
    return values_[k] + (values_[k + 1] - values_[k]) * s;
  }

  // Points of [lo, hi] where the interpolated g' equals `level` (one per
  // crossing cell; cells where g' is identically `level` are skipped).
  std::vector<double> level_crossings(double level, double lo, double hi) const {
    std::vector<double> out;
    lo = std::max(lo, x0_);
    hi = std::min(hi, x_end());
    if (!(lo < hi)) return out;
    const auto k0 = cell(lo);
    const auto k1 = cell(hi);
    for (auto k = k0; k <= k1; ++k) {
      const double a = values_[k] - level;
      const double b = values_[k + 1] - level;
      if (a == b || a * b > 0.0) continue;
      const double y = node(k) + step_ * (a / (a - b));
      if (y >= lo && y <= hi) out.push_back(y);
    }
    return out;
  }

  double lipschitz(double lo, double hi) const {
    double best = std::max(std::abs(gprime(lo)), std::abs(gprime(hi)));
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const double x = node(k);
      if (x > lo && x < hi) best = std::max(best, std::abs(values_[k]));
    }
    return best;
  }

  double total_variation(double lo, double hi) const {
    double tv = 0.0;
    double prev = gprime(lo);
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const double x = node(k);
      if (x > lo && x < hi) {
        tv += std::abs(values_[k] - prev);
        prev = values_[k];
      }
    }
    return tv + std::abs(gprime(hi) - prev);
  }

 private:
  std::size_t cell(double y) const {
    const double r = std::floor((y - x0_) / step_);
    const double last = static_cast<double>(values_.size() - 2);
    return static_cast<std::size_t>(std::clamp(r, 0.0, last));
  }

  double raw(double y) const {
    if (y <= x0_) return values_.front() * (y - x0_);
    const double xe = x_end();
    if (y >= xe) return cumulative_.back() + values_.back() * (y - xe);
    const auto k = cell(y);
    const double s = y - node(k);
    const double slope = (values_[k + 1] - values_[k]) / step_;
    return cumulative_[k] + values_[k] * s + 0.5 * slope * s * s;
  }

  double x0_;
  double step_;
  std::vector<double> values_;
  std::vector<double> cumulative_;
  double offset_ = 0.0;
};

using InitialData = std::variant<ClosedFormC1, PiecewiseConstantDerivative, SampledPath>;

inline double eval_g(const InitialData& data, double y) {
  return std::visit([y](const auto& d) { return d.g(y); }, data);
}

// Right limit at discontinuities of g'.
inline double eval_gprime(const InitialData& data, double y) {
  return std::visit([y](const auto& d) { return d.gprime(y); }, data);
}

inline GPrimeSample eval_gprime_flagged(const InitialData& data, double y) {
  if (const auto* pcd = std::get_if<PiecewiseConstantDerivative>(&data)) return pcd->gprime_flagged(y);
  return {eval_gprime(data, y), false};
}

// max |g'| on [lo, hi]: exact for piecewise data, a 2^12-point grid for closed forms.
inline double lipschitz_estimate(const InitialData& data, double lo, double hi) {
  if (!(lo <= hi)) throw DomainError("lipschitz_estimate: empty window");
  if (const auto* pcd = std::get_if<PiecewiseConstantDerivative>(&data)) return pcd->lipschitz(lo, hi);
  if (const auto* path = std::get_if<SampledPath>(&data)) return path->lipschitz(lo, hi);
  const auto& cf = std::get<ClosedFormC1>(data);
  constexpr int kPoints = 1 << 12;
  double best = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const double y = lo + (hi - lo) * i / (kPoints - 1);
    best = std::max(best, std::abs(cf.gprime(y)));
  }
  return best;
}

// Total variation of g' on [lo, hi]. For closed forms the variation is taken
// over a 2^14-point grid merged with `extra_points` inside the window, so it
// bounds the variation along any subsequence of those points.
inline double total_variation_of_gprime(const InitialData& data, double lo, double hi,
                                        std::span<const double> extra_points = {}) {
  if (hi <= lo) return 0.0;
  if (const auto* pcd = std::get_if<PiecewiseConstantDerivative>(&data))
    return pcd->total_variation(lo, hi);
  if (const auto* path = std::get_if<SampledPath>(&data)) return path->total_variation(lo, hi);
  const auto& cf = std::get<ClosedFormC1>(data);
  constexpr int kPoints = 1 << 14;
  std::vector<double> ys;
  ys.reserve(kPoints + extra_points.size());
  for (int i = 0; i < kPoints; ++i) ys.push_back(lo + (hi - lo) * i / (kPoints - 1));
  for (double y : extra_points)
    if (y >= lo && y <= hi) ys.push_back(y);
  std::sort(ys.begin(), ys.end());
  double tv = 0.0;
  for (std::size_t i = 1; i < ys.size(); ++i) tv += std::abs(cf.gprime(ys[i]) - cf.gprime(ys[i - 1]));
  return tv;
}

// Two-sided Brownian path for g' with B(0) = 0 on a uniform grid covering
// [grid_start, grid_end]. Increments are N(0, scale^2 * step); the right and
// left halves use independent mt19937_64 streams derived from `seed`, so a
// given (grid, seed) always reproduces the same path. scale = 0 gives the
// zero path.
inline SampledPath sample_brownian(double grid_start, double grid_end, double step,
                                   std::uint64_t seed, double scale = 1.0) {
  if (!(step > 0.0)) throw DomainError("sample_brownian: step must be positive");
  if (!(grid_start <= 0.0 && grid_end >= 0.0))
    throw DomainError("sample_brownian: grid must contain the origin");
  const auto n_left = static_cast<std::size_t>(std::ceil(-grid_start / step - 1e-9));
  const auto n_right = static_cast<std::size_t>(std::ceil(grid_end / step - 1e-9));
  const std::size_t n = std::max<std::size_t>(n_left + n_right + 1, 2);
  std::vector<double> b(n, 0.0);
  const double sd = scale * std::sqrt(step);
  const auto lo32 = static_cast<std::uint32_t>(seed);
  const auto hi32 = static_cast<std::uint32_t>(seed >> 32);
  std::seed_seq right_seq{lo32, hi32, 1u};
  std::seed_seq left_seq{lo32, hi32, 2u};
  std::mt19937_64 right_rng(right_seq);
  std::mt19937_64 left_rng(left_seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = n_left + 1; k < n; ++k) b[k] = b[k - 1] + sd * normal(right_rng);
  normal.reset();
  for (std::size_t k = n_left; k-- > 0;) b[k] = b[k + 1] + sd * normal(left_rng);
  // x0 = -(n_left * step) makes node n_left exactly 0.
  return SampledPath(-(static_cast<double>(n_left) * step), step, std::move(b));
}

// Replaces each jump of g' by a linear ramp over [d - eps, d + eps]; g stays
// the exact antiderivative with g(0) = 0.
inline ClosedFormC1 mollify_jumps(const PiecewiseConstantDerivative& data, double eps,
                                  double window_lo, double window_hi) {
  const auto d = data.jumps();
  for (std::size_t k = 1; k < d.size(); ++k)
    if (!(2.0 * eps < d[k] - d[k - 1])) throw OverlapError("mollify_jumps: ramps would overlap");
  if (!(eps > 0.0)) throw DomainError("mollify_jumps: eps must be positive");
  std::vector<double> jumps(d.begin(), d.end());
  std::vector<double> values(data.values().begin(), data.values().end());
  // Integral of (ramp - step) from -inf to y for a unit jump at `at`.
  auto correction = [eps](double at, double y) {
    const double s = y - at + eps;
    if (s <= 0.0 || s >= 2.0 * eps) return 0.0;
    const double r = s * s / (4.0 * eps);
    return y < at ? r : r - (y - at);
  };
  auto ramp = [eps](double at, double y) {
    const double s = (y - at + eps) / (2.0 * eps);
    return std::clamp(s, 0.0, 1.0);
  };
  auto g = [data, jumps, values, correction](double y) {
    double v = data.g(y);
    for (std::size_t k = 0; k < jumps.size(); ++k)
      v += (values[k + 1] - values[k]) * (correction(jumps[k], y) - correction(jumps[k], 0.0));
    return v;
  };
  auto gp = [jumps, values, ramp](double y) {
    double v = values[0];
    for (std::size_t k = 0; k < jumps.size(); ++k) v += (values[k + 1] - values[k]) * ramp(jumps[k], y);
    return v;
  };
  return ClosedFormC1(g, gp, window_lo, window_hi);
}

}  // namespace polyflux
