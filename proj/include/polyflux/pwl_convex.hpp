#pragma once

// Convex piecewise-linear ("polygonal") functions and their exact
// Legendre-Fenchel conjugates.
//
// A PwlConvex H has break points c_1 < ... < c_N and slopes
// m_1 < ... < m_{N+1}; m_1 applies left of c_1 and m_{N+1} right of c_N.
// Its conjugate L(p) = sup_q { p q - H(q) } is finite exactly on the closed
// interval [m_1, m_{N+1}], where it is again piecewise linear with break
// points m_j and slopes c_j:  L(p) = p c_j - H(c_j)  for p in [m_j, m_{j+1}].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polyflux/errors.hpp"
#include "polyflux/extended_real.hpp"

namespace polyflux {

// kStrict enforces the flux assumptions N >= 1 and m_1 < 0 < m_{N+1};
// kRelaxed only requires convexity (used for general conjugation).
enum class FluxCheck { kStrict, kRelaxed };

class PwlConvex {
 public:
  PwlConvex(std::vector<double> break_points, std::vector<double> slopes,
            double anchor_value, FluxCheck check = FluxCheck::kStrict)
      : breaks_(std::move(break_points)), slopes_(std::move(slopes)), anchor_(anchor_value) {
    validate(check);
    // Integrate slopes from c_1 to get the value at every break point.
    values_.resize(breaks_.size());
    if (!breaks_.empty()) {
      values_[0] = anchor_;
      for (std::size_t i = 1; i < breaks_.size(); ++i)
        values_[i] = values_[i - 1] + slopes_[i] * (breaks_[i] - breaks_[i - 1]);
    }
  }

  std::span<const double> break_points() const { return breaks_; }
  std::span<const double> slopes() const { return slopes_; }
  // H(c_1), or H(0) when there are no break points.
  double anchor_value() const { return anchor_; }
  std::span<const double> values_at_breaks() const { return values_; }
  std::size_t num_breaks() const { return breaks_.size(); }

  double min_slope() const { return slopes_.front(); }
  double max_slope() const { return slopes_.back(); }

  bool satisfies_flux_assumptions() const {
    return !breaks_.empty() && slopes_.front() < 0.0 && slopes_.back() > 0.0;
  }

  double operator()(double q) const {
    if (breaks_.empty()) return anchor_ + slopes_[0] * q;
    const auto i = segment_index(q);
    if (i == 0) return values_[0] + slopes_[0] * (q - breaks_[0]);
    return values_[i - 1] + slopes_[i] * (q - breaks_[i - 1]);
  }

  // Slope of the segment containing q (right slope at a break point).
  double slope_at(double q) const { return slopes_[segment_index(q)]; }

 private:
  // Number of break points <= q; equals the index of the slope in effect.
  std::size_t segment_index(double q) const {
    return static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), q) -
                                    breaks_.begin());
  }

  void validate(FluxCheck check) const {
    if (slopes_.size() != breaks_.size() + 1)
      throw ConvexityError("slopes: expected " + std::to_string(breaks_.size() + 1) +
                           " slopes for " + std::to_string(breaks_.size()) + " break points, got " +
                           std::to_string(slopes_.size()));
    for (double v : breaks_)
      if (!std::isfinite(v)) throw DegenerateSegmentError("breaks: non-finite break point");
    for (double v : slopes_)
      if (!std::isfinite(v)) throw ConvexityError("slopes: non-finite slope");
    if (!std::isfinite(anchor_)) throw ConvexityError("anchor: non-finite value");
    for (std::size_t i = 1; i < breaks_.size(); ++i)
      if (!(breaks_[i - 1] < breaks_[i]))
        throw DegenerateSegmentError("breaks: break points must be strictly increasing");
    for (std::size_t i = 1; i < slopes_.size(); ++i)
      if (!(slopes_[i - 1] < slopes_[i]))
        throw ConvexityError("slopes: slopes must be strictly increasing (convexity)");
    if (check == FluxCheck::kStrict && !satisfies_flux_assumptions())
      throw ConvexityError("slopes: a flux needs at least one break point and m_1 < 0 < m_{N+1}");
  }

  std::vector<double> breaks_;
  std::vector<double> slopes_;
  double anchor_;
  std::vector<double> values_;
};

inline PwlConvex make_pwl(std::vector<double> break_points, std::vector<double> slopes,
                          double anchor_value, FluxCheck check = FluxCheck::kStrict) {
  return PwlConvex(std::move(break_points), std::move(slopes), anchor_value, check);
}

inline double eval_pwl(const PwlConvex& h, double q) { return h(q); }

// Throws unless `h` can serve as the flux of a Hopf-Lax problem.
inline void require_flux(const PwlConvex& h) {
  if (!h.satisfies_flux_assumptions())
    throw DomainError("flux must have at least one break point and slopes m_1 < 0 < m_{N+1}");
}

// Legendre transform of a PwlConvex: finite on [m_1, m_{N+1}], +inf outside.
class ConjugateFn {
 public:
  ConjugateFn(std::vector<double> break_points, std::vector<double> segment_slopes,
              std::vector<double> values_at_breaks)
      : breaks_(std::move(break_points)),
        slopes_(std::move(segment_slopes)),
        values_(std::move(values_at_breaks)) {}

  double domain_lo() const { return breaks_.front(); }
  double domain_hi() const { return breaks_.back(); }
  bool in_domain(double p) const { return p >= domain_lo() && p <= domain_hi(); }

  // m_1 < ... < m_{N+1}
  std::span<const double> break_points() const { return breaks_; }
  // c_1 < ... < c_N
  std::span<const double> segment_slopes() const { return slopes_; }
  // L(m_j)
  std::span<const double> values_at_breaks() const { return values_; }

  ExtendedReal operator()(double p) const {
    if (!in_domain(p)) return ExtendedReal::infinity();
    if (slopes_.empty()) return values_[0];
    const auto j = segment_index(p);
    if (p == breaks_[j]) return values_[j];
    if (p == breaks_[j + 1]) return values_[j + 1];
    return values_[j] + slopes_[j] * (p - breaks_[j]);
  }

  // Slope of the segment [m_j, m_{j+1}] containing p; at a break point m_j the
  // segment to its right, except at m_{N+1} where the last segment is used.
  double right_slope(double p) const {
    if (slopes_.empty()) return 0.0;
    return slopes_[segment_index(p)];
  }

  // Lipschitz constant on the domain: max(|c_1|, |c_N|).
  double lipschitz_constant() const {
    if (slopes_.empty()) return 0.0;
    return std::max(std::abs(slopes_.front()), std::abs(slopes_.back()));
  }

 private:
  std::size_t segment_index(double p) const {
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), p);
    auto j = static_cast<std::size_t>(it - breaks_.begin());
    j = j == 0 ? 0 : j - 1;
    return std::min(j, slopes_.size() - 1);
  }

  std::vector<double> breaks_;
  std::vector<double> slopes_;
  std::vector<double> values_;
};

inline ConjugateFn conjugate(const PwlConvex& h) {
  const auto c = h.break_points();
  const auto m = h.slopes();
  const auto hc = h.values_at_breaks();
  std::vector<double> values(m.size());
  if (c.empty()) {
    // H(q) = H(0) + m q  =>  L(m) = -H(0).
    values[0] = -h.anchor_value();
  } else {
    values[0] = m[0] * c[0] - hc[0];
    for (std::size_t j = 1; j < m.size(); ++j) values[j] = m[j] * c[j - 1] - hc[j - 1];
  }
  return ConjugateFn({m.begin(), m.end()}, {c.begin(), c.end()}, std::move(values));
}

inline ExtendedReal conjugate_eval(const ConjugateFn& l, double p) { return l(p); }

// Exact inverse of `conjugate`: recovers H from its transform.
inline PwlConvex biconjugate(const ConjugateFn& l) {
  const auto m = l.break_points();
  const auto c = l.segment_slopes();
  const auto lv = l.values_at_breaks();
  const double anchor = c.empty() ? -lv[0] : m[0] * c[0] - lv[0];
  return PwlConvex({c.begin(), c.end()}, {m.begin(), m.end()}, anchor, FluxCheck::kRelaxed);
}

}  // namespace polyflux
