#pragma once

#include <cassert>
#include <compare>
#include <limits>

namespace polyflux {

// A real number or +infinity. Infinity is a tag, not a large float, so
// infeasible points can be excluded exactly by comparisons.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT: implicit on purpose

  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }

  // Only valid for finite values.
  constexpr double value() const {
    assert(!infinite_);
    return value_;
  }

  // Finite value, or +inf as an IEEE double (for output only).
  constexpr double as_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend constexpr ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return {a.value_ + b.value_};
  }

  // Scaling by a nonnegative factor keeps +inf at +inf.
  friend constexpr ExtendedReal operator*(double s, ExtendedReal a) {
    assert(s >= 0.0);
    if (a.infinite_) return infinity();
    return {s * a.value_};
  }

  friend constexpr bool operator==(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

  friend constexpr std::partial_ordering operator<=>(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
    if (a.infinite_) return std::partial_ordering::greater;
    if (b.infinite_) return std::partial_ordering::less;
    return a.value_ <=> b.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

}  // namespace polyflux
