#pragma once

#include <algorithm>
#include <cassert>
#include <limits>
#include <ostream>

namespace netqre {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed range [lo, hi] over the extended reals.
///
/// Program outputs are integer counts, so doubles hold them exactly; the
/// only non-integers that ever appear are threshold midpoints (k + 1/2).
struct Interval {
  double lo = 0;
  double hi = 0;

  constexpr Interval() = default;
  constexpr Interval(double l, double h) : lo(l), hi(h) { assert(!(l > h)); }
  static constexpr Interval point(double v) { return {v, v}; }

  constexpr bool degenerate() const { return lo == hi; }
  constexpr bool contains(double v) const { return lo <= v && v <= hi; }
  constexpr bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  constexpr double midpoint() const {
    if (lo == -kInf && hi == kInf) return 0;
    if (lo == -kInf) return hi - 0.5;
    if (hi == kInf) return lo + 0.5;
    return lo + (hi - lo) / 2;
  }

  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

constexpr Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

constexpr Interval add(const Interval& a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }
constexpr Interval max(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)};
}
constexpr Interval min(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)};
}

inline std::ostream& operator<<(std::ostream& os, const Interval& i) {
  return os << '[' << i.lo << ',' << i.hi << ']';
}

}  // namespace netqre
