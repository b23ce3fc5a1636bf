#pragma once

#include <cmath>
#include <limits>

namespace pinet {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Ordered (lower, median, upper) output of a PI-network.
///
/// Endpoints are extended reals: the trivial tau = 0 network and infinitely
/// expanded intervals carry lower = -inf and upper = +inf. The median is
/// always finite.
struct PiTriple {
  double lower = 0.0;
  double median = 0.0;
  double upper = 0.0;

  bool ordered() const { return lower <= median && median <= upper; }
  bool finite() const {
    return std::isfinite(lower) && std::isfinite(median) && std::isfinite(upper);
  }
  friend bool operator==(const PiTriple&, const PiTriple&) = default;
};

/// Closed interval [lower, upper] over the extended reals.
struct PiInterval {
  double lower = -kInf;
  double upper = kInf;

  bool contains(double y) const { return lower <= y && y <= upper; }
  double length() const {
    if (lower == upper) return 0.0;  // also covers degenerate [inf, inf]
    return upper - lower;
  }
  bool bounded() const { return std::isfinite(lower) && std::isfinite(upper); }
  friend bool operator==(const PiInterval&, const PiInterval&) = default;
};

inline PiInterval to_interval(const PiTriple& t) { return {t.lower, t.upper}; }

}  // namespace pinet
