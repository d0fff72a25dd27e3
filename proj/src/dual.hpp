#pragma once

#include <cmath>

namespace clnash::detail {

/// Forward-mode dual number carrying a value and one directional derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit from constants
  constexpr Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual sqrt(Dual a) {
  double s = std::sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }
inline double abs_value(double x) { return std::abs(x); }
inline double abs_value(Dual x) { return std::abs(x.v); }

}  // namespace clnash::detail
