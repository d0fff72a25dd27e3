#include "clnash/root_finding.hpp"

#include <algorithm>

namespace clnash {

NewtonBisectResult newton_bisect(const std::function<void(double, double&, double&)>& eval,
                                 double lo, double hi, double x0,
                                 const NewtonBisectOptions& options) {
  NewtonBisectResult out;
  double f_lo = 0.0, f_hi = 0.0, df = 0.0;
  eval(lo, f_lo, df);
  eval(hi, f_hi, df);
  if (f_lo == 0.0) return {lo, 0.0, 0, true};
  if (f_hi == 0.0) return {hi, 0.0, 0, true};
  // Orient so that f(xl) < 0 < f(xh).
  double xl = lo, xh = hi;
  if (f_lo > 0.0) std::swap(xl, xh);

  double x = (x0 > std::min(lo, hi) && x0 < std::max(lo, hi)) ? x0 : 0.5 * (lo + hi);
  double dx_old = std::abs(hi - lo);
  double dx = dx_old;
  double f = 0.0;
  eval(x, f, df);

  for (int it = 1; it <= options.max_iterations; ++it) {
    out.iterations = it;
    bool newton_leaves = ((x - xh) * df - f) * ((x - xl) * df - f) > 0.0;
    bool newton_slow = std::abs(2.0 * f) > std::abs(dx_old * df);
    if (newton_leaves || newton_slow || df == 0.0) {
      dx_old = dx;
      dx = 0.5 * (xh - xl);
      x = xl + dx;
    } else {
      dx_old = dx;
      dx = f / df;
      x -= dx;
    }
    eval(x, f, df);
    if (std::abs(f) <= options.f_tolerance && std::abs(dx) <= options.step_tolerance) {
      out.converged = true;
      break;
    }
    if (f < 0.0) xl = x; else xh = x;
    if (xl == xh) break;
  }
  out.root = x;
  out.f_value = f;
  if (!out.converged) out.converged = std::abs(f) <= options.f_tolerance && std::abs(dx) <= options.step_tolerance;
  return out;
}

std::optional<double> bisect(const std::function<double(double)>& f, double lo, double hi,
                             double x_tolerance, int max_iterations) {
  double f_lo = f(lo), f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) return std::nullopt;
  for (int i = 0; i < max_iterations && std::abs(hi - lo) > x_tolerance; ++i) {
    double mid = 0.5 * (lo + hi);
    double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace clnash
