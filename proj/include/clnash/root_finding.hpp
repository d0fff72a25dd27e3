#pragma once

#include <cmath>
#include <functional>
#include <optional>

namespace clnash {

struct NewtonBisectOptions {
  int max_iterations = 200;
  double f_tolerance = 0.0;     // absolute |f| threshold
  double step_tolerance = 0.0;  // absolute |dx| threshold
};

struct NewtonBisectResult {
  double root = 0.0;
  double f_value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Safeguarded Newton iteration on a sign-changing bracket [lo, hi]: takes the
/// Newton step when it stays inside the bracket and shrinks fast enough,
/// bisects otherwise. `eval(x, f, df)` fills the value and derivative.
/// Converged requires |f| <= f_tolerance and |dx| <= step_tolerance together.
NewtonBisectResult newton_bisect(const std::function<void(double, double&, double&)>& eval,
                                 double lo, double hi, double x0,
                                 const NewtonBisectOptions& options);

/// Plain bisection on a sign change; used as an independent oracle in tests.
std::optional<double> bisect(const std::function<double(double)>& f, double lo, double hi,
                             double x_tolerance, int max_iterations = 400);

}  // namespace clnash
