#include "clnash/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "clnash/root_finding.hpp"
#include "dual.hpp"

namespace clnash {

using detail::Dual;
using detail::value_of;

// ---------------------------------------------------------------------------
// Cubic
// ---------------------------------------------------------------------------

double Cubic::max_abs_coeff() const {
  return std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
}

Cubic p_cubic(int n_agents) {
  if (n_agents < 2) throw DomainError("n_agents must be >= 2");
  // Horner in long double keeps the integer coefficients exact well past N = 100.
  const long double n = n_agents;
  auto poly = [n](std::initializer_list<long double> coeffs_high_first) {
    long double acc = 0;
    for (long double c : coeffs_high_first) acc = acc * n + c;
    return static_cast<double>(acc);
  };
  Cubic p;
  p.c3 = poly({8, 0, 0, 0, 0, 0, 0});
  p.c2 = poly({-16, 4, 48, -52, 8, 20, -8, -4});
  p.c1 = poly({8, -20, 46, -112, 114, -4, -46, 8, 6});
  p.c0 = poly({-9, 48, -100, 96, -30, -16, 12, 0, -1});
  return p;
}

std::array<std::complex<double>, 3> cardano_roots(const Cubic& cubic) {
  if (cubic.c3 == 0.0 || !std::isfinite(cubic.c3))
    throw DomainError("cardano_roots: leading coefficient must be nonzero");
  using C = std::complex<double>;
  const double a = cubic.c2 / cubic.c3;
  const double b = cubic.c1 / cubic.c3;
  const double c = cubic.c0 / cubic.c3;
  // z = t - a/3 gives t^3 + p t + q = 0.
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double shift = -a / 3.0;
  const double disc = 0.25 * q * q + p * p * p / 27.0;

  std::array<C, 3> roots;
  if (disc < 0.0) {
    // Three distinct real roots: trigonometric form of Cardano's formula.
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k)
      roots[k] = C(r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) + shift, 0.0);
  } else {
    const double sq = std::sqrt(disc);
    const double u = std::cbrt(-0.5 * q + sq);
    const double v = std::cbrt(-0.5 * q - sq);
    const double re = -0.5 * (u + v) + shift;
    const double im = 0.5 * std::sqrt(3.0) * (u - v);
    roots = {C(u + v + shift, 0.0), C(re, im), C(re, -im)};
  }

  // Newton polish; keeps a step only when it reduces |P|.
  for (C& z : roots) {
    for (int it = 0; it < 4; ++it) {
      C fz = cubic(z);
      C dfz = (3.0 * cubic.c3 * z + 2.0 * cubic.c2) * z + cubic.c1;
      if (dfz == C(0.0) || fz == C(0.0)) break;
      C next = z - fz / dfz;
      if (std::abs(cubic(next)) < std::abs(fz)) z = next; else break;
    }
    if (roots[0].imag() == 0.0 && z.imag() != 0.0 && disc < 0.0) z = C(z.real(), 0.0);
  }
  std::sort(roots.begin(), roots.end(), [](const C& x, const C& y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return roots;
}

// ---------------------------------------------------------------------------
// Gamma and delta*
// ---------------------------------------------------------------------------

double admissible_bound(int n_agents) {
  const double n = n_agents;
  return std::sqrt(2.0) * n * std::sqrt((n - 1.0) / (3.0 * n + 1.0));
}

double GammaParts::scale() const { return std::abs(poly) + std::abs(radical_coeff * radical); }

GammaParts gamma_parts(int n_agents, double y) {
  if (n_agents < 2) throw DomainError("n_agents must be >= 2");
  const double n = n_agents;
  const double y2 = y * y, y3 = y2 * y;
  const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n, n7 = n6 * n;
  double radicand = 2.0 * n3 - 2.0 * n2 - (3.0 * n + 1.0) * y2;
  if (radicand < 0.0 && radicand > -1e-12 * n3) radicand = 0.0;  // rounding at the bound
  if (radicand < 0.0) {
    std::ostringstream msg;
    msg << "gamma_limit: radicand 2N^3-2N^2-(3N+1)y^2 is negative at y = " << y;
    throw DomainError(msg.str());
  }
  GammaParts g;
  g.radical = std::sqrt(radicand / ((n - 1.0) * (n + 1.0) * (n + 1.0)));
  g.poly = (4 * n6 - 24 * n4 - 8 * n3 + 18 * n2 + 12 * n + 2) * y3 +
           (-4 * n7 + 17 * n6 - 10 * n5 - 12 * n4 + 6 * n3 + 3 * n2) * y;
  g.radical_coeff = (8 * n6 + 4 * n5 - 20 * n4 - 14 * n3 + 10 * n2 + 10 * n + 2) * y2 +
                    (-3 * n7 + 5 * n6 + 2 * n5 - 6 * n4 + n3 + n2);
  return g;
}

double gamma_limit(int n_agents, double y) { return gamma_parts(n_agents, y).value(); }

std::vector<RootCandidate> delta_star_candidates(int n_agents, double rel_tolerance) {
  const Cubic cubic = p_cubic(n_agents);
  const double bound = admissible_bound(n_agents);
  std::vector<RootCandidate> out;
  for (const auto& z : cardano_roots(cubic)) {
    RootCandidate cand;
    cand.z = z;
    cand.real_positive =
        std::abs(z.imag()) <= 1e-10 * std::max(1.0, std::abs(z)) && z.real() > 0.0;
    if (cand.real_positive) {
      cand.y = std::sqrt(z.real());
      cand.in_bound = cand.y <= bound * (1.0 + 1e-12);
      if (cand.in_bound) {
        GammaParts g = gamma_parts(n_agents, std::min(cand.y, bound));
        cand.gamma_value = g.value();
        cand.gamma_scale = g.scale();
        cand.passes = std::abs(cand.gamma_value) <= rel_tolerance * cand.gamma_scale;
      }
    }
    out.push_back(cand);
  }
  return out;
}

double delta_star(int n_agents) {
  double tolerance = 1e-6;
  for (int attempt = 0; attempt < 2; ++attempt, tolerance *= 1e-2) {
    auto cands = delta_star_candidates(n_agents, tolerance);
    auto passing = std::count_if(cands.begin(), cands.end(),
                                 [](const RootCandidate& c) { return c.passes; });
    if (passing == 1)
      return std::find_if(cands.begin(), cands.end(), [](const RootCandidate& c) {
               return c.passes;
             })->y;
    if (passing == 0) break;
  }
  throw SolverError(ErrorKind::NoAdmissibleRoot,
                    "no admissible root: Gamma filter did not isolate a unique root of P_N for N = " +
                        std::to_string(n_agents));
}

// ---------------------------------------------------------------------------
// Phi_N in rescaled variables
// ---------------------------------------------------------------------------

namespace {

template <class T>
struct PhiEval {
  T value;
  double magnitude = 0.0;
};

template <class T>
T theta_scaled(double n, T y, double eps) {
  using std::sqrt;
  const double np1 = n + 1.0;
  T radicand = eps * eps + (8.0 * n * n - 4.0 * eps * (3.0 * n + 1.0) * y) / (np1 * np1) -
               4.0 * (3.0 * n + 1.0) * y * y / ((n - 1.0) * np1 * np1);
  if (!(value_of(radicand) >= 0.0)) throw DomainError("Theta_N radicand is negative");
  return (np1 * np1 * (sqrt(radicand) - eps) + (6.0 * n + 2.0) * y) / (4.0 * n * n);
}

template <class T>
PhiEval<T> phi_eval(int n_agents, T y, double eps) {
  const double n = n_agents;
  const double np1 = n + 1.0, nm1 = n - 1.0;
  const T theta = theta_scaled(n, y, eps);
  const T psi_den = eps * (n * n - 1.0) + 4.0 * theta * nm1 + 2.0 * (n - 3.0) * y;
  if (value_of(psi_den) == 0.0) throw DomainError("Psi_N denominator vanished");
  const T lin = theta * (1.0 - n) + 2.0 * y;
  const T psi = 2.0 * nm1 * lin * lin / (np1 * psi_den);

  const T terms[] = {
      y * np1 * eps * (n * n - 1.0),
      -2.0 * y * np1 * psi,
      ((n - 6.0) * n + 1.0) * y * y,
      -2.0 * theta * theta * nm1 * nm1 * n,
      theta * nm1 * np1 * psi,
      8.0 * n * theta * nm1 * y,
  };
  const double den = nm1 * np1 * np1;
  T sum = terms[0];
  double mag = detail::abs_value(terms[0]);
  for (int i = 1; i < 6; ++i) {
    sum = sum + terms[i];
    mag += detail::abs_value(terms[i]);
  }
  return {sum / den, mag / den};
}

}  // namespace

double phi_scaled(int n_agents, double y, double eps) {
  return phi_eval<double>(n_agents, y, eps).value;
}

double phi_scaled_dy(int n_agents, double y, double eps) {
  return phi_eval<Dual>(n_agents, Dual(y, 1.0), eps).value.d;
}

double phi_scaled_magnitude(int n_agents, double y, double eps) {
  return phi_eval<double>(n_agents, y, eps).magnitude;
}

double rescaled_rho(const ModelParams& p) { return p.rho * std::sqrt(p.lambda / p.gamma); }

double phi(const ValidatedParams& params, double y) {
  return params->gamma * phi_scaled(params->n_agents, y, rescaled_rho(*params));
}

double phi_limit(int n_agents, double y, double gamma) {
  const GammaParts g = gamma_parts(n_agents, y);
  const double n = n_agents;
  const double sg = std::sqrt(gamma);
  const double s = sg * g.radical;
  const double xi = 4.0 * (n - 1.0) * std::pow(n, 4) * (n * n * s - s + sg * (n * n * y - n * y - y));
  if (xi == 0.0) throw DomainError("phi_limit: Xi(N, y) vanished");
  return gamma * sg * g.value() / xi;
}

// ---------------------------------------------------------------------------
// solve_delta
// ---------------------------------------------------------------------------

namespace {

/// Largest y with a non-negative Theta_N radicand.
double theta_domain_end(double n, double eps) {
  const double np1 = n + 1.0;
  const double a2 = 4.0 * (3.0 * n + 1.0) / ((n - 1.0) * np1 * np1);
  const double a1 = 4.0 * eps * (3.0 * n + 1.0) / (np1 * np1);
  const double a0 = eps * eps + 8.0 * n * n / (np1 * np1);
  return 2.0 * a0 / (a1 + std::sqrt(a1 * a1 + 4.0 * a2 * a0));
}

std::optional<double> try_phi(int n, double y, double eps) {
  try {
    double v = phi_scaled(n, y, eps);
    if (std::isfinite(v)) return v;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

/// Walks away from the seed (first in the Newton direction) until the sign flips.
std::optional<std::pair<double, double>> find_bracket(int n, double eps, double y0, double f0,
                                                      double y_max) {
  double slope = 0.0;
  try {
    slope = phi_scaled_dy(n, y0, eps);
  } catch (const DomainError&) {
  }
  const bool newton_goes_down = slope != 0.0 ? (-f0 / slope) < 0.0 : true;

  auto scan = [&](bool down) -> std::optional<std::pair<double, double>> {
    double prev = y0;
    for (int k = 0; k < 1100; ++k) {
      double y;
      if (down) {
        double h = 1e-3 * std::ldexp(1.0, k);
        y = h < 0.5 ? y0 * (1.0 - h) : y0 * std::ldexp(0.5, -(k - 9));
        if (!(y > 0.0)) break;
      } else {
        double h = std::min(1.0, 1e-3 * std::ldexp(1.0, k));
        y = y0 + (y_max - y0) * h;
      }
      auto f = try_phi(n, y, eps);
      if (f) {
        if ((*f > 0.0) != (f0 > 0.0) || *f == 0.0) return std::make_pair(prev, y);
        prev = y;
      }
      if (!down && y >= y_max) break;
    }
    return std::nullopt;
  };

  if (auto b = scan(newton_goes_down)) return b;
  return scan(!newton_goes_down);
}

}  // namespace

DeltaSolution solve_delta(const ValidatedParams& params, const SolveOptions& options) {
  const int n = params->n_agents;
  const double eps = rescaled_rho(*params);
  const double y_max = theta_domain_end(n, eps);
  double y0 = std::min(delta_star(n), y_max * (1.0 - 1e-9));

  auto f0 = try_phi(n, y0, eps);
  if (!f0) throw SolverError(ErrorKind::NoConvergence, "no convergence: Phi_N undefined at the seed");

  double root = y0;
  int iterations = 0;
  if (*f0 != 0.0) {
    auto bracket = find_bracket(n, eps, y0, *f0, y_max);
    if (!bracket)
      throw SolverError(ErrorKind::NoConvergence,
                        "no convergence: no sign change of Phi_N around delta*");

    // Newton on Phi scaled by its term magnitude, so the tolerance is relative.
    auto eval = [&](double y, double& f, double& df) {
      auto r = phi_eval<Dual>(n, Dual(y, 1.0), eps);
      const double mag = r.magnitude > 0.0 ? r.magnitude : 1.0;
      f = r.value.v / mag;
      df = r.value.d / mag;
    };
    NewtonBisectOptions nb;
    nb.max_iterations = options.max_iterations;
    nb.f_tolerance = options.phi_tolerance;
    nb.step_tolerance = options.step_tolerance * std::min(bracket->first, bracket->second);
    auto res = newton_bisect(eval, bracket->first, bracket->second, y0, nb);
    if (!res.converged) {
      std::ostringstream msg;
      msg << "no convergence: Phi_N root not found within " << options.max_iterations
          << " iterations (|Phi|/scale = " << std::abs(res.f_value) << ")";
      throw SolverError(ErrorKind::NoConvergence, msg.str());
    }
    root = res.root;
    iterations = res.iterations;
  }

  DeltaSolution out;
  out.delta = root;
  out.iterations = iterations;
  auto ev = phi_eval<double>(n, root, eps);
  out.phi_residual = std::abs(params->gamma * ev.value);
  out.phi_relative = ev.magnitude > 0.0 ? std::abs(ev.value) / ev.magnitude : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Coefficient recovery
// ---------------------------------------------------------------------------

namespace {

void require_nonzero(double value, double magnitude, const char* name) {
  if (!std::isfinite(value) || !(std::abs(value) > 1e-13 * magnitude))
    throw SolverError(ErrorKind::DenominatorVanished,
                      std::string("denominator vanished: ") + name);
}

double sum_abs(std::initializer_list<double> xs) {
  double s = 0.0;
  for (double x : xs) s += std::abs(x);
  return s;
}

}  // namespace

CoefficientSet recover_coefficients(const ValidatedParams& params, double delta,
                                    std::vector<std::string>* warnings) {
  const ModelParams& p = *params;
  const double n = p.n_agents;
  const double lam = p.lambda, rho = p.rho, beta = p.beta, gamma = p.gamma;
  const double eps = rescaled_rho(p);
  const double s = std::sqrt(gamma * lam);

  if (!(delta > 0.0)) throw SolverError(ErrorKind::BranchInvalid, "branch invalid: delta <= 0");

  CoefficientSet k;
  k.delta = delta;
  k.d = s * delta;
  // a(d) in rescaled form; identical to the closed form in d.
  try {
    k.a = s * theta_scaled(n, delta, eps);
  } catch (const DomainError&) {
    throw SolverError(ErrorKind::BranchInvalid, "branch invalid: a(d) radicand is negative");
  }
  const double a = k.a, d = k.d;
  const double n2m1 = n * n - 1.0;

  k.b_bar = (-a * n + a + 2.0 * d) / (lam - lam * n * n);
  k.c_bar = -(d - a * n) / (lam + lam * n);

  const double den_b = 4.0 * a * (n - 1.0) + 2.0 * d * (n - 3.0) + lam * n2m1 * rho;
  require_nonzero(den_b, sum_abs({4.0 * a * (n - 1.0), 2.0 * d * (n - 3.0), lam * n2m1 * rho}),
                  "4a(N-1) + 2d(N-3) + lambda(N^2-1)rho");
  k.b = 2.0 * (n - 1.0) * std::pow(-a * n + a + 2.0 * d, 2) / ((n + 1.0) * den_b);

  k.h1 = 2.0 * d - (n - 1.0) * a;
  k.h2 = 2.0 * a * (n - 1.0) + d * (n - 3.0) + lam * n2m1 * (beta + rho);
  require_nonzero(k.h2, sum_abs({2.0 * a * (n - 1.0), d * (n - 3.0), lam * n2m1 * (beta + rho)}), "h2");
  k.h3 = -(2.0 * a * (n - 1.0) + (n - 3.0) * d) / (lam * (n - 1.0) * (n + 1.0));
  const double h2_outer = 2.0 * k.h2 - lam * n2m1 * (2.0 * beta + rho);
  require_nonzero(h2_outer, sum_abs({2.0 * k.h2, lam * n2m1 * (2.0 * beta + rho)}),
                  "2 h2 - lambda(N^2-1)(2 beta + rho)");
  const double h4_first = 2.0 * k.h1 * k.h1 *
                          (-a * (n * n + 2.0 * n - 3.0) + 4.0 * d - lam * n2m1 * rho) /
                          (k.h2 * lam * (n + 1.0) * (n + 1.0) * h2_outer);
  const double h4_second = ((n - 1.0) * d + 2.0 * a * n) / (lam * (n + 1.0) * (n + 1.0));
  k.h4 = h4_first + h4_second + beta + rho;
  require_nonzero(k.h4, sum_abs({h4_first, h4_second, beta, rho}), "h4");
  if (p.n_agents == 2 && !(a >= d / 2.0))
    throw SolverError(ErrorKind::DenominatorVanished,
                      "denominator vanished: h4 check for N = 2 requires a >= d/2");
  const double h3_shift = k.h3 - (rho + beta);
  require_nonzero(h3_shift, sum_abs({k.h3, rho, beta}), "h3 - beta - rho");

  k.e = 1.0 / k.h4;
  k.f = (d + k.h3 * lam * (n - 1.0) - 2.0 * k.h1 * k.h1 * (n - 1.0) / ((n + 1.0) * den_b)) /
        (lam * (n + 1.0) * k.h4 * h3_shift);

  // c exactly as the nested closed form.
  const double inv_h4_mix = 1.0 / k.h4 - (n - 1.0) / (k.h4 * (n + 1.0));
  const double inner = inv_h4_mix * (d + k.h3 * lam * (n - 1.0)) / (2.0 * lam) -
                       2.0 * k.h1 * k.h1 * (n - 1.0) /
                           (k.h4 * lam * (n + 1.0) * (n + 1.0) * den_b);
  const double outer = inner / (k.h4 * lam * (n + 1.0) * (-beta + k.h3 - rho));
  k.c = 2.0 * (-outer - inv_h4_mix * inv_h4_mix / (4.0 * lam)) / (-2.0 * beta - rho);

  k.a_bar = k.e / ((n + 1.0) * lam);
  k.g = p.sigma * p.sigma / (2.0 * rho) * k.c;

  const double lead = k.e - lam * (n - 1.0) * k.a_bar;
  k.c_check = (k.f * k.a_bar + lead * lead / (4.0 * lam)) / ((rho + 2.0 * beta) / 2.0);
  if (warnings && std::abs(k.c - k.c_check) > 1e-8 * std::abs(k.c)) {
    std::ostringstream msg;
    msg << "c from the nested formula (" << k.c << ") differs from the m^2 equation ("
        << k.c_check << ")";
    warnings->push_back(msg.str());
  }

  if (!(k.a_bar > 0.0))
    throw SolverError(ErrorKind::SignConstraint, "sign constraint violated: a_bar <= 0");
  if (!(k.feedback().m_rate(p.n_agents) > 0.0))
    throw SolverError(ErrorKind::SignConstraint, "sign constraint violated: M_rate <= 0");
  return k;
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

double SystemResiduals::max_relative() const {
  return *std::max_element(relative.begin(), relative.end());
}

SystemResiduals system_residuals(const ValidatedParams& params, const CoefficientSet& k) {
  const ModelParams& p = *params;
  const double n = p.n_agents;
  const double lam = p.lambda, rho = p.rho, beta = p.beta, gamma = p.gamma;
  const double K = (n - 2.0) * k.b_bar - k.c_bar;
  const double ux = k.a + lam * (n - 1.0) * k.b_bar;  // x-weight of the FOC numerator
  const double uy = k.d + lam * (n - 1.0) * K;        // y-weight
  const double um = k.e - lam * (n - 1.0) * k.a_bar;  // m-weight

  const std::array<std::vector<double>, 10> terms = {{
      {rho * k.a / 2.0, -gamma / 2.0, -k.d * k.b_bar, ux * ux / (4.0 * lam)},
      {-rho * k.b / 2.0, k.b * K, uy * uy / (4.0 * lam)},
      {rho * k.d, k.b * k.b_bar, -k.d * K, ux * uy / (2.0 * lam)},
      {-k.g, p.sigma * p.sigma / (2.0 * rho) * k.c},
      {-(rho + 2.0 * beta) / 2.0 * k.c, k.f * k.a_bar, um * um / (4.0 * lam)},
      {-(rho + beta) * k.e, 1.0, -k.d * k.a_bar, k.b_bar * k.f, -um * ux / (2.0 * lam)},
      {k.b * k.a_bar, k.f * K, -(rho + beta) * k.f, -um * uy / (2.0 * lam)},
      {k.a_bar, -um / (2.0 * lam)},
      {(n - 1.0) * k.b_bar, uy / (2.0 * lam)},
      {k.c_bar, -ux / (2.0 * lam)},
  }};

  SystemResiduals r;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    double sum = 0.0, mag = 0.0;
    for (double t : terms[i]) {
      sum += t;
      mag += std::abs(t);
    }
    r.absolute[i] = sum;
    r.relative[i] = mag > 0.0 ? std::abs(sum) / mag : std::abs(sum);
  }

  // Alternate scalar equation for d with the auxiliary root k1.
  const double d = k.d;
  const double nn = n * n;
  const double k1_rad = (-4.0 * d * d * (3.0 * n + 1.0) +
                         4.0 * d * lam * (-3.0 * nn + 2.0 * n + 1.0) * rho +
                         lam * (n - 1.0) *
                             (lam * rho * rho + nn * (8.0 * gamma + lam * rho * rho) +
                              2.0 * lam * n * rho * rho)) /
                        ((n - 1.0) * (n + 1.0) * (n + 1.0));
  if (k1_rad < 0.0) {
    r.expanded_d_absolute = r.expanded_d_relative = std::numeric_limits<double>::infinity();
    return r;
  }
  const double k1 = std::sqrt(k1_rad);
  const double km = k1 - lam * rho;
  const double q = nn - n - 1.0;
  const double t1 = -((n + 1.0) * km + 2.0 * d) * (n + 1.0) * ((n - 1.0) * km - 2.0 * d) /
                    (8.0 * lam * nn * n);
  const double t2 = d * ((nn - 1.0) * km + 2.0 * d * q) / (2.0 * lam * (n - 1.0) * nn);
  const double t3 = d * rho;
  const double t4 = std::pow(n + 1.0, 3) * std::pow((n - 1.0) * km - 2.0 * d, 3) /
                    (32.0 * lam * nn * nn *
                     ((n - 1.0) * ((n + 1.0) * k1 + lam * q * rho) + 2.0 * d * q));
  const double sum = t1 + t2 + t3 + t4;
  const double mag = std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4);
  r.expanded_d_absolute = sum;
  r.expanded_d_relative = mag > 0.0 ? std::abs(sum) / mag : std::abs(sum);
  return r;
}

// ---------------------------------------------------------------------------
// End-to-end
// ---------------------------------------------------------------------------

ClosedLoopSolution closed_loop_policy(const ValidatedParams& params, const SolveOptions& options) {
  ClosedLoopSolution out;
  const DeltaSolution sol = solve_delta(params, options);
  out.coefficients = recover_coefficients(params, sol.delta, &out.report.warnings);
  const SystemResiduals res = system_residuals(params, out.coefficients);

  out.report.delta = sol.delta;
  out.report.residuals = res.relative;
  out.report.expanded_d_residual = res.expanded_d_relative;
  out.report.phi_residual = sol.phi_residual;
  out.report.iterations = sol.iterations;

  if (!(res.max_relative() <= options.residual_tolerance) ||
      !(res.expanded_d_relative <= options.residual_tolerance)) {
    std::ostringstream msg;
    msg << "branch invalid: equilibrium residuals too large (max relative "
        << res.max_relative() << ", expanded d " << res.expanded_d_relative << ")";
    throw SolverError(ErrorKind::BranchInvalid, msg.str());
  }
  out.report.converged = true;

  const CoefficientSet& k = out.coefficients;
  out.policy.kind = EquilibriumKind::ClosedLoop;
  out.policy.m_rate = k.feedback().m_rate(params->n_agents);
  out.policy.m_aim = params->gamma * k.a_bar / out.policy.m_rate;
  return out;
}

}  // namespace clnash
