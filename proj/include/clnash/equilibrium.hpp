#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "clnash/model.hpp"
#include "clnash/policy.hpp"

namespace clnash {

// ---------------------------------------------------------------------------
// Limiting (lambda = 0) problem: the cubic P_N, its Cardano roots and Gamma.
// ---------------------------------------------------------------------------

/// Cubic c3 z^3 + c2 z^2 + c1 z + c0.
struct Cubic {
  double c3 = 0.0, c2 = 0.0, c1 = 0.0, c0 = 0.0;

  double operator()(double z) const { return ((c3 * z + c2) * z + c1) * z + c0; }
  std::complex<double> operator()(std::complex<double> z) const {
    return ((c3 * z + c2) * z + c1) * z + c0;
  }
  double max_abs_coeff() const;
};

/// P_N as a cubic in z = y^2. Coefficients are exact integers for N <= 150.
Cubic p_cubic(int n_agents);

/// All three roots of a cubic by Cardano's formulas, polished by Newton steps.
/// Throws DomainError if the leading coefficient is zero.
std::array<std::complex<double>, 3> cardano_roots(const Cubic& cubic);

/// Upper end of the admissible interval for delta*: sqrt(2) N sqrt((N-1)/(3N+1)).
double admissible_bound(int n_agents);

/// Gamma(N, y) = poly(y) + radical_coeff(y) * radical(y), with
/// radical = sqrt((2N^3 - 2N^2 - (3N+1) y^2) / ((N-1)(N+1)^2)).
struct GammaParts {
  double poly = 0.0;
  double radical_coeff = 0.0;
  double radical = 0.0;
  double value() const { return poly + radical_coeff * radical; }
  /// Magnitude of the two halves; the root filter is relative to this.
  double scale() const;
};

/// Throws DomainError when the radicand is negative.
GammaParts gamma_parts(int n_agents, double y);
double gamma_limit(int n_agents, double y);

struct RootCandidate {
  std::complex<double> z;  // root of P_N in y^2
  double y = 0.0;          // sqrt(Re z), meaningful when real_positive
  bool real_positive = false;
  bool in_bound = false;
  double gamma_value = 0.0;
  double gamma_scale = 0.0;
  bool passes = false;
};

/// The three Cardano candidates with their Gamma-filter verdicts at
/// |Gamma| <= rel_tolerance * scale.
std::vector<RootCandidate> delta_star_candidates(int n_agents, double rel_tolerance = 1e-6);

/// The unique admissible root delta*_N. Tightens the filter by 100x once when
/// ambiguous; throws SolverError(NoAdmissibleRoot) if still not unique.
double delta_star(int n_agents);

// ---------------------------------------------------------------------------
// The scalar equation Phi_N(lambda, y) = 0.
// ---------------------------------------------------------------------------

/// Phi_N / gamma expressed through eps = rho sqrt(lambda / gamma); Phi_N
/// depends on lambda and gamma only through this combination.
double phi_scaled(int n_agents, double y, double eps);
/// d/dy of phi_scaled (forward-mode AD).
double phi_scaled_dy(int n_agents, double y, double eps);
/// Sum of the absolute values of the terms of phi_scaled.
double phi_scaled_magnitude(int n_agents, double y, double eps);

double rescaled_rho(const ModelParams& p);  // eps = rho sqrt(lambda / gamma)

/// Phi_N(lambda, y). Throws DomainError on a negative radicand or zero denominator.
double phi(const ValidatedParams& params, double y);
/// lambda = 0 limit gamma^{3/2} Gamma(N, y) / Xi(N, y).
double phi_limit(int n_agents, double y, double gamma = 1.0);

struct SolveOptions {
  int max_iterations = 200;
  double phi_tolerance = 1e-12;       // relative to phi_scaled_magnitude
  double step_tolerance = 1e-13;      // relative to y
  double residual_tolerance = 1e-8;   // relative residual of the ten equations
};

struct DeltaSolution {
  double delta = 0.0;
  int iterations = 0;
  double phi_residual = 0.0;  // |Phi_N(lambda, delta)|
  double phi_relative = 0.0;  // |Phi_N| relative to its term magnitude
};

/// Safeguarded Newton on Phi_N(lambda, .) seeded at delta*_N.
DeltaSolution solve_delta(const ValidatedParams& params, const SolveOptions& options = {});

// ---------------------------------------------------------------------------
// Coefficients, residuals and the closed-loop policy.
// ---------------------------------------------------------------------------

/// Coefficients of V(x,y,m) = -a/2 x^2 + b/2 y^2 + c/2 m^2 - dxy + exm + fym + g
/// together with the feedback rate coefficients and intermediate constants.
struct CoefficientSet {
  double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0, g = 0;
  double a_bar = 0, b_bar = 0, c_bar = 0;
  double h1 = 0, h2 = 0, h3 = 0, h4 = 0;
  double delta = 0;
  /// c from the rearranged m^2 equation, kept as a cross-check of the nested formula.
  double c_check = 0;

  LinearFeedback feedback() const { return {a_bar, b_bar, c_bar}; }
};

CoefficientSet recover_coefficients(const ValidatedParams& params, double delta,
                                    std::vector<std::string>* warnings = nullptr);

inline constexpr std::array<const char*, 10> kEquationNames = {
    "x2", "y2", "xy", "const", "m2", "xm", "ym", "consistency_a_bar",
    "consistency_b_bar", "consistency_c_bar"};

struct SystemResiduals {
  std::array<double, 10> absolute{};
  std::array<double, 10> relative{};  // absolute / sum of |terms|
  double expanded_d_absolute = 0.0;   // alternate scalar equation for d
  double expanded_d_relative = 0.0;

  double max_relative() const;
};

SystemResiduals system_residuals(const ValidatedParams& params, const CoefficientSet& coeffs);

struct SolveReport {
  double delta = 0.0;
  std::array<double, 10> residuals{};  // relative
  double expanded_d_residual = 0.0;    // relative
  double phi_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

struct ClosedLoopSolution {
  Policy policy;
  CoefficientSet coefficients;
  SolveReport report;
};

/// solve_delta -> recover_coefficients -> policy. Failures surface as
/// SolverError (NoConvergence, BranchInvalid, DenominatorVanished, SignConstraint).
ClosedLoopSolution closed_loop_policy(const ValidatedParams& params,
                                      const SolveOptions& options = {});

}  // namespace clnash
