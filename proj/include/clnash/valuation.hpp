#pragma once

#include <cstdint>
#include <vector>

#include "clnash/equilibrium.hpp"
#include "clnash/model.hpp"
#include "clnash/policy.hpp"

namespace clnash {

/// Agent 1's inventory x, the common inventory y of the other agents, signal m.
struct State {
  double x = 0.0;
  double y = 0.0;
  double m = 0.0;
};

/// Discounted expectations along a symmetric linear policy started at mu_0 = 0:
/// I1 = E int e^{-rho t} mu phi, I2 = E int e^{-rho t} phi^2, I3 = E int e^{-rho t} mu^2.
struct ValueIntegrals {
  double i1 = 0.0;
  double i2 = 0.0;
  double i3 = 0.0;
};

ValueIntegrals value_integrals(const ValidatedParams& params, const Policy& policy);

/// Per-agent value when every agent follows `policy` (mu_0 = 0). Requires m_rate > 0.
double closed_form_value(const ValidatedParams& params, const Policy& policy);

/// V(x, y, m) for the quadratic ansatz.
double value_function(const CoefficientSet& k, const State& s);

/// Agent 1's optimal rate at `s` when the others follow the equilibrium feedback.
double optimal_rate(const ValidatedParams& params, const CoefficientSet& k, const State& s);

struct HjbCheck {
  double residual = 0.0;  // rho V - sup_u (reward + generator) at the maximizer
  double foc_gap = 0.0;   // objective at u* minus the larger of the values at u*(1 +/- perturbation)
  double value = 0.0;
};

HjbCheck hjb_residual(const ValidatedParams& params, const CoefficientSet& k, const State& s,
                      double control_perturbation = 0.1);

/// Uniform draws from a box sized by the stationary signal deviation and the
/// matching aim-portfolio inventory scale.
std::vector<State> sample_states(const ValidatedParams& params, const CoefficientSet& k,
                                 int count, std::uint64_t seed);

}  // namespace clnash
