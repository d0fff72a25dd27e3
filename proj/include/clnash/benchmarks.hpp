#pragma once

#include "clnash/model.hpp"
#include "clnash/policy.hpp"

namespace clnash {

/// Leading small-lambda behaviour: M_rate ~ rate_leading * sqrt(gamma / lambda), M_aim -> aim_leading.
struct AsymptoticPolicy {
  double rate_leading = 0.0;
  double aim_leading = 1.0;
  EquilibriumKind kind = EquilibriumKind::ClosedLoop;
};

/// Value ~ zeroth + half_order * sqrt(lambda).
struct ValueBreakdown {
  double zeroth = 0.0;
  double half_order = 0.0;
  EquilibriumKind kind = EquilibriumKind::ClosedLoop;
};

Policy central_planner_policy(const ValidatedParams& params);
double central_planner_value(const ValidatedParams& params);

Policy open_loop_policy(const ValidatedParams& params);
/// Per-agent open-loop equilibrium value for mu_0 = 0.
double open_loop_value(const ValidatedParams& params);

/// D(y) = sqrt((2N^3 - 2N^2 - (3N+1) y^2) / ((N-1)(N+1)^2)). Throws DomainError
/// on a negative radicand.
double d_bar(int n_agents, double y);

/// Closed-loop rate multiplier Delta(N) built from delta*_N.
double delta_of_n(int n_agents);

/// Limit of sqrt(lambda / gamma) * h4 as lambda -> 0.
double h4_limit(int n_agents);

/// chi_N(y); vanishes at y = delta*_N.
double chi(int n_agents, double y);

AsymptoticPolicy asymptotic_policy(int n_agents, EquilibriumKind kind);

ValueBreakdown closed_loop_value_asymptotic(const ValidatedParams& params);
ValueBreakdown open_loop_value_asymptotic(const ValidatedParams& params);
ValueBreakdown central_planner_value_asymptotic(const ValidatedParams& params);
ValueBreakdown value_asymptotic(const ValidatedParams& params, EquilibriumKind kind);

}  // namespace clnash
