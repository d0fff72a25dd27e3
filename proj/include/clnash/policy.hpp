#pragma once

#include "clnash/model.hpp"

namespace clnash {

/// Symmetric linear trading rule: rate = m_rate * (m_aim * mu / gamma - position).
struct Policy {
  double m_rate = 0.0;
  double m_aim = 0.0;
  EquilibriumKind kind = EquilibriumKind::ClosedLoop;
};

/// General feedback form: rate_n = a_bar mu + b_bar sum_{m != n} phi_m - c_bar phi_n.
struct LinearFeedback {
  double a_bar = 0.0;
  double b_bar = 0.0;
  double c_bar = 0.0;

  /// Relative trading speed on a symmetric path: c_bar - (N - 1) b_bar.
  double m_rate(int n_agents) const { return c_bar - (n_agents - 1) * b_bar; }
};

/// Feedback form of a policy that ignores the other agents' positions.
inline LinearFeedback to_feedback(const Policy& policy, double gamma) {
  return {policy.m_rate * policy.m_aim / gamma, 0.0, policy.m_rate};
}

}  // namespace clnash
