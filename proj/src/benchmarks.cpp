#include "clnash/benchmarks.hpp"

#include <cmath>

#include "clnash/equilibrium.hpp"

namespace clnash {

namespace {

// Shared shape of the planner and open-loop solutions, which differ only in
// the effective impact (2N lambda vs (N+1) lambda).
struct SingleAgentForm {
  double root;  // sqrt(gamma / impact + rho^2 / 4)
  double impact;
};

SingleAgentForm single_agent_form(const ModelParams& p, double impact) {
  return {std::sqrt(p.gamma / impact + 0.25 * p.rho * p.rho), impact};
}

Policy single_agent_policy(const ModelParams& p, double impact, EquilibriumKind kind) {
  const SingleAgentForm s = single_agent_form(p, impact);
  Policy out;
  out.kind = kind;
  out.m_rate = s.root - 0.5 * p.rho;
  out.m_aim = (s.root + 0.5 * p.rho) / (s.root + 0.5 * p.rho + p.beta);
  return out;
}

double planner_impact(const ModelParams& p) { return 2.0 * p.n_agents * p.lambda; }
double open_loop_impact(const ModelParams& p) { return (p.n_agents + 1.0) * p.lambda; }

}  // namespace

Policy central_planner_policy(const ValidatedParams& params) {
  return single_agent_policy(*params, planner_impact(*params), EquilibriumKind::CentralPlanner);
}

double central_planner_value(const ValidatedParams& params) {
  const ModelParams& p = *params;
  const SingleAgentForm s = single_agent_form(p, planner_impact(p));
  const double tail = 0.5 * p.rho + p.beta + s.root;
  return p.sigma * p.sigma / (2.0 * p.rho) / (s.impact * (p.rho + 2.0 * p.beta)) / (tail * tail);
}

// The aim denominator is read as sqrt(...) + rho/2 + beta (the published
// display has a stray comma there).
Policy open_loop_policy(const ValidatedParams& params) {
  return single_agent_policy(*params, open_loop_impact(*params), EquilibriumKind::OpenLoop);
}

double open_loop_value(const ValidatedParams& params) {
  const ModelParams& p = *params;
  const Policy ol = open_loop_policy(params);
  const double mr = ol.m_rate, ma = ol.m_aim;
  const double ln = p.lambda * p.n_agents;
  const double base = p.rho * (2.0 * p.beta + p.rho);
  const double first = (1.0 + 2.0 * ln * mr * mr * ma / p.gamma) * (mr * ma / p.gamma) *
                       p.sigma * p.sigma / (base * (p.beta + p.rho + mr));
  const double amp = p.sigma * mr * ma / p.gamma;
  const double second = amp * amp / base *
                        (ln + (p.gamma + 2.0 * ln * mr * mr) /
                                  ((p.rho + 2.0 * mr) * (p.beta + p.rho + mr)));
  return first - second;
}

double d_bar(int n_agents, double y) {
  const double n = n_agents;
  double radicand = 2.0 * n * n * n - 2.0 * n * n - (3.0 * n + 1.0) * y * y;
  if (radicand < 0.0 && radicand > -1e-12 * n * n * n) radicand = 0.0;
  if (radicand < 0.0) throw DomainError("D-bar radicand is negative");
  return std::sqrt(radicand / ((n - 1.0) * (n + 1.0) * (n + 1.0)));
}

double delta_of_n(int n_agents) {
  const double n = n_agents;
  const double ds = delta_star(n_agents);
  return ((n + 1.0) * d_bar(n_agents, ds) + (2.0 * n + 1.0) * ds) / (2.0 * n * n);
}

double h4_limit(int n_agents) {
  const double n = n_agents;
  const double y = delta_star(n_agents);
  const double db = d_bar(n_agents, y);
  const double gap = y - db * (n - 1.0);
  const double num = (n + 1.0) * gap * gap *
                     (db * (n + 1.0) * (n * n + 2.0 * n - 3.0) + (3.0 * n * n - 4.0 * n - 3.0) * y);
  const double den_root = db * (n - 1.0) * (n + 1.0) + (n * n - n - 1.0) * y;
  return (db + y) / n - num / (8.0 * n * n * den_root * den_root);
}

double chi(int n_agents, double y) {
  const double n = n_agents;
  const double db = d_bar(n_agents, y);
  const double gap = y - (n - 1.0) * db;
  const double den_root = (n * n - 1.0) * db + (n * n - n - 1.0) * y;
  const double middle = (n + 1.0) *
                        ((n * n * n + 3.0 * n * n - n - 3.0) * db + (3.0 * n * n - 4.0 * n - 3.0) * y) *
                        gap * gap / (8.0 * n * n * den_root * den_root);
  const double last = 2.0 * n * n / ((n + 1.0) * ((n + 1.0) * db + (2.0 * n + 1.0) * y));
  return (db + y) / n - middle - last;
}

AsymptoticPolicy asymptotic_policy(int n_agents, EquilibriumKind kind) {
  if (n_agents < 2) throw DomainError("n_agents must be >= 2");
  AsymptoticPolicy out;
  out.kind = kind;
  switch (kind) {
    case EquilibriumKind::ClosedLoop: out.rate_leading = delta_of_n(n_agents); break;
    case EquilibriumKind::OpenLoop: out.rate_leading = 1.0 / std::sqrt(n_agents + 1.0); break;
    case EquilibriumKind::CentralPlanner: out.rate_leading = 1.0 / std::sqrt(2.0 * n_agents); break;
  }
  return out;
}

ValueBreakdown closed_loop_value_asymptotic(const ValidatedParams& params) {
  const ModelParams& p = *params;
  const double delta = delta_of_n(p.n_agents);
  ValueBreakdown out;
  out.kind = EquilibriumKind::ClosedLoop;
  out.zeroth = frictionless_value(p);
  out.half_order = -p.sigma * p.sigma * (1.0 + 2.0 * delta * delta * p.n_agents) /
                   (4.0 * std::pow(p.gamma, 1.5) * p.rho * delta);
  return out;
}

ValueBreakdown open_loop_value_asymptotic(const ValidatedParams& params) {
  const ModelParams& p = *params;
  const double n = p.n_agents;
  ValueBreakdown out;
  out.kind = EquilibriumKind::OpenLoop;
  out.zeroth = frictionless_value(p);
  out.half_order = -p.sigma * p.sigma * (1.0 + 3.0 * n) /
                   (4.0 * p.rho * std::pow(p.gamma, 1.5) * std::sqrt(1.0 + n));
  return out;
}

ValueBreakdown central_planner_value_asymptotic(const ValidatedParams& params) {
  const ModelParams& p = *params;
  ValueBreakdown out;
  out.kind = EquilibriumKind::CentralPlanner;
  out.zeroth = frictionless_value(p);
  out.half_order = -p.sigma * p.sigma / (2.0 * p.rho) * std::sqrt(2.0 * p.n_agents) /
                   std::pow(p.gamma, 1.5);
  return out;
}

ValueBreakdown value_asymptotic(const ValidatedParams& params, EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::ClosedLoop: return closed_loop_value_asymptotic(params);
    case EquilibriumKind::OpenLoop: return open_loop_value_asymptotic(params);
    case EquilibriumKind::CentralPlanner: break;
  }
  return central_planner_value_asymptotic(params);
}

}  // namespace clnash
