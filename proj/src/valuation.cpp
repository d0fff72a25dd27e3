#include "clnash/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace clnash {

ValueIntegrals value_integrals(const ValidatedParams& params, const Policy& policy) {
  const ModelParams& p = *params;
  if (!(policy.m_rate > 0.0)) throw DomainError("m_rate must be positive");
  const double mr = policy.m_rate;
  const double amp = mr * policy.m_aim / p.gamma;
  const double s2 = p.sigma * p.sigma;
  const double base = p.rho * (2.0 * p.beta + p.rho);
  ValueIntegrals out;
  out.i1 = amp * s2 / (base * (p.beta + p.rho + mr));
  out.i2 = amp * amp * 2.0 * s2 / (base * (p.rho + 2.0 * mr) * (p.beta + p.rho + mr));
  out.i3 = s2 / (2.0 * p.beta * p.rho + p.rho * p.rho);
  return out;
}

double closed_form_value(const ValidatedParams& params, const Policy& policy) {
  const ModelParams& p = *params;
  const ValueIntegrals in = value_integrals(params, policy);
  const double mr = policy.m_rate;
  const double ln = p.lambda * p.n_agents;
  const double amp = mr * policy.m_aim / p.gamma;
  return (1.0 + 2.0 * ln * mr * mr * policy.m_aim / p.gamma) * in.i1 -
         (0.5 * p.gamma + ln * mr * mr) * in.i2 - ln * amp * amp * in.i3;
}

double value_function(const CoefficientSet& k, const State& s) {
  return -0.5 * k.a * s.x * s.x + 0.5 * k.b * s.y * s.y + 0.5 * k.c * s.m * s.m -
         k.d * s.x * s.y + k.e * s.x * s.m + k.f * s.y * s.m + k.g;
}

namespace {

struct HjbPieces {
  double others_rate;  // common trading rate of agents 2..N
  double v_x, v_y, v_m;
};

HjbPieces hjb_pieces(const ModelParams& p, const CoefficientSet& k, const State& s) {
  const double n = p.n_agents;
  HjbPieces h;
  h.others_rate = k.a_bar * s.m + k.b_bar * s.x + ((n - 2.0) * k.b_bar - k.c_bar) * s.y;
  h.v_x = -k.a * s.x - k.d * s.y + k.e * s.m;
  h.v_y = k.b * s.y - k.d * s.x + k.f * s.m;
  h.v_m = k.c * s.m + k.e * s.x + k.f * s.y;
  return h;
}

// Part of the HJB supremum that depends on agent 1's rate u.
double controlled_part(const ModelParams& p, const HjbPieces& h, const State& s, double u) {
  const double n = p.n_agents;
  return s.m * s.x - 0.5 * p.gamma * s.x * s.x -
         p.lambda * u * (u + (n - 1.0) * h.others_rate) + h.v_x * u;
}

}  // namespace

double optimal_rate(const ValidatedParams& params, const CoefficientSet& k, const State& s) {
  const ModelParams& p = *params;
  const HjbPieces h = hjb_pieces(p, k, s);
  return (h.v_x - p.lambda * (p.n_agents - 1.0) * h.others_rate) / (2.0 * p.lambda);
}

HjbCheck hjb_residual(const ValidatedParams& params, const CoefficientSet& k, const State& s,
                      double control_perturbation) {
  const ModelParams& p = *params;
  const HjbPieces h = hjb_pieces(p, k, s);
  const double u = optimal_rate(params, k, s);

  HjbCheck out;
  out.value = value_function(k, s);
  const double best = controlled_part(p, h, s, u);
  const double generator =
      h.v_y * h.others_rate - p.beta * s.m * h.v_m + 0.5 * p.sigma * p.sigma * k.c;
  out.residual = p.rho * out.value - best - generator;
  const double up = controlled_part(p, h, s, u * (1.0 + control_perturbation));
  const double down = controlled_part(p, h, s, u * (1.0 - control_perturbation));
  out.foc_gap = best - std::max(up, down);
  return out;
}

std::vector<State> sample_states(const ValidatedParams& params, const CoefficientSet& k,
                                 int count, std::uint64_t seed) {
  const ModelParams& p = *params;
  const double m_scale = p.sigma / std::sqrt(2.0 * p.beta);
  const double x_scale = k.a_bar * m_scale / k.feedback().m_rate(p.n_agents);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<State> out(std::max(count, 0));
  for (State& s : out) {
    s.x = x_scale * unit(rng);
    s.y = x_scale * unit(rng);
    s.m = m_scale * unit(rng);
  }
  return out;
}

}  // namespace clnash
