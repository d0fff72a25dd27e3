// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "clnash/benchmarks.hpp"
#include "clnash/equilibrium.hpp"
#include "clnash/errors.hpp"
#include "clnash/simulate.hpp"
#include "clnash/valuation.hpp"
#include "quadrature_oracle.hpp"

using namespace clnash;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

ValidatedParams baseline(int n, ScalingMode mode) { return apply_scaling(validate(baseline_params(n)), mode); }

Outcome residuals() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0, worst_d = 0.0;
  for (ScalingMode mode : {ScalingMode::Raw, ScalingMode::MeanField})
    for (int n = 2; n <= 10; ++n) {
      const SolveReport r = closed_loop_policy(baseline(n, mode)).report;
      worst = std::max(worst, *std::max_element(r.residuals.begin(), r.residuals.end()));
      worst_d = std::max(worst_d, r.expanded_d_residual);
    }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(worst < 1e-8, fmt("system residual %.2e", worst));
  o.require(worst_d < 1e-8, fmt("expanded d residual %.2e", worst_d));
  o.require(secs < 1.0, fmt("runtime %.2f s", secs));
  if (o.pass) o.detail = fmt("max residual %.1e, expanded d %.1e, %.3f s", worst, worst_d, secs);
  return o;
}

Outcome cubic() {
  Outcome o;
  double worst_p0 = 0.0, min_slope = std::numeric_limits<double>::infinity();
  for (int n = 2; n <= 50; ++n) {
    const double ds = delta_star(n);
    o.require(ds > 0.0 && ds <= admissible_bound(n), fmt("N=%g delta* outside the interval", n));
    const auto cands = delta_star_candidates(n);
    const auto passing = std::count_if(cands.begin(), cands.end(), [](const RootCandidate& c) { return c.passes; });
    o.require(passing == 1, fmt("N=%g: %g candidates pass", n, static_cast<double>(passing)));
    const double expected = -std::pow(n - 1.0, 6) * std::pow(3.0 * n + 1.0, 2);
    const double rel = std::abs(p_cubic(n)(0.0) - expected) / std::abs(expected);
    worst_p0 = std::max(worst_p0, rel);
    o.require(rel <= 4.0 * std::numeric_limits<double>::epsilon(), fmt("N=%g: P_N(0) off by %.2e", n, rel));
    const double h = 1e-6 * ds;
    const double slope = (phi_scaled(n, ds + h, 0.0) - phi_scaled(n, ds - h, 0.0)) / (2.0 * h);
    min_slope = std::min(min_slope, slope);
    o.require(slope > 0.0, fmt("N=%g: dPhi/dy = %.3e", n, slope));
  }
  if (o.pass) o.detail = fmt("P_N(0) rel error %.1e, min dPhi/dy %.3e", worst_p0, min_slope);
  return o;
}

Outcome limit_identities() {
  Outcome o;
  double worst_h = 0.0, worst_chi = 0.0;
  for (int n = 2; n <= 50; ++n) {
    worst_h = std::max(worst_h, std::abs(h4_limit(n) * (n + 1) * delta_of_n(n) - 1.0));
    worst_chi = std::max(worst_chi, std::abs(chi(n, delta_star(n))));
  }
  o.require(worst_h <= 1e-12, fmt("h4 identity off by %.2e", worst_h));
  o.require(worst_chi <= 1e-8, fmt("|chi| = %.2e", worst_chi));
  if (o.pass) o.detail = fmt("h4 identity %.1e, max |chi| %.1e", worst_h, worst_chi);
  return o;
}

Outcome orderings() {
  Outcome o;
  for (int n = 2; n <= 100; ++n) {
    auto p = baseline(n, ScalingMode::MeanField);
    const Policy cl = closed_loop_policy(p).policy, ol = open_loop_policy(p), cp = central_planner_policy(p);
    o.require(cp.m_rate <= cl.m_rate && cl.m_rate <= ol.m_rate, fmt("N=%g: rate ordering", n));
    o.require(cp.m_aim <= cl.m_aim && cl.m_aim <= ol.m_aim, fmt("N=%g: aim ordering", n));
    const double jcl = closed_form_value(p, cl);
    o.require(open_loop_value(p) <= jcl && jcl <= central_planner_value(p), fmt("N=%g: value ordering", n));
    const double m = delta_of_n(n) * std::sqrt(n);
    o.require(1.0 / std::sqrt(2.0) <= m && m <= std::sqrt(n / (n + 1.0)), fmt("N=%g: Delta sqrt(N) = %.6f", n, m));
  }
  if (o.pass) o.detail = "rates, aims, values and Delta(N) sqrt(N) ordered for N = 2..100";
  return o;
}

Outcome asymptotic_rates() {
  Outcome o;
  const int n = 5;
  const double lo = std::sqrt(10.0) / 2.0, hi = 2.0 * std::sqrt(10.0);
  std::string summary;
  for (EquilibriumKind kind : {EquilibriumKind::ClosedLoop, EquilibriumKind::OpenLoop, EquilibriumKind::CentralPlanner}) {
    const double lead = asymptotic_policy(n, kind).rate_leading;
    std::vector<double> gaps;
    for (int k = 1; k <= 5; ++k) {
      ModelParams q = baseline_params(n);
      q.lambda *= std::pow(10.0, -k);
      auto p = validate(q);
      const Policy pol = kind == EquilibriumKind::ClosedLoop ? closed_loop_policy(p).policy
                         : kind == EquilibriumKind::OpenLoop ? open_loop_policy(p)
                                                             : central_planner_policy(p);
      gaps.push_back(std::abs(std::sqrt(q.lambda / q.gamma) * pol.m_rate - lead));
    }
    double rmin = hi, rmax = lo;
    for (std::size_t i = 0; i + 1 < gaps.size(); ++i) {
      const double r = gaps[i] / gaps[i + 1];
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
    o.require(rmin >= lo && rmax <= hi, std::string(to_string(kind)) + fmt(": decade ratios %.3f..%.3f", rmin, rmax));
    o.require(gaps.back() <= 0.01 * lead, std::string(to_string(kind)) + fmt(": tail gap %.2e", gaps.back() / lead));
    summary += std::string(summary.empty() ? "" : ", ") + to_string(kind) + fmt(" ratios %.3f..%.3f", rmin, rmax);
  }
  if (o.pass) o.detail = summary;
  return o;
}

Outcome rate_gap_and_aim() {
  Outcome o;
  double worst_gap = 0.0, max_aim = 0.0;
  for (int n = 2; n <= 20; ++n) {
    auto p = baseline(n, ScalingMode::MeanField);
    const ModelParams raw = baseline_params(n);
    const Policy cl = closed_loop_policy(p).policy;
    const double exact = std::sqrt(raw.lambda / raw.gamma) * cl.m_rate;
    const double lead = delta_of_n(n) * std::sqrt(n);
    worst_gap = std::max(worst_gap, std::abs(exact - lead) / lead);
    max_aim = std::max(max_aim, cl.m_aim);
  }
  o.require(worst_gap <= 0.01, fmt("rate gap %.2e", worst_gap));
  o.require(max_aim < 0.7, fmt("M_aim reaches %.4f", max_aim));
  if (o.pass) o.detail = fmt("max relative rate gap %.2e, max M_aim %.4f", worst_gap, max_aim);
  return o;
}

Outcome value_formulas() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> n_dist(2, 50);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    ModelParams q = baseline_params(n_dist(rng));
    for (double* v : {&q.beta, &q.sigma, &q.rho, &q.gamma, &q.lambda}) *v *= std::pow(10.0, u(rng));
    auto p = validate(q);
    const double display = open_loop_value(p);
    worst = std::max(worst, std::abs(closed_form_value(p, open_loop_policy(p)) - display) / std::abs(display));
  }
  o.require(worst <= 1e-10, fmt("open-loop value mismatch %.2e", worst));

  auto p = validate(baseline_params(2));
  const Policy pol = closed_loop_policy(p).policy;
  const ValueIntegrals exact = value_integrals(p, pol);
  const ValueIntegrals quad = testing::quadrature_integrals(*p, pol);
  const double e1 = std::abs(quad.i1 / exact.i1 - 1.0), e2 = std::abs(quad.i2 / exact.i2 - 1.0);
  o.require(e1 <= 1e-6 && e2 <= 1e-6, fmt("quadrature I1 %.2e, I2 %.2e", e1, e2));
  if (o.pass) o.detail = fmt("open-loop %.1e, quadrature I1 %.1e, I2 %.1e", worst, e1, e2);
  return o;
}

Outcome hjb() {
  Outcome o;
  double worst = 0.0, min_gap = std::numeric_limits<double>::infinity();
  for (int n : {2, 5}) {
    auto p = validate(baseline_params(n));
    const CoefficientSet k = closed_loop_policy(p).coefficients;
    for (const State& s : sample_states(p, k, 100, 2024 + n)) {
      const HjbCheck h = hjb_residual(p, k, s);
      worst = std::max(worst, std::abs(h.residual) / (1.0 + std::abs(h.value)));
      min_gap = std::min(min_gap, h.foc_gap);
    }
  }
  o.require(worst <= 1e-8, fmt("scaled residual %.2e", worst));
  o.require(min_gap >= 0.0, fmt("foc gap %.2e", min_gap));
  if (o.pass) o.detail = fmt("max scaled residual %.1e, min foc gap %.3e", worst, min_gap);
  return o;
}

Outcome monte_carlo() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  auto p = validate(ModelParams{0.1, 0.01, 0.0, 0.05, 1e-4, 1e-6, 3});
  const ClosedLoopSolution sol = closed_loop_policy(p);
  SimConfig cfg;  // dt 0.25, horizon 200, 10^4 paths
  const double exact = closed_form_value(p, sol.policy);
  const std::vector<Perturbation> moves{{0.8, 1.0}, {1.2, 1.0}, {1.0, 0.8}, {1.0, 1.2}};
  const auto results = deviation_experiments(p, sol.coefficients.feedback(), cfg, moves);
  const ValueEstimate eq = results.front().equilibrium;
  const double z = (eq.mean - exact) / eq.std_error;
  o.require(std::abs(z) <= 3.0, fmt("MC %.6g vs %.6g (z = %.2f)", eq.mean, exact, z));
  double worst_t = -std::numeric_limits<double>::infinity();
  for (const auto& r : results) {
    const double t = r.mean_gain / r.paired_std_error;
    worst_t = std::max(worst_t, t);
    o.require(r.mean_gain <= 3.0 * r.paired_std_error, fmt("deviation gain %.3e (t = %.2f)", r.mean_gain, t));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(secs < 30.0, fmt("runtime %.1f s", secs));
  if (o.pass) o.detail = fmt("z = %.2f, largest deviation t = %.1f, %.1f s", z, worst_t, secs);
  return o;
}

Outcome mean_field_trend() {
  Outcome o;
  double min_ratio = std::numeric_limits<double>::infinity(), r10 = 0.0, r1000 = 0.0;
  for (int n = 2; n <= 1000; ++n) {
    auto p = baseline(n, ScalingMode::MeanField);
    const double ratio = closed_form_value(p, closed_loop_policy(p).policy) / open_loop_value(p);
    min_ratio = std::min(min_ratio, ratio);
    if (n == 10) r10 = ratio;
    if (n == 1000) r1000 = ratio;
  }
  o.require(min_ratio >= 1.0, fmt("ratio drops to %.6f", min_ratio));
  o.require(r1000 - 1.0 < r10 - 1.0, fmt("ratio at N=10 %.6f, at N=1000 %.6f", r10, r1000));
  if (o.pass) o.detail = fmt("min ratio %.6f, N=10 %.6f, N=1000 %.6f", min_ratio, r10, r1000);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"system residuals", residuals},
      {"cubic and Gamma consistency", cubic},
      {"h4 and chi identities", limit_identities},
      {"mean-field orderings", orderings},
      {"asymptotic rates", asymptotic_rates},
      {"rate gap and aim bound", rate_gap_and_aim},
      {"value formula cross-check", value_formulas},
      {"HJB residual", hjb},
      {"Monte Carlo and deviations", monte_carlo},
      {"mean-field value ratio", mean_field_trend},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %-28s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
