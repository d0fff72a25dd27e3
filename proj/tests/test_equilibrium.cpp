#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "clnash/equilibrium.hpp"
#include "clnash/root_finding.hpp"

using namespace clnash;

namespace {

ValidatedParams baseline(int n, ScalingMode mode = ScalingMode::Raw) {
  return apply_scaling(validate(baseline_params(n)), mode);
}

double p_value_exact(int n, double z) { return p_cubic(n)(z); }

}  // namespace

TEST_CASE("P_N at the ends of the admissible interval") {
  CHECK(p_value_exact(2, 0.0) == -49.0);
  CHECK(p_value_exact(2, 8.0 / 7.0) == doctest::Approx(841.0 / 343.0).epsilon(1e-13));
  for (int n = 2; n <= 50; ++n) {
    const double nn = n;
    CHECK(p_cubic(n).c0 == -std::pow(nn - 1.0, 6) * std::pow(3.0 * nn + 1.0, 2));
    const double zmax = 2.0 * nn * nn * (nn - 1.0) / (3.0 * nn + 1.0);
    CHECK(p_value_exact(n, 0.0) < 0.0);
    CHECK(p_value_exact(n, zmax) > 0.0);
  }
}

TEST_CASE("cardano on a constructed factorization") {
  Cubic c{1.0, -6.0, 11.0, -6.0};
  auto r = cardano_roots(c);
  CHECK(r[0].real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r[1].real() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r[2].real() == doctest::Approx(3.0).epsilon(1e-14));
  for (auto z : r) CHECK(z.imag() == 0.0);
}

TEST_CASE("cardano complex pair") {
  Cubic c{1.0, 0.0, 1.0, 1.0};
  auto r = cardano_roots(c);
  int real_count = 0;
  for (auto z : r) {
    CHECK(std::abs(c(z)) <= 1e-12);
    if (z.imag() == 0.0) ++real_count;
  }
  CHECK(real_count == 1);
  // The non-real roots are conjugate.
  std::vector<std::complex<double>> cx;
  for (auto z : r)
    if (z.imag() != 0.0) cx.push_back(z);
  REQUIRE(cx.size() == 2);
  CHECK(cx[0].real() == doctest::Approx(cx[1].real()));
  CHECK(cx[0].imag() == doctest::Approx(-cx[1].imag()));
}

TEST_CASE("cardano rejects degenerate input") {
  CHECK_THROWS_AS(cardano_roots(Cubic{0.0, 1.0, 2.0, 3.0}), DomainError);
}

TEST_CASE("cardano residual for every P_N") {
  for (int n = 2; n <= 150; ++n) {
    const Cubic c = p_cubic(n);
    for (auto z : cardano_roots(c)) CHECK(std::abs(c(z)) <= 1e-9 * c.max_abs_coeff());
  }
}

TEST_CASE("P_2 roots in (0, 8/7) match bisection; only one survives the Gamma filter") {
  // P_2 has three real roots in the interval; the filter, not the interval, selects delta*.
  const Cubic c = p_cubic(2);
  std::vector<double> oracle;
  const int grid = 4000;
  for (int i = 0; i < grid; ++i) {
    const double lo = (8.0 / 7.0) * i / grid, hi = (8.0 / 7.0) * (i + 1) / grid;
    if ((c(lo) > 0.0) != (c(hi) > 0.0))
      oracle.push_back(*bisect([&](double z) { return c(z); }, lo, hi, 1e-16));
  }
  std::vector<double> cardano;
  for (auto z : cardano_roots(c))
    if (std::abs(z.imag()) < 1e-12 && z.real() > 0.0 && z.real() < 8.0 / 7.0) cardano.push_back(z.real());
  std::sort(cardano.begin(), cardano.end());
  REQUIRE(cardano.size() == oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(cardano[i] == doctest::Approx(oracle[i]).epsilon(1e-12));

  auto cands = delta_star_candidates(2);
  CHECK(std::count_if(cands.begin(), cands.end(), [](const RootCandidate& r) { return r.passes; }) == 1);
}

TEST_CASE("Gamma vanishes at delta* and rejects out-of-domain y") {
  for (int n = 2; n <= 50; ++n) {
    const double ds = delta_star(n);
    GammaParts g = gamma_parts(n, ds);
    CHECK(std::abs(g.value()) <= 1e-9 * g.scale());
  }
  CHECK(std::abs(gamma_limit(2, delta_star(2))) <= 1e-9 * gamma_parts(2, delta_star(2)).scale());
  CHECK_THROWS_AS(gamma_limit(2, admissible_bound(2) * (1.0 + 1e-6)), DomainError);
}

TEST_CASE("squaring identity A^2 - B^2 S^2 = 2 N^6 P_N(y^2)") {
  for (int n : {2, 3, 5, 10, 25, 50}) {
    const double bound = admissible_bound(n);
    for (int i = 1; i <= 40; ++i) {
      const double y = bound * i / 40.0;
      GammaParts g = gamma_parts(n, y);
      const double lhs = g.poly * g.poly - std::pow(g.radical_coeff * g.radical, 2);
      const double rhs = 2.0 * std::pow(n, 6) * p_cubic(n)(y * y);
      const double scale = g.poly * g.poly + std::pow(g.radical_coeff * g.radical, 2);
      CHECK(std::abs(lhs - rhs) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("delta* candidates and bisection oracle") {
  for (int n = 2; n <= 50; ++n) {
    auto cands = delta_star_candidates(n);
    CHECK(std::count_if(cands.begin(), cands.end(), [](const RootCandidate& c) { return c.passes; }) == 1);
    const double ds = delta_star(n);
    CHECK(ds > 0.0);
    CHECK(ds <= admissible_bound(n));
  }
  CHECK(admissible_bound(2) == doctest::Approx(2.0 * std::sqrt(2.0 / 7.0)));

  const double bound = admissible_bound(2);
  auto oracle = bisect([](double y) { return gamma_limit(2, y); }, 1e-12, bound, 1e-15);
  REQUIRE(oracle);
  CHECK(std::abs(delta_star(2) - *oracle) <= 1e-10);
}

TEST_CASE("delta* is not always the smallest positive candidate") {
  // For N = 5 the admissible root is the middle one; a naive smallest-root rule would fail.
  auto cands = delta_star_candidates(5);
  std::vector<double> ys;
  for (auto& c : cands)
    if (c.real_positive && c.in_bound) ys.push_back(c.y);
  std::sort(ys.begin(), ys.end());
  REQUIRE(ys.size() >= 2);
  CHECK(delta_star(5) != ys.front());
}

TEST_CASE("lambda = 0 limit of Phi") {
  for (int n = 2; n <= 10; ++n) CHECK(std::abs(phi_limit(n, delta_star(n))) <= 1e-9);
  // The limit formula and the rescaled Phi at eps = 0 are separate expressions.
  for (int n : {2, 3, 7, 20}) {
    for (double frac : {0.2, 0.5, 0.9}) {
      const double y = frac * admissible_bound(n);
      const double a = phi_limit(n, y);
      const double b = phi_scaled(n, y, 0.0);
      CHECK(a == doctest::Approx(b).epsilon(1e-9));
    }
  }
}

TEST_CASE("d/dy Phi at (0, delta*) is positive") {
  for (int n = 2; n <= 50; ++n) {
    const double y = delta_star(n);
    const double h = 1e-6 * y;
    const double fd = (phi_limit(n, y + h) - phi_limit(n, y - h)) / (2.0 * h);
    CHECK(fd > 0.0);
    CHECK(phi_scaled_dy(n, y, 0.0) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("forward-mode derivative matches finite differences") {
  for (int n : {2, 4, 9}) {
    for (double eps : {0.0, 1e-3, 0.5}) {
      const double y = 0.7 * delta_star(n);
      const double h = 1e-6;
      const double fd = (phi_scaled(n, y + h, eps) - phi_scaled(n, y - h, eps)) / (2.0 * h);
      CHECK(phi_scaled_dy(n, y, eps) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("Phi depends on lambda and gamma only through rho sqrt(lambda/gamma)") {
  ModelParams p = baseline_params(3);
  ModelParams q = p;
  q.gamma *= 4.0;
  q.lambda *= 4.0;
  const double y = 0.5;
  CHECK(phi(validate(p), y) / p.gamma == doctest::Approx(phi(validate(q), y) / q.gamma).epsilon(1e-13));
}

TEST_CASE("solve_delta at the baseline") {
  auto p = baseline(2);
  auto s = solve_delta(p);
  CHECK(s.phi_residual <= 1e-10);
  CHECK(s.phi_relative <= 1e-12);
  CHECK(s.delta > 0.0);
  CHECK(s.delta <= admissible_bound(2));
  CHECK(std::abs(phi(p, s.delta)) <= 1e-10);
  // Determinism.
  auto again = solve_delta(p);
  CHECK(again.delta == s.delta);
}

TEST_CASE("delta(lambda) - delta* shrinks like sqrt(lambda)") {
  ModelParams base = baseline_params(3);
  const double ds = delta_star(3);
  double prev = 0.0;
  for (double scale : {1e-6, 1e-8, 1e-10, 1e-12}) {
    ModelParams q = base;
    q.lambda = scale * q.gamma;
    const double gap = std::abs(solve_delta(validate(q)).delta - ds);
    if (prev > 0.0) {
      // Two decades of lambda per step: a factor 10 for sqrt(lambda), 100 for lambda.
      CHECK(prev / gap == doctest::Approx(10.0).epsilon(0.05));
    }
    prev = gap;
  }
}

TEST_CASE("solver failures are typed") {
  SolveOptions o;
  o.max_iterations = 1;
  try {
    solve_delta(baseline(2), o);
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.kind() == ErrorKind::NoConvergence);
    CHECK(e.is_solver_failure());
    CHECK(std::string(e.what()).find("no convergence") != std::string::npos);
  }
  CHECK_THROWS_AS(recover_coefficients(baseline(2), -0.5), SolverError);
  try {
    recover_coefficients(baseline(2), 10.0 * admissible_bound(2));
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.kind() == ErrorKind::BranchInvalid);
  }
}

TEST_CASE("huge lambda never yields a silent wrong answer") {
  for (double scale : {1e3, 1e6}) {
    ModelParams q = baseline_params(2);
    q.lambda = scale * q.gamma;
    auto p = validate(q);
    try {
      auto s = closed_loop_policy(p);
      // If the branch continues, the answer must still satisfy the full system.
      auto r = system_residuals(p, s.coefficients);
      CHECK(r.max_relative() <= 1e-8);
      CHECK(r.expanded_d_relative <= 1e-8);
      CHECK(s.coefficients.a_bar > 0.0);
      CHECK(s.policy.m_rate > 0.0);
      CHECK(s.coefficients.e > 0.0);
    } catch (const Error& e) {
      CHECK(e.is_solver_failure());
    }
  }
}

TEST_CASE("recovered coefficients: identities and signs") {
  for (int n = 2; n <= 10; ++n) {
    auto p = baseline(n);
    const double delta = solve_delta(p).delta;
    std::vector<std::string> warnings;
    CoefficientSet k = recover_coefficients(p, delta, &warnings);
    CHECK(warnings.empty());
    CHECK(k.g / k.c == doctest::Approx(p->sigma * p->sigma / (2.0 * p->rho)).epsilon(1e-15));
    CHECK(k.e * k.h4 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(k.d == std::sqrt(p->gamma * p->lambda) * delta);
    CHECK(k.e > 0.0);
    CHECK(k.a_bar > 0.0);
    CHECK(k.a > 0.0);
    CHECK(k.d > 0.0);
    CHECK(k.feedback().m_rate(n) > 0.0);
    CHECK(k.c == doctest::Approx(k.c_check).epsilon(1e-10));
  }
}

TEST_CASE("system residuals") {
  for (auto mode : {ScalingMode::Raw, ScalingMode::MeanField}) {
    for (int n = 2; n <= 10; ++n) {
      auto p = baseline(n, mode);
      auto s = closed_loop_policy(p);
      auto r = system_residuals(p, s.coefficients);
      CHECK(r.max_relative() <= 1e-8);
      CHECK(r.expanded_d_relative <= 1e-8);
      CHECK(s.report.converged);
    }
  }
}

TEST_CASE("perturbing d only breaks the d equation") {
  auto p = baseline(2);
  const double delta = solve_delta(p).delta;
  CoefficientSet k = recover_coefficients(p, delta * 1.01);
  auto r = system_residuals(p, k);
  const auto worst = std::max_element(r.relative.begin(), r.relative.end()) - r.relative.begin();
  CHECK(std::string(kEquationNames[worst]) == "xy");
  CHECK(r.relative[2] > 1e-6);
  CHECK(r.expanded_d_relative > 1e-6);
}

TEST_CASE("zero coefficients give -gamma/2 in the x^2 equation") {
  auto p = baseline(2);
  CoefficientSet zero;
  auto r = system_residuals(p, zero);
  CHECK(r.absolute[0] == -p->gamma / 2.0);
}

TEST_CASE("closed-loop policy properties at the baseline") {
  for (int n = 2; n <= 20; ++n) {
    auto s = closed_loop_policy(baseline(n));
    CHECK(s.policy.m_aim < 0.7);
    CHECK(s.policy.m_aim > 0.0);
    CHECK(s.policy.m_rate > 0.0);
    CHECK(s.policy.kind == EquilibriumKind::ClosedLoop);
  }
  // Neither policy constant depends on sigma.
  ModelParams q = baseline_params(3);
  auto s1 = closed_loop_policy(validate(q));
  q.sigma *= 10.0;
  auto s2 = closed_loop_policy(validate(q));
  CHECK(std::abs(s1.policy.m_rate - s2.policy.m_rate) <= 1e-12 * s1.policy.m_rate);
  CHECK(std::abs(s1.policy.m_aim - s2.policy.m_aim) <= 1e-12 * s1.policy.m_aim);
}
