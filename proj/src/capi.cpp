#include "clnash.h"

#include <exception>
#include <new>
#include <string>

#include "clnash/benchmarks.hpp"
#include "clnash/equilibrium.hpp"
#include "clnash/simulate.hpp"
#include "clnash/valuation.hpp"

struct clnash_params {
  clnash::ModelConfig config;
  clnash::ValidatedParams effective;
};

struct clnash_solution {
  clnash::ClosedLoopSolution solution;
};

namespace {

thread_local std::string last_error;

clnash_status status_of(clnash::ErrorKind kind) {
  using clnash::ErrorKind;
  switch (kind) {
    case ErrorKind::Domain: return CLNASH_ERR_DOMAIN;
    case ErrorKind::Config: return CLNASH_ERR_CONFIG;
    case ErrorKind::NoConvergence: return CLNASH_ERR_NO_CONVERGENCE;
    case ErrorKind::BranchInvalid: return CLNASH_ERR_BRANCH_INVALID;
    case ErrorKind::DenominatorVanished: return CLNASH_ERR_DENOMINATOR_VANISHED;
    case ErrorKind::SignConstraint: return CLNASH_ERR_SIGN_CONSTRAINT;
    case ErrorKind::NoAdmissibleRoot: return CLNASH_ERR_NO_ADMISSIBLE_ROOT;
  }
  return CLNASH_ERR_INTERNAL;
}

template <class F>
clnash_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return CLNASH_OK;
  } catch (const clnash::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return CLNASH_ERR_INTERNAL;
}

clnash_status invalid(const char* what) {
  last_error = what;
  return CLNASH_ERR_INVALID_ARGUMENT;
}

clnash::EquilibriumKind kind_of(clnash_kind k) {
  switch (k) {
    case CLNASH_OPEN_LOOP: return clnash::EquilibriumKind::OpenLoop;
    case CLNASH_CENTRAL_PLANNER: return clnash::EquilibriumKind::CentralPlanner;
    default: return clnash::EquilibriumKind::ClosedLoop;
  }
}

clnash_kind kind_to_c(clnash::EquilibriumKind k) {
  switch (k) {
    case clnash::EquilibriumKind::OpenLoop: return CLNASH_OPEN_LOOP;
    case clnash::EquilibriumKind::CentralPlanner: return CLNASH_CENTRAL_PLANNER;
    default: return CLNASH_CLOSED_LOOP;
  }
}

bool valid_kind(clnash_kind k) {
  return k == CLNASH_CLOSED_LOOP || k == CLNASH_OPEN_LOOP || k == CLNASH_CENTRAL_PLANNER;
}

clnash_policy policy_to_c(const clnash::Policy& p) { return {p.m_rate, p.m_aim, kind_to_c(p.kind)}; }

clnash::Policy policy_from_c(const clnash_policy& p) { return {p.m_rate, p.m_aim, kind_of(p.kind)}; }

clnash::SimConfig sim_from_c(const clnash_sim_config& c) {
  return {c.dt, c.horizon, c.n_paths, c.seed, c.mu0};
}

clnash_value_estimate estimate_to_c(const clnash::ValueEstimate& v) {
  return {v.mean, v.std_error, v.n_paths};
}

clnash_params* make_params(const clnash::ModelConfig& config) {
  auto validated = clnash::validate(config.params);
  return new clnash_params{config, clnash::apply_scaling(validated, config.scaling)};
}

}  // namespace

extern "C" {

const char* clnash_last_error(void) { return last_error.c_str(); }

const char* clnash_status_string(clnash_status status) {
  switch (status) {
    case CLNASH_OK: return "ok";
    case CLNASH_ERR_DOMAIN: return "domain error";
    case CLNASH_ERR_CONFIG: return "config error";
    case CLNASH_ERR_NO_CONVERGENCE: return "no convergence";
    case CLNASH_ERR_BRANCH_INVALID: return "branch invalid";
    case CLNASH_ERR_DENOMINATOR_VANISHED: return "denominator vanished";
    case CLNASH_ERR_SIGN_CONSTRAINT: return "sign constraint violated";
    case CLNASH_ERR_NO_ADMISSIBLE_ROOT: return "no admissible root";
    case CLNASH_ERR_INVALID_ARGUMENT: return "invalid argument";
    case CLNASH_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* clnash_equation_name(int index) {
  if (index < 0 || index >= CLNASH_EQUATION_COUNT) return nullptr;
  return clnash::kEquationNames[static_cast<std::size_t>(index)];
}

const char* clnash_kind_string(clnash_kind kind) {
  if (!valid_kind(kind)) return "unknown";
  return clnash::to_string(kind_of(kind));
}

clnash_status clnash_params_create(const clnash_model_params* raw, clnash_scaling scaling,
                                   clnash_params** out) {
  if (!raw || !out) return invalid("null argument");
  if (scaling != CLNASH_SCALING_RAW && scaling != CLNASH_SCALING_MEAN_FIELD)
    return invalid("unknown scaling mode");
  return guarded([&] {
    clnash::ModelConfig config;
    config.params = {raw->beta, raw->sigma, raw->sigma_p, raw->rho, raw->gamma, raw->lambda, raw->n_agents};
    config.scaling = scaling == CLNASH_SCALING_MEAN_FIELD ? clnash::ScalingMode::MeanField
                                                          : clnash::ScalingMode::Raw;
    *out = make_params(config);
  });
}

clnash_status clnash_params_load(const char* path, clnash_params** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] { *out = make_params(clnash::load_config(path)); });
}

clnash_status clnash_params_parse(const char* text, clnash_params** out) {
  if (!text || !out) return invalid("null argument");
  return guarded([&] { *out = make_params(clnash::parse_config(text)); });
}

clnash_status clnash_params_get(const clnash_params* params, clnash_model_params* raw,
                                clnash_scaling* scaling) {
  if (!params) return invalid("null params");
  const clnash::ModelParams& p = params->config.params;
  if (raw) *raw = {p.beta, p.sigma, p.sigma_p, p.rho, p.gamma, p.lambda, p.n_agents};
  if (scaling)
    *scaling = params->config.scaling == clnash::ScalingMode::MeanField ? CLNASH_SCALING_MEAN_FIELD
                                                                        : CLNASH_SCALING_RAW;
  last_error.clear();
  return CLNASH_OK;
}

clnash_status clnash_params_effective_lambda(const clnash_params* params, double* out) {
  if (!params || !out) return invalid("null argument");
  *out = params->effective->lambda;
  return CLNASH_OK;
}

void clnash_params_destroy(clnash_params* params) { delete params; }

clnash_solve_options clnash_default_solve_options(void) {
  clnash::SolveOptions o;
  return {o.max_iterations, o.phi_tolerance, o.step_tolerance, o.residual_tolerance};
}

clnash_status clnash_solve(const clnash_params* params, const clnash_solve_options* options,
                           clnash_solution** out) {
  if (!params || !out) return invalid("null argument");
  clnash::SolveOptions opts;
  if (options) {
    if (options->max_iterations < 1) return invalid("max_iterations must be >= 1");
    opts = {options->max_iterations, options->phi_tolerance, options->step_tolerance,
            options->residual_tolerance};
  }
  return guarded([&] {
    *out = new clnash_solution{clnash::closed_loop_policy(params->effective, opts)};
  });
}

clnash_status clnash_solution_policy(const clnash_solution* sol, clnash_policy* out) {
  if (!sol || !out) return invalid("null argument");
  *out = policy_to_c(sol->solution.policy);
  return CLNASH_OK;
}

clnash_status clnash_solution_coefficients(const clnash_solution* sol, clnash_coefficients* out) {
  if (!sol || !out) return invalid("null argument");
  const clnash::CoefficientSet& k = sol->solution.coefficients;
  *out = {k.a, k.b, k.c, k.d, k.e, k.f, k.g, k.a_bar, k.b_bar, k.c_bar,
          k.h1, k.h2, k.h3, k.h4, k.delta};
  return CLNASH_OK;
}

clnash_status clnash_solution_report(const clnash_solution* sol, clnash_report* out) {
  if (!sol || !out) return invalid("null argument");
  const clnash::SolveReport& r = sol->solution.report;
  out->delta = r.delta;
  for (int i = 0; i < CLNASH_EQUATION_COUNT; ++i) out->residuals[i] = r.residuals[static_cast<std::size_t>(i)];
  out->expanded_d_residual = r.expanded_d_residual;
  out->phi_residual = r.phi_residual;
  out->iterations = r.iterations;
  out->converged = r.converged ? 1 : 0;
  out->warning_count = static_cast<int>(r.warnings.size());
  return CLNASH_OK;
}

const char* clnash_solution_warning(const clnash_solution* sol, int index) {
  if (!sol || index < 0 || index >= static_cast<int>(sol->solution.report.warnings.size())) return nullptr;
  return sol->solution.report.warnings[static_cast<std::size_t>(index)].c_str();
}

void clnash_solution_destroy(clnash_solution* sol) { delete sol; }

clnash_status clnash_benchmark_policy(const clnash_params* params, clnash_kind kind,
                                      clnash_policy* out) {
  if (!params || !out) return invalid("null argument");
  if (!valid_kind(kind)) return invalid("unknown equilibrium kind");
  return guarded([&] {
    switch (kind) {
      case CLNASH_OPEN_LOOP: *out = policy_to_c(clnash::open_loop_policy(params->effective)); break;
      case CLNASH_CENTRAL_PLANNER:
        *out = policy_to_c(clnash::central_planner_policy(params->effective));
        break;
      default: *out = policy_to_c(clnash::closed_loop_policy(params->effective).policy); break;
    }
  });
}

clnash_status clnash_benchmark_value(const clnash_params* params, clnash_kind kind, double* out) {
  if (!params || !out) return invalid("null argument");
  if (!valid_kind(kind)) return invalid("unknown equilibrium kind");
  return guarded([&] {
    switch (kind) {
      case CLNASH_OPEN_LOOP: *out = clnash::open_loop_value(params->effective); break;
      case CLNASH_CENTRAL_PLANNER: *out = clnash::central_planner_value(params->effective); break;
      default:
        *out = clnash::closed_form_value(params->effective,
                                         clnash::closed_loop_policy(params->effective).policy);
        break;
    }
  });
}

clnash_status clnash_policy_value(const clnash_params* params, const clnash_policy* policy,
                                  double* out) {
  if (!params || !policy || !out) return invalid("null argument");
  return guarded([&] { *out = clnash::closed_form_value(params->effective, policy_from_c(*policy)); });
}

clnash_status clnash_frictionless_value(const clnash_params* params, double* out) {
  if (!params || !out) return invalid("null argument");
  *out = clnash::frictionless_value(*params->effective);
  return CLNASH_OK;
}

clnash_status clnash_value_asymptotic(const clnash_params* params, clnash_kind kind, double* zeroth,
                                      double* half_order) {
  if (!params || !zeroth || !half_order) return invalid("null argument");
  if (!valid_kind(kind)) return invalid("unknown equilibrium kind");
  return guarded([&] {
    const clnash::ValueBreakdown v = clnash::value_asymptotic(params->effective, kind_of(kind));
    *zeroth = v.zeroth;
    *half_order = v.half_order;
  });
}

clnash_status clnash_rate_leading(int n_agents, clnash_kind kind, double* out) {
  if (!out) return invalid("null argument");
  if (!valid_kind(kind)) return invalid("unknown equilibrium kind");
  return guarded([&] { *out = clnash::asymptotic_policy(n_agents, kind_of(kind)).rate_leading; });
}

clnash_status clnash_delta_star(int n_agents, double* out) {
  if (!out) return invalid("null argument");
  return guarded([&] { *out = clnash::delta_star(n_agents); });
}

clnash_status clnash_delta_of_n(int n_agents, double* out) {
  if (!out) return invalid("null argument");
  return guarded([&] {
    if (n_agents < 2) throw clnash::DomainError("n_agents must be >= 2");
    *out = clnash::delta_of_n(n_agents);
  });
}

clnash_sim_config clnash_default_sim_config(void) {
  clnash::SimConfig c;
  return {c.dt, c.horizon, c.n_paths, c.seed, c.mu0};
}

clnash_status clnash_simulate_value(const clnash_params* params, const clnash_solution* sol,
                                    const clnash_sim_config* config, clnash_value_estimate* out) {
  if (!params || !sol || !config || !out) return invalid("null argument");
  return guarded([&] {
    std::vector<clnash::LinearFeedback> fb(params->effective->n_agents,
                                           sol->solution.coefficients.feedback());
    *out = estimate_to_c(clnash::estimate_value(params->effective, fb, 0, sim_from_c(*config)));
  });
}

clnash_status clnash_simulate_policy_value(const clnash_params* params, const clnash_policy* policy,
                                           const clnash_sim_config* config,
                                           clnash_value_estimate* out) {
  if (!params || !policy || !config || !out) return invalid("null argument");
  return guarded([&] {
    std::vector<clnash::Policy> policies(params->effective->n_agents, policy_from_c(*policy));
    *out = estimate_to_c(clnash::estimate_value(params->effective, policies, 0, sim_from_c(*config)));
  });
}

clnash_status clnash_simulate_deviation(const clnash_params* params, const clnash_solution* sol,
                                        const clnash_sim_config* config, double rate_factor,
                                        double aim_factor, clnash_deviation* out) {
  if (!params || !sol || !config || !out) return invalid("null argument");
  return guarded([&] {
    const auto r = clnash::deviation_experiment(params->effective, sol->solution.coefficients.feedback(),
                                                sim_from_c(*config), {rate_factor, aim_factor});
    *out = {estimate_to_c(r.equilibrium), estimate_to_c(r.deviant), r.mean_gain, r.paired_std_error};
  });
}

}  // extern "C"
