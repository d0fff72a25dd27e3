/* C interface to the closed-loop Nash equilibrium solver. */
#ifndef CLNASH_H
#define CLNASH_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CLNASH_API __declspec(dllexport)
#else
#define CLNASH_API __attribute__((visibility("default")))
#endif

typedef enum {
  CLNASH_OK = 0,
  CLNASH_ERR_DOMAIN = 1,
  CLNASH_ERR_CONFIG = 2,
  CLNASH_ERR_NO_CONVERGENCE = 3,
  CLNASH_ERR_BRANCH_INVALID = 4,
  CLNASH_ERR_DENOMINATOR_VANISHED = 5,
  CLNASH_ERR_SIGN_CONSTRAINT = 6,
  CLNASH_ERR_NO_ADMISSIBLE_ROOT = 7,
  CLNASH_ERR_INVALID_ARGUMENT = 8,
  CLNASH_ERR_INTERNAL = 9
} clnash_status;

typedef enum { CLNASH_SCALING_RAW = 0, CLNASH_SCALING_MEAN_FIELD = 1 } clnash_scaling;

typedef enum {
  CLNASH_CLOSED_LOOP = 0,
  CLNASH_OPEN_LOOP = 1,
  CLNASH_CENTRAL_PLANNER = 2
} clnash_kind;

typedef struct clnash_params clnash_params;      /* validated parameters + scaling */
typedef struct clnash_solution clnash_solution;  /* closed-loop equilibrium */

typedef struct {
  double beta;
  double sigma;
  double sigma_p;
  double rho;
  double gamma;
  double lambda;
  int n_agents;
} clnash_model_params;

typedef struct {
  double m_rate;
  double m_aim;
  clnash_kind kind;
} clnash_policy;

typedef struct {
  double a, b, c, d, e, f, g;
  double a_bar, b_bar, c_bar;
  double h1, h2, h3, h4;
  double delta;
} clnash_coefficients;

#define CLNASH_EQUATION_COUNT 10

typedef struct {
  double delta;
  double residuals[CLNASH_EQUATION_COUNT]; /* relative residuals */
  double expanded_d_residual;
  double phi_residual;
  int iterations;
  int converged;
  int warning_count;
} clnash_report;

typedef struct {
  int max_iterations;
  double phi_tolerance;
  double step_tolerance;
  double residual_tolerance;
} clnash_solve_options;

typedef struct {
  double dt;
  double horizon;
  int64_t n_paths;
  uint64_t seed;
  double mu0;
} clnash_sim_config;

typedef struct {
  double mean;
  double std_error;
  int64_t n_paths;
} clnash_value_estimate;

typedef struct {
  clnash_value_estimate equilibrium;
  clnash_value_estimate deviant;
  double mean_gain;
  double paired_std_error;
} clnash_deviation;

/* Message of the last failed call on this thread ("" if none). */
CLNASH_API const char* clnash_last_error(void);
CLNASH_API const char* clnash_status_string(clnash_status status);
CLNASH_API const char* clnash_equation_name(int index);
CLNASH_API const char* clnash_kind_string(clnash_kind kind);

/* Parameters. The handle keeps the raw values; every computation uses the scaled ones. */
CLNASH_API clnash_status clnash_params_create(const clnash_model_params* raw, clnash_scaling scaling,
                                              clnash_params** out);
CLNASH_API clnash_status clnash_params_load(const char* path, clnash_params** out);
CLNASH_API clnash_status clnash_params_parse(const char* text, clnash_params** out);
CLNASH_API clnash_status clnash_params_get(const clnash_params* params, clnash_model_params* raw,
                                           clnash_scaling* scaling);
/* Lambda after scaling. */
CLNASH_API clnash_status clnash_params_effective_lambda(const clnash_params* params, double* out);
CLNASH_API void clnash_params_destroy(clnash_params* params);

/* Closed-loop equilibrium. `options` may be NULL. */
CLNASH_API clnash_solve_options clnash_default_solve_options(void);
CLNASH_API clnash_status clnash_solve(const clnash_params* params, const clnash_solve_options* options,
                                      clnash_solution** out);
CLNASH_API clnash_status clnash_solution_policy(const clnash_solution* sol, clnash_policy* out);
CLNASH_API clnash_status clnash_solution_coefficients(const clnash_solution* sol,
                                                      clnash_coefficients* out);
CLNASH_API clnash_status clnash_solution_report(const clnash_solution* sol, clnash_report* out);
/* NULL when index is out of range. */
CLNASH_API const char* clnash_solution_warning(const clnash_solution* sol, int index);
CLNASH_API void clnash_solution_destroy(clnash_solution* sol);

/* Open-loop and central-planner closed forms. */
CLNASH_API clnash_status clnash_benchmark_policy(const clnash_params* params, clnash_kind kind,
                                                 clnash_policy* out);
CLNASH_API clnash_status clnash_benchmark_value(const clnash_params* params, clnash_kind kind,
                                                double* out);

/* Per-agent value of a symmetric linear policy (mu_0 = 0). */
CLNASH_API clnash_status clnash_policy_value(const clnash_params* params, const clnash_policy* policy,
                                             double* out);
CLNASH_API clnash_status clnash_frictionless_value(const clnash_params* params, double* out);

/* Small-lambda expansions. */
CLNASH_API clnash_status clnash_value_asymptotic(const clnash_params* params, clnash_kind kind,
                                                 double* zeroth, double* half_order);
CLNASH_API clnash_status clnash_rate_leading(int n_agents, clnash_kind kind, double* out);
CLNASH_API clnash_status clnash_delta_star(int n_agents, double* out);
CLNASH_API clnash_status clnash_delta_of_n(int n_agents, double* out);

/* Monte Carlo. Thread count comes from CLNASH_THREADS. */
CLNASH_API clnash_sim_config clnash_default_sim_config(void);
/* Agent 1's value when all agents follow the closed-loop feedback of `sol`. */
CLNASH_API clnash_status clnash_simulate_value(const clnash_params* params, const clnash_solution* sol,
                                               const clnash_sim_config* config,
                                               clnash_value_estimate* out);
CLNASH_API clnash_status clnash_simulate_policy_value(const clnash_params* params,
                                                      const clnash_policy* policy,
                                                      const clnash_sim_config* config,
                                                      clnash_value_estimate* out);
CLNASH_API clnash_status clnash_simulate_deviation(const clnash_params* params,
                                                   const clnash_solution* sol,
                                                   const clnash_sim_config* config,
                                                   double rate_factor, double aim_factor,
                                                   clnash_deviation* out);

#ifdef __cplusplus
}
#endif

#endif
