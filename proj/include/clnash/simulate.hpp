#pragma once

#include <cstdint>
#include <vector>

#include "clnash/model.hpp"
#include "clnash/policy.hpp"

namespace clnash {

struct SimConfig {
  double dt = 0.25;        // days
  double horizon = 200.0;  // days
  std::int64_t n_paths = 10000;
  std::uint64_t seed = 1;
  double mu0 = 0.0;
};

/// Throws ConfigError unless dt > 0, horizon >= dt, n_paths > 0 and
/// exp(-rho * horizon) <= 0.01.
void validate_sim_config(const ValidatedParams& params, const SimConfig& config);

/// Number of steps covering the horizon.
std::int64_t step_count(const SimConfig& config);

struct ValueEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_paths = 0;
};

struct PathBundle {
  std::vector<double> times;
  std::vector<double> signal;
  std::vector<std::vector<double>> inventories;  // [agent][step]
  std::vector<std::vector<double>> rates;        // [agent][step]
};

/// Exact OU recursion for path `path_index` of the configured seed.
std::vector<double> simulate_signal(const ValidatedParams& params, const SimConfig& config,
                                    std::int64_t path_index = 0);

enum class Integrator {
  Euler,                // phi_{k+1} = phi_k + rate_k dt
  ExactPiecewiseLinear  // exact ODE solution with mu linear between grid points
};

/// Inventories of agents following `feedback[n]` along a fixed signal path,
/// starting from zero positions.
PathBundle simulate_positions(const ValidatedParams& params,
                              const std::vector<LinearFeedback>& feedback,
                              const std::vector<double>& signal, const SimConfig& config,
                              Integrator integrator = Integrator::Euler);
PathBundle simulate_positions(const ValidatedParams& params, const std::vector<Policy>& policies,
                              const std::vector<double>& signal, const SimConfig& config,
                              Integrator integrator = Integrator::Euler);

/// Monte Carlo value of agent `agent_index`: discounted trapezoid of the running
/// reward along the exact Gaussian transition of (mu, phi^1..phi^N).
ValueEstimate estimate_value(const ValidatedParams& params,
                             const std::vector<LinearFeedback>& feedback, int agent_index,
                             const SimConfig& config);
ValueEstimate estimate_value(const ValidatedParams& params, const std::vector<Policy>& policies,
                             int agent_index, const SimConfig& config);

/// Agent 1 deviates: on a symmetric path its rate becomes rate_factor * M_rate
/// and its aim aim_factor * M_aim.
struct Perturbation {
  double rate_factor = 1.0;
  double aim_factor = 1.0;
};

LinearFeedback perturb(const LinearFeedback& feedback, const Perturbation& perturbation);

struct DeviationResult {
  ValueEstimate equilibrium;
  ValueEstimate deviant;
  double mean_gain = 0.0;  // deviant - equilibrium, path by path
  double paired_std_error = 0.0;
};

/// Same-seed comparison of agent 1's value with and without the deviation;
/// the other agents keep reacting to agent 1's actual inventory.
DeviationResult deviation_experiment(const ValidatedParams& params,
                                     const LinearFeedback& equilibrium_feedback,
                                     const SimConfig& config, const Perturbation& perturbation);

/// Several deviations against one shared equilibrium run; results in input order.
std::vector<DeviationResult> deviation_experiments(const ValidatedParams& params,
                                                   const LinearFeedback& equilibrium_feedback,
                                                   const SimConfig& config,
                                                   const std::vector<Perturbation>& perturbations);

/// Worker threads for Monte Carlo: CLNASH_THREADS if set, else hardware concurrency.
int worker_threads();

}  // namespace clnash
