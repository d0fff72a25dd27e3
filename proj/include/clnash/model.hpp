#pragma once

#include <string>
#include <string_view>

#include "clnash/errors.hpp"

namespace clnash {

/// Market and preference parameters. Units are per day throughout.
struct ModelParams {
  double beta = 0.0;     // signal mean-reversion rate
  double sigma = 0.0;    // signal volatility
  double sigma_p = 0.0;  // price volatility (only enters through gamma's calibration)
  double rho = 0.0;      // discount rate
  double gamma = 0.0;    // inventory cost
  double lambda = 0.0;   // temporary price impact
  int n_agents = 2;
};

enum class ScalingMode { Raw, MeanField };
enum class EquilibriumKind { ClosedLoop, OpenLoop, CentralPlanner };

const char* to_string(ScalingMode mode) noexcept;
const char* to_string(EquilibriumKind kind) noexcept;
ScalingMode parse_scaling(std::string_view text);

/// ModelParams that passed validate(). Only validate() and apply_scaling()
/// produce instances, so downstream code never re-checks the invariants.
class ValidatedParams {
 public:
  const ModelParams& get() const noexcept { return p_; }
  const ModelParams* operator->() const noexcept { return &p_; }
  const ModelParams& operator*() const noexcept { return p_; }

 private:
  explicit ValidatedParams(const ModelParams& p) : p_(p) {}
  ModelParams p_;

  friend ValidatedParams validate(const ModelParams& params);
  friend ValidatedParams apply_scaling(const ValidatedParams& params, ScalingMode mode);
};

/// Throws DomainError naming the first violated field.
ValidatedParams validate(const ModelParams& params);

/// MeanField replaces lambda by lambda / N. Must be applied to Raw params only.
ValidatedParams apply_scaling(const ValidatedParams& params, ScalingMode mode);

/// Baseline daily calibration; gamma = 2.5e-8 * sigma_p^2.
ModelParams baseline_params(int n_agents = 2);

/// sigma^2 / (2 rho gamma (2 beta + rho)), the common lambda -> 0 limit of all values.
double frictionless_value(const ModelParams& p);

struct ModelConfig {
  ModelParams params;
  ScalingMode scaling = ScalingMode::Raw;
};

/// Flat `key = value` format, `#` comments. Keys: beta, sigma, sigma_p, rho,
/// gamma (or gamma_per_sigma_p_sq), lambda, n_agents, scaling.
/// Throws ConfigError on syntax errors, unknown keys or missing fields and
/// DomainError when the resulting parameters are invalid.
ModelConfig parse_config(std::string_view text);
ModelConfig load_config(const std::string& path);

}  // namespace clnash
