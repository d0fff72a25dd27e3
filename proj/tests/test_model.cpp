#include "doctest.h"

#include <cmath>

#include "clnash/model.hpp"

using namespace clnash;

TEST_CASE("baseline parameters validate") {
  ModelParams p = baseline_params();
  CHECK(p.gamma == doctest::Approx(2.5e-8 * 0.0088 * 0.0088));
  auto v = validate(p);
  CHECK(v->n_agents == 2);
  CHECK(v->lambda == 1.88e-10);
}

TEST_CASE("validate names the first violated field") {
  ModelParams p = baseline_params();
  p.gamma = 0.0;
  CHECK_THROWS_WITH_AS(validate(p), "gamma must be positive", DomainError);

  p = baseline_params();
  p.n_agents = 1;
  CHECK_THROWS_WITH_AS(validate(p), "n_agents must be >= 2", DomainError);

  p = baseline_params();
  p.sigma_p = -1.0;
  CHECK_THROWS_AS(validate(p), DomainError);

  p = baseline_params();
  p.lambda = std::nan("");
  CHECK_THROWS_AS(validate(p), DomainError);
}

TEST_CASE("mean-field scaling divides lambda by N") {
  auto v = validate(baseline_params(2));
  auto mf = apply_scaling(v, ScalingMode::MeanField);
  CHECK(mf->lambda == doctest::Approx(9.4e-11).epsilon(1e-14));
  auto raw = apply_scaling(v, ScalingMode::Raw);
  CHECK(raw->lambda == v->lambda);
  CHECK(raw->gamma == v->gamma);
}

TEST_CASE("scaling names round-trip") {
  CHECK(parse_scaling("raw") == ScalingMode::Raw);
  CHECK(parse_scaling("mean_field") == ScalingMode::MeanField);
  CHECK(parse_scaling("MeanField") == ScalingMode::MeanField);
  CHECK_THROWS_AS(parse_scaling("bogus"), ConfigError);
  CHECK(std::string(to_string(ScalingMode::MeanField)) == "mean_field");
}

TEST_CASE("config parsing") {
  const char* text = R"(# baseline calibration
beta = 0.070
sigma = 1.5e-4
sigma_p = 0.0088
rho = 0.00004
gamma_per_sigma_p_sq = 2.5e-8
lambda_ = 1.88e-10   # trailing underscore accepted
n_agents = 3
scaling = mean_field
)";
  ModelConfig c = parse_config(text);
  CHECK(c.params.n_agents == 3);
  CHECK(c.params.gamma == doctest::Approx(2.5e-8 * 0.0088 * 0.0088));
  CHECK(c.params.lambda == 1.88e-10);
  CHECK(c.scaling == ScalingMode::MeanField);
}

TEST_CASE("config errors") {
  const std::string base = "beta=0.07\nsigma=1e-4\nrho=1e-4\nlambda=1e-10\nn_agents=2\n";
  CHECK_THROWS_AS(parse_config(base), ConfigError);  // no gamma
  CHECK_NOTHROW(parse_config(base + "gamma=1e-12\n"));
  CHECK_THROWS_AS(parse_config(base + "gamma=abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "gamma=1e-12\ngamma=2e-12\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "gamma=1e-12\nkappa=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "gamma_per_sigma_p_sq=2.5e-8\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "gamma=1e-12\ngamma_per_sigma_p_sq=2.5e-8\nsigma_p=1\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(base + "gamma 1e-12\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("beta=0.07\nsigma=1e-4\nrho=1e-4\nlambda=1e-10\nn_agents=2.5\ngamma=1\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(base + "gamma=-1\n"), DomainError);
  CHECK_THROWS_AS(load_config("/nonexistent/file.conf"), ConfigError);
}

TEST_CASE("frictionless value") {
  ModelParams p = baseline_params();
  CHECK(frictionless_value(p) ==
        doctest::Approx(p.sigma * p.sigma / (2 * p.rho * p.gamma * (2 * p.beta + p.rho))));
}
