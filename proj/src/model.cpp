#include "clnash/model.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace clnash {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::NoConvergence: return "no convergence";
    case ErrorKind::BranchInvalid: return "branch invalid";
    case ErrorKind::DenominatorVanished: return "denominator vanished";
    case ErrorKind::SignConstraint: return "sign constraint violated";
    case ErrorKind::NoAdmissibleRoot: return "no admissible root";
  }
  return "unknown error";
}

const char* to_string(ScalingMode mode) noexcept {
  return mode == ScalingMode::Raw ? "raw" : "mean_field";
}

const char* to_string(EquilibriumKind kind) noexcept {
  switch (kind) {
    case EquilibriumKind::ClosedLoop: return "closed_loop";
    case EquilibriumKind::OpenLoop: return "open_loop";
    case EquilibriumKind::CentralPlanner: return "central_planner";
  }
  return "unknown";
}

ScalingMode parse_scaling(std::string_view text) {
  if (text == "raw" || text == "Raw") return ScalingMode::Raw;
  if (text == "mean_field" || text == "MeanField" || text == "meanfield")
    return ScalingMode::MeanField;
  throw ConfigError("unknown scaling mode '" + std::string(text) + "'");
}

namespace {

void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || !(value > 0.0))
    throw DomainError(std::string(name) + " must be positive");
}

}  // namespace

ValidatedParams validate(const ModelParams& p) {
  require_positive(p.beta, "beta");
  require_positive(p.sigma, "sigma");
  if (!std::isfinite(p.sigma_p) || p.sigma_p < 0.0)
    throw DomainError("sigma_p must be non-negative");
  require_positive(p.rho, "rho");
  require_positive(p.gamma, "gamma");
  require_positive(p.lambda, "lambda");
  if (p.n_agents < 2) throw DomainError("n_agents must be >= 2");
  return ValidatedParams(p);
}

ValidatedParams apply_scaling(const ValidatedParams& params, ScalingMode mode) {
  ModelParams p = params.get();
  if (mode == ScalingMode::MeanField) p.lambda /= static_cast<double>(p.n_agents);
  return ValidatedParams(p);
}

ModelParams baseline_params(int n_agents) {
  ModelParams p;
  p.sigma_p = 0.0088;
  p.rho = 0.00004;
  p.sigma = 0.00015;
  p.beta = 0.070;
  p.lambda = 1.88e-10;
  p.gamma = 2.5e-8 * p.sigma_p * p.sigma_p;
  p.n_agents = n_agents;
  return p;
}

double frictionless_value(const ModelParams& p) {
  return p.sigma * p.sigma / (2.0 * p.rho * p.gamma * (2.0 * p.beta + p.rho));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view text, const std::string& key, int line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("line " + std::to_string(line) + ": '" + key +
                      "' is not a number: '" + std::string(text) + "'");
  return value;
}

}  // namespace

ModelConfig parse_config(std::string_view text) {
  std::map<std::string, double> values;
  std::optional<ScalingMode> scaling;

  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
    if (!key.empty() && key.back() == '_') key.pop_back();  // accept gamma_ / lambda_

    if (key == "scaling") {
      scaling = parse_scaling(value);
      continue;
    }
    static const char* known[] = {"beta", "sigma", "sigma_p", "rho", "gamma",
                                  "gamma_per_sigma_p_sq", "lambda", "n_agents"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (values.count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    values[key] = parse_number(value, key, line_no);
  }

  auto need = [&](const char* key) {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError(std::string("missing key '") + key + "'");
    return it->second;
  };

  ModelConfig cfg;
  ModelParams& p = cfg.params;
  p.beta = need("beta");
  p.sigma = need("sigma");
  p.sigma_p = values.count("sigma_p") ? values["sigma_p"] : 0.0;
  p.rho = need("rho");
  p.lambda = need("lambda");
  if (values.count("gamma") && values.count("gamma_per_sigma_p_sq"))
    throw ConfigError("give either 'gamma' or 'gamma_per_sigma_p_sq', not both");
  if (values.count("gamma")) {
    p.gamma = values["gamma"];
  } else if (values.count("gamma_per_sigma_p_sq")) {
    if (!values.count("sigma_p"))
      throw ConfigError("'gamma_per_sigma_p_sq' requires 'sigma_p'");
    p.gamma = values["gamma_per_sigma_p_sq"] * p.sigma_p * p.sigma_p;
  } else {
    throw ConfigError("missing key 'gamma'");
  }
  double n = need("n_agents");
  if (n != std::floor(n) || std::abs(n) > 1e9) throw ConfigError("n_agents must be an integer");
  p.n_agents = static_cast<int>(n);
  cfg.scaling = scaling.value_or(ScalingMode::Raw);

  validate(p);
  return cfg;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace clnash
