// clnash: solve, compare, sweep and simulate from a parameter file.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "clnash.h"

using json = nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kInputError = 1, kSolverError = 2, kPartialSweep = 3, kStrictMonteCarlo = 4 };

struct Failure {
  clnash_status status;
  std::string message;
};

int exit_code(clnash_status s) {
  switch (s) {
    case CLNASH_OK: return kOk;
    case CLNASH_ERR_DOMAIN:
    case CLNASH_ERR_CONFIG:
    case CLNASH_ERR_INVALID_ARGUMENT: return kInputError;
    default: return kSolverError;
  }
}

void check(clnash_status s) {
  if (s != CLNASH_OK) throw Failure{s, clnash_last_error()};
}

struct ParamsDeleter {
  void operator()(clnash_params* p) const { clnash_params_destroy(p); }
};
struct SolutionDeleter {
  void operator()(clnash_solution* s) const { clnash_solution_destroy(s); }
};
using ParamsPtr = std::unique_ptr<clnash_params, ParamsDeleter>;
using SolutionPtr = std::unique_ptr<clnash_solution, SolutionDeleter>;

struct Overrides {
  std::string config;
  std::optional<int> n_agents;
  std::optional<std::string> scaling;
  double lambda_scale = 1.0;
  int max_iter = 0;

  clnash_solve_options solve_options() const {
    clnash_solve_options opts = clnash_default_solve_options();
    if (max_iter > 0) opts.max_iterations = max_iter;
    return opts;
  }
};

clnash_scaling parse_scaling_flag(const std::string& s) {
  if (s == "raw" || s == "Raw") return CLNASH_SCALING_RAW;
  if (s == "mean_field" || s == "MeanField" || s == "meanfield") return CLNASH_SCALING_MEAN_FIELD;
  throw Failure{CLNASH_ERR_CONFIG, "unknown scaling '" + s + "' (expected raw or mean_field)"};
}

ParamsPtr make_params(const clnash_model_params& raw, clnash_scaling scaling) {
  clnash_params* out = nullptr;
  check(clnash_params_create(&raw, scaling, &out));
  return ParamsPtr(out);
}

struct Loaded {
  clnash_model_params raw;
  clnash_scaling scaling;
};

Loaded load(const Overrides& o) {
  clnash_params* file = nullptr;
  check(clnash_params_load(o.config.c_str(), &file));
  ParamsPtr guard(file);
  Loaded l{};
  check(clnash_params_get(file, &l.raw, &l.scaling));
  if (o.n_agents) l.raw.n_agents = *o.n_agents;
  if (o.scaling) l.scaling = parse_scaling_flag(*o.scaling);
  if (!(o.lambda_scale > 0.0)) throw Failure{CLNASH_ERR_CONFIG, "--lambda-scale must be positive"};
  l.raw.lambda *= o.lambda_scale;
  return l;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.11e", x);
  return buf;
}

std::string slug(const char* text) {
  std::string s(text);
  for (char& c : s)
    if (c == ' ') c = '_';
  return s;
}

json params_json(const Loaded& l, const clnash_params* p) {
  double eff = 0.0;
  check(clnash_params_effective_lambda(p, &eff));
  return {{"beta", l.raw.beta},       {"sigma", l.raw.sigma},   {"sigma_p", l.raw.sigma_p},
          {"rho", l.raw.rho},         {"gamma", l.raw.gamma},   {"lambda", l.raw.lambda},
          {"n_agents", l.raw.n_agents}, {"scaling", l.scaling == CLNASH_SCALING_MEAN_FIELD ? "mean_field" : "raw"},
          {"effective_lambda", eff}};
}

json policy_json(const clnash_policy& p) {
  return {{"kind", clnash_kind_string(p.kind)}, {"m_rate", p.m_rate}, {"m_aim", p.m_aim}};
}

json estimate_json(const clnash_value_estimate& e) {
  return {{"mean", e.mean}, {"std_error", e.std_error}, {"n_paths", e.n_paths}};
}

// ---------------------------------------------------------------------------

int cmd_solve(const Overrides& o) {
  const Loaded l = load(o);
  ParamsPtr p = make_params(l.raw, l.scaling);
  const clnash_solve_options opts = o.solve_options();
  clnash_solution* raw_sol = nullptr;
  check(clnash_solve(p.get(), &opts, &raw_sol));
  SolutionPtr sol(raw_sol);

  clnash_policy pol;
  clnash_coefficients k;
  clnash_report r;
  check(clnash_solution_policy(sol.get(), &pol));
  check(clnash_solution_coefficients(sol.get(), &k));
  check(clnash_solution_report(sol.get(), &r));

  json residuals = json::object();
  for (int i = 0; i < CLNASH_EQUATION_COUNT; ++i) residuals[clnash_equation_name(i)] = r.residuals[i];
  json warnings = json::array();
  for (int i = 0; i < r.warning_count; ++i) warnings.push_back(clnash_solution_warning(sol.get(), i));

  json out;
  out["status"] = "converged";
  out["params"] = params_json(l, p.get());
  out["policy"] = policy_json(pol);
  out["coefficients"] = {{"a", k.a},         {"b", k.b},         {"c", k.c},         {"d", k.d},
                         {"e", k.e},         {"f", k.f},         {"g", k.g},         {"a_bar", k.a_bar},
                         {"b_bar", k.b_bar}, {"c_bar", k.c_bar}, {"h1", k.h1},       {"h2", k.h2},
                         {"h3", k.h3},       {"h4", k.h4},       {"delta", k.delta}};
  out["report"] = {{"delta", r.delta},
                   {"iterations", r.iterations},
                   {"converged", r.converged != 0},
                   {"phi_residual", r.phi_residual},
                   {"expanded_d_residual", r.expanded_d_residual},
                   {"residuals", residuals},
                   {"warnings", warnings}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct Row {
  double n_agents = 0, lambda = 0;
  double rate_mult[3] = {NAN, NAN, NAN};  // closed loop, open loop, planner
  double rate_asym[3] = {NAN, NAN, NAN};
  double aim[3] = {NAN, NAN, NAN};
  double value[3] = {NAN, NAN, NAN};
  double frictionless = NAN;
  std::string status = "ok";
};

constexpr clnash_kind kKinds[3] = {CLNASH_CLOSED_LOOP, CLNASH_OPEN_LOOP, CLNASH_CENTRAL_PLANNER};

clnash_status closed_loop(const clnash_params* p, const clnash_solve_options& opts, clnash_policy* out) {
  clnash_solution* raw_sol = nullptr;
  const clnash_status s = clnash_solve(p, &opts, &raw_sol);
  if (s != CLNASH_OK) return s;
  SolutionPtr sol(raw_sol);
  return clnash_solution_policy(sol.get(), out);
}

Row compute_row(const clnash_model_params& raw, clnash_scaling scaling, const clnash_solve_options& opts) {
  Row row;
  row.n_agents = raw.n_agents;
  row.lambda = raw.lambda;
  try {
    ParamsPtr p = make_params(raw, scaling);
    double eff = 0.0;
    check(clnash_params_effective_lambda(p.get(), &eff));
    check(clnash_frictionless_value(p.get(), &row.frictionless));
    const double mult = std::sqrt(raw.lambda / raw.gamma);
    for (int i = 0; i < 3; ++i) {
      double lead = 0.0;
      if (clnash_rate_leading(raw.n_agents, kKinds[i], &lead) == CLNASH_OK)
        row.rate_asym[i] = lead * std::sqrt(raw.lambda / eff);
      clnash_policy pol;
      clnash_status s = i == 0 ? closed_loop(p.get(), opts, &pol) : clnash_benchmark_policy(p.get(), kKinds[i], &pol);
      if (s != CLNASH_OK) {
        row.status = slug(clnash_status_string(s));
        continue;
      }
      row.rate_mult[i] = mult * pol.m_rate;
      row.aim[i] = pol.m_aim;
      double v = NAN;
      s = i == 0 ? clnash_policy_value(p.get(), &pol, &v) : clnash_benchmark_value(p.get(), kKinds[i], &v);
      if (s == CLNASH_OK) row.value[i] = v;
      else row.status = slug(clnash_status_string(s));
    }
  } catch (const Failure& f) {
    row.status = slug(clnash_status_string(f.status));
  }
  return row;
}

using Column = std::function<double(const Row&)>;

const std::vector<std::pair<std::string, Column>>& column_registry() {
  static const std::vector<std::pair<std::string, Column>> cols = {
      {"n_agents", [](const Row& r) { return r.n_agents; }},
      {"lambda", [](const Row& r) { return r.lambda; }},
      {"cl_rate_multiplier", [](const Row& r) { return r.rate_mult[0]; }},
      {"ol_rate_multiplier", [](const Row& r) { return r.rate_mult[1]; }},
      {"cp_rate_multiplier", [](const Row& r) { return r.rate_mult[2]; }},
      {"cl_rate_asymptote", [](const Row& r) { return r.rate_asym[0]; }},
      {"ol_rate_asymptote", [](const Row& r) { return r.rate_asym[1]; }},
      {"cp_rate_asymptote", [](const Row& r) { return r.rate_asym[2]; }},
      {"cl_rate_gap", [](const Row& r) { return std::abs(r.rate_mult[0] - r.rate_asym[0]); }},
      {"cl_aim", [](const Row& r) { return r.aim[0]; }},
      {"ol_aim", [](const Row& r) { return r.aim[1]; }},
      {"cp_aim", [](const Row& r) { return r.aim[2]; }},
      {"cl_value", [](const Row& r) { return r.value[0]; }},
      {"ol_value", [](const Row& r) { return r.value[1]; }},
      {"cp_value", [](const Row& r) { return r.value[2]; }},
      {"cl_fraction", [](const Row& r) { return r.value[0] / r.frictionless; }},
      {"ol_fraction", [](const Row& r) { return r.value[1] / r.frictionless; }},
      {"cp_fraction", [](const Row& r) { return r.value[2] / r.frictionless; }},
      {"cl_ol_ratio", [](const Row& r) { return r.value[0] / r.value[1]; }},
  };
  return cols;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, sep))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Failure{CLNASH_ERR_CONFIG, "not a number: '" + s + "'"};
}

int to_int(const std::string& s) {
  const double v = to_double(s);
  if (v != std::floor(v)) throw Failure{CLNASH_ERR_CONFIG, "not an integer: '" + s + "'"};
  return static_cast<int>(v);
}

// n_agents: "2,3,10" or "lo:hi[:step]". lambda: "1e-10,2e-10" or "lo:hi:count" (log-spaced).
std::vector<double> parse_values(const std::string& var, const std::string& spec) {
  std::vector<double> out;
  for (const std::string& tok : split(spec, ',')) {
    auto parts = split(tok, ':');
    if (parts.size() == 1) {
      out.push_back(var == "n_agents" ? to_int(parts[0]) : to_double(parts[0]));
    } else if (var == "n_agents" && (parts.size() == 2 || parts.size() == 3)) {
      const int lo = to_int(parts[0]), hi = to_int(parts[1]);
      const int step = parts.size() == 3 ? to_int(parts[2]) : 1;
      if (step <= 0 || hi < lo) throw Failure{CLNASH_ERR_CONFIG, "bad range '" + tok + "'"};
      for (int n = lo; n <= hi; n += step) out.push_back(n);
    } else if (var == "lambda" && parts.size() == 3) {
      const double lo = to_double(parts[0]), hi = to_double(parts[1]);
      const int count = to_int(parts[2]);
      if (!(lo > 0.0) || !(hi > 0.0) || count < 2) throw Failure{CLNASH_ERR_CONFIG, "bad range '" + tok + "'"};
      for (int i = 0; i < count; ++i)
        out.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1)));
    } else {
      throw Failure{CLNASH_ERR_CONFIG, "bad value list entry '" + tok + "'"};
    }
  }
  if (out.empty()) throw Failure{CLNASH_ERR_CONFIG, "empty value list"};
  if (var == "n_agents")
    for (double n : out)
      if (n < 2) throw Failure{CLNASH_ERR_CONFIG, "n_agents values must be >= 2"};
  return out;
}

int thread_count() {
  if (const char* env = std::getenv("CLNASH_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Row> compute_rows(const std::vector<clnash_model_params>& inputs, clnash_scaling scaling,
                              const clnash_solve_options& opts) {
  std::vector<Row> rows(inputs.size());
  const std::size_t workers = std::min<std::size_t>(thread_count(), inputs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < inputs.size(); i += workers) rows[i] = compute_row(inputs[i], scaling, opts);
    });
  for (auto& t : pool) t.join();
  return rows;
}

void write_csv(std::ostream& os, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& body) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << "\n";
  };
  line(header);
  for (const auto& r : body) line(r);
}

void emit(const std::string& out_path, const std::vector<std::string>& header,
          const std::vector<std::vector<std::string>>& body) {
  if (out_path.empty() || out_path == "-") {
    write_csv(std::cout, header, body);
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw Failure{CLNASH_ERR_CONFIG, "cannot write '" + out_path + "'"};
  write_csv(f, header, body);
}

int cmd_sweep(const Overrides& o, const std::string& var, const std::string& values,
              const std::string& columns, const std::string& out_path) {
  if (var != "n_agents" && var != "lambda")
    throw Failure{CLNASH_ERR_CONFIG, "--var must be n_agents or lambda"};
  const Loaded l = load(o);
  const std::vector<double> xs = parse_values(var, values);

  std::vector<std::string> names;
  if (columns.empty()) {
    for (const auto& [name, fn] : column_registry())
      if (name != var) names.push_back(name);
  } else {
    names = split(columns, ',');
  }
  std::vector<Column> getters;
  for (const std::string& name : names) {
    auto it = std::find_if(column_registry().begin(), column_registry().end(),
                           [&](const auto& c) { return c.first == name; });
    if (it == column_registry().end()) throw Failure{CLNASH_ERR_CONFIG, "unknown column '" + name + "'"};
    getters.push_back(it->second);
  }

  std::vector<clnash_model_params> inputs;
  for (double x : xs) {
    clnash_model_params raw = l.raw;
    if (var == "n_agents") raw.n_agents = static_cast<int>(x);
    else raw.lambda = x * o.lambda_scale;
    inputs.push_back(raw);
  }
  const std::vector<Row> rows = compute_rows(inputs, l.scaling, o.solve_options());

  std::vector<std::string> header{var};
  header.insert(header.end(), names.begin(), names.end());
  header.push_back("status");
  std::vector<std::vector<std::string>> body;
  bool failed = false;
  for (const Row& r : rows) {
    std::vector<std::string> cells{var == "n_agents" ? std::to_string(static_cast<int>(r.n_agents)) : fmt(r.lambda)};
    for (const Column& g : getters) cells.push_back(fmt(g(r)));
    cells.push_back(r.status);
    failed = failed || r.status != "ok";
    body.push_back(std::move(cells));
  }
  emit(out_path, header, body);
  return failed ? kPartialSweep : kOk;
}

int cmd_compare(const Overrides& o, const std::string& out_path) {
  const Loaded l = load(o);
  const Row r = compute_row(l.raw, l.scaling, o.solve_options());
  if (r.status != "ok") {
    std::cerr << "error: closed-loop solve failed: " << r.status << "\n";
    return kSolverError;
  }
  static const char* names[3] = {"closed_loop", "open_loop", "central_planner"};
  std::vector<std::vector<std::string>> body;
  for (int i = 0; i < 3; ++i)
    body.push_back({names[i], fmt(r.rate_mult[i] / std::sqrt(l.raw.lambda / l.raw.gamma)), fmt(r.aim[i]),
                    fmt(r.value[i]), fmt(r.value[i] / r.frictionless)});
  emit(out_path, {"kind", "m_rate", "m_aim", "value", "value_fraction"}, body);
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimFlags {
  double dt = 0.25;
  double horizon = 200.0;
  long long paths = 10000;
  unsigned long long seed = 1;
  std::optional<double> deviate;
  std::optional<double> deviate_aim;
  bool strict = false;
};

int cmd_simulate(const Overrides& o, const SimFlags& f) {
  const Loaded l = load(o);
  ParamsPtr p = make_params(l.raw, l.scaling);
  clnash_sim_config cfg = clnash_default_sim_config();
  cfg.dt = f.dt;
  cfg.horizon = f.horizon;
  cfg.n_paths = f.paths;
  cfg.seed = f.seed;
  if (cfg.n_paths <= 0) throw Failure{CLNASH_ERR_CONFIG, "--paths must be positive"};

  clnash_solution* raw_sol = nullptr;
  const clnash_solve_options opts = o.solve_options();
  check(clnash_solve(p.get(), &opts, &raw_sol));
  SolutionPtr sol(raw_sol);
  clnash_policy pol;
  check(clnash_solution_policy(sol.get(), &pol));
  double closed = 0.0;
  check(clnash_policy_value(p.get(), &pol, &closed));
  clnash_value_estimate est;
  check(clnash_simulate_value(p.get(), sol.get(), &cfg, &est));

  const double z = est.std_error > 0.0 ? (est.mean - closed) / est.std_error : (est.mean == closed ? 0.0 : INFINITY);
  const bool within = std::abs(z) <= 3.0;
  bool pass = within;

  json out;
  out["params"] = params_json(l, p.get());
  out["sim"] = {{"dt", cfg.dt}, {"horizon", cfg.horizon}, {"n_paths", cfg.n_paths}, {"seed", cfg.seed}};
  out["policy"] = policy_json(pol);
  out["closed_form"] = closed;
  out["estimate"] = estimate_json(est);
  out["z_score"] = z;
  out["within_3se"] = within;

  if (f.deviate || f.deviate_aim) {
    const double rf = f.deviate.value_or(1.0), af = f.deviate_aim.value_or(1.0);
    clnash_deviation dev;
    check(clnash_simulate_deviation(p.get(), sol.get(), &cfg, rf, af, &dev));
    const bool no_gain = dev.mean_gain <= 3.0 * dev.paired_std_error;
    pass = pass && no_gain;
    out["deviation"] = {{"rate_factor", rf},
                        {"aim_factor", af},
                        {"equilibrium", estimate_json(dev.equilibrium)},
                        {"deviant", estimate_json(dev.deviant)},
                        {"mean_gain", dev.mean_gain},
                        {"paired_std_error", dev.paired_std_error},
                        {"no_profitable_deviation", no_gain}};
  }
  out["pass"] = pass;
  std::cout << out.dump(2) << "\n";
  return (f.strict && !pass) ? kStrictMonteCarlo : kOk;
}

void add_common(CLI::App* cmd, Overrides& o, bool lambda_scale = true) {
  cmd->add_option("config", o.config, "Parameter file (key = value)")->required();
  cmd->add_option("--n", o.n_agents, "Override n_agents");
  cmd->add_option("--scaling", o.scaling, "raw or mean_field (overrides the file)");
  if (lambda_scale) cmd->add_option("--lambda-scale", o.lambda_scale, "Multiply lambda by this factor");
  cmd->add_option("--max-iter", o.max_iter, "Newton iteration budget")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop Nash equilibrium solver for N-agent trading with price impact"};
  app.require_subcommand(1);

  Overrides o;
  auto* solve = app.add_subcommand("solve", "Solve the closed-loop equilibrium and print JSON");
  add_common(solve, o);

  std::string out_path;
  auto* compare = app.add_subcommand("compare", "CSV comparison of the three equilibria");
  add_common(compare, o);
  compare->add_option("--out", out_path, "Output file (default stdout)");

  std::string var = "n_agents", values, columns;
  auto* sweep = app.add_subcommand("sweep", "CSV sweep over n_agents or lambda");
  add_common(sweep, o);
  sweep->add_option("--var", var, "n_agents or lambda");
  sweep->add_option("--values", values, "List or range, e.g. 2:50 or 1e-14:1e-10:5")->required();
  sweep->add_option("--columns", columns, "Comma-separated column names (default all)");
  sweep->add_option("--out", out_path, "Output file (default stdout)");

  SimFlags sf;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of the closed-form value");
  add_common(simulate, o);
  simulate->add_option("--dt", sf.dt, "Time step (days)");
  simulate->add_option("--horizon", sf.horizon, "Horizon (days)");
  simulate->add_option("--paths", sf.paths, "Number of paths");
  simulate->add_option("--seed", sf.seed, "Base seed");
  simulate->add_option("--deviate", sf.deviate, "Agent 1 scales its trading rate by this factor");
  simulate->add_option("--deviate-aim", sf.deviate_aim, "Agent 1 scales its aim by this factor");
  simulate->add_flag("--strict", sf.strict, "Exit 4 when a 3-SE check fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (compare->parsed()) return cmd_compare(o, out_path);
    if (sweep->parsed()) return cmd_sweep(o, var, values, columns, out_path);
    if (simulate->parsed()) return cmd_simulate(o, sf);
  } catch (const Failure& f) {
    const std::string kind = clnash_status_string(f.status);
    std::cerr << "error: " << (f.message.rfind(kind, 0) == 0 ? f.message : kind + ": " + f.message) << "\n";
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverError;
  }
  return kOk;
}
