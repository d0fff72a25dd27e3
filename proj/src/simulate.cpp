#include "clnash/simulate.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <span>
#include <string>
#include <thread>

namespace clnash {

void validate_sim_config(const ValidatedParams& params, const SimConfig& config) {
  if (!(config.dt > 0.0) || !std::isfinite(config.dt)) throw ConfigError("dt must be positive");
  if (!(config.horizon >= config.dt) || !std::isfinite(config.horizon))
    throw ConfigError("horizon must be at least dt");
  if (config.n_paths <= 0) throw ConfigError("n_paths must be positive");
  if (!std::isfinite(config.mu0)) throw ConfigError("mu0 must be finite");
  if (std::exp(-params->rho * config.horizon) > 0.01)
    throw ConfigError("horizon too short: exp(-rho * horizon) must be <= 0.01");
}

std::int64_t step_count(const SimConfig& config) {
  return static_cast<std::int64_t>(std::ceil(config.horizon / config.dt - 1e-9));
}

int worker_threads() {
  if (const char* env = std::getenv("CLNASH_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::mt19937_64 path_rng(std::uint64_t seed, std::int64_t path_index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(path_index))));
}

// Pairwise summation in index order; the result does not depend on threading.
double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

ValueEstimate summarize(const std::vector<double>& values) {
  ValueEstimate out;
  out.n_paths = static_cast<std::int64_t>(values.size());
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = pairwise_sum(values) / n;
  if (values.size() > 1) {
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - out.mean) * (values[i] - out.mean);
    out.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  }
  return out;
}

double ou_variance(double beta, double sigma, double dt) {
  return sigma * sigma * -std::expm1(-2.0 * beta * dt) / (2.0 * beta);
}

/// Drift matrix of (mu, phi^1..phi^N): d/dt X = F X + noise on mu.
Eigen::MatrixXd drift_matrix(const ModelParams& p, const std::vector<LinearFeedback>& fb) {
  const int n = static_cast<int>(fb.size());
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n + 1, n + 1);
  f(0, 0) = -p.beta;
  for (int i = 0; i < n; ++i) {
    f(i + 1, 0) = fb[i].a_bar;
    for (int j = 0; j < n; ++j) f(i + 1, j + 1) = (i == j) ? -fb[i].c_bar : fb[i].b_bar;
  }
  return f;
}

/// One-step law of the joint process, with the inventory noise written
/// conditionally on the signal increment so every scenario shares the signal path.
struct Transition {
  Eigen::MatrixXd drift;
  Eigen::MatrixXd inventory_map;  // rows 1..N of exp(F dt)
  double mu_decay = 0.0;
  double mu_sd = 0.0;
  Eigen::VectorXd gain;
  Eigen::MatrixXd root;
};

Transition make_transition(const ModelParams& p, const std::vector<LinearFeedback>& fb, double dt) {
  const int n = static_cast<int>(fb.size());
  const int dim = n + 1;
  Transition t;
  t.drift = drift_matrix(p, fb);

  // Van Loan: exp([[-F, G G^T], [0, F^T]] dt) yields exp(F dt) and the noise covariance.
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * dim, 2 * dim);
  block.topLeftCorner(dim, dim) = -t.drift * dt;
  block(0, dim) = p.sigma * p.sigma * dt;
  block.bottomRightCorner(dim, dim) = t.drift.transpose() * dt;
  const Eigen::MatrixXd e = block.exp();
  const Eigen::MatrixXd phi = e.bottomRightCorner(dim, dim).transpose();
  Eigen::MatrixXd q = phi * e.topRightCorner(dim, dim);
  q = 0.5 * (q + q.transpose()).eval();

  t.inventory_map = phi.bottomRows(n);
  t.mu_decay = std::exp(-p.beta * dt);
  t.mu_sd = std::sqrt(ou_variance(p.beta, p.sigma, dt));

  const double q_mm = q(0, 0);
  Eigen::MatrixXd cond = q.bottomRightCorner(n, n);
  t.gain = Eigen::VectorXd::Zero(n);
  if (q_mm > 0.0) {
    t.gain = q.col(0).tail(n) / q_mm;
    cond -= t.gain * q.row(0).tail(n);
  }
  cond = 0.5 * (cond + cond.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cond);
  const Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  t.root = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  return t;
}

void check_feedback(const ValidatedParams& params, const std::vector<LinearFeedback>& fb) {
  if (static_cast<int>(fb.size()) != params->n_agents)
    throw DomainError("one feedback rule per agent is required");
}

std::vector<LinearFeedback> feedback_of(const ValidatedParams& params,
                                        const std::vector<Policy>& policies) {
  std::vector<LinearFeedback> fb;
  fb.reserve(policies.size());
  for (const Policy& p : policies) fb.push_back(to_feedback(p, params->gamma));
  return fb;
}

struct PathWork {
  std::vector<Eigen::VectorXd> state;
  Eigen::VectorXd z, rates, inv;
  std::vector<double> acc;
};

/// Discounted reward of `agent` along one path for each scenario. All scenarios
/// consume the same normal draws.
void run_path(const ModelParams& p, const std::vector<Transition>& scenarios, int agent,
              const SimConfig& config, std::int64_t steps, std::int64_t path_index, PathWork& w,
              std::vector<std::vector<double>>& out) {
  const int n = p.n_agents;
  std::mt19937_64 rng = path_rng(config.seed, path_index);
  std::normal_distribution<double> normal;
  for (auto& x : w.state) {
    x.setZero();
    x(0) = config.mu0;
  }
  std::fill(w.acc.begin(), w.acc.end(), 0.0);

  double weight = 0.5;
  for (std::int64_t k = 0; k <= steps; ++k) {
    if (k == steps) weight *= 0.5;
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      const Eigen::VectorXd& x = w.state[s];
      w.rates.noalias() = scenarios[s].drift.bottomRows(n) * x;
      const double pos = x(agent + 1);
      w.acc[s] += weight * (x(0) * pos - 0.5 * p.gamma * pos * pos -
                            p.lambda * w.rates(agent) * w.rates.sum());
    }
    if (k == steps) break;
    weight = std::exp(-p.rho * config.dt * static_cast<double>(k + 1));
    const double mu_noise = normal(rng);
    for (int i = 0; i < n; ++i) w.z(i) = normal(rng);
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      const Transition& t = scenarios[s];
      Eigen::VectorXd& x = w.state[s];
      const double d_mu = t.mu_sd * mu_noise;
      w.inv.noalias() = t.inventory_map * x;
      w.inv.noalias() += t.root * w.z;
      w.inv += t.gain * d_mu;
      x(0) = t.mu_decay * x(0) + d_mu;
      x.tail(n) = w.inv;
    }
  }
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    out[s][static_cast<std::size_t>(path_index)] = w.acc[s] * config.dt;
}

std::vector<std::vector<double>> path_values(const ValidatedParams& params,
                                             const std::vector<std::vector<LinearFeedback>>& scenarios,
                                             int agent, const SimConfig& config) {
  validate_sim_config(params, config);
  if (agent < 0 || agent >= params->n_agents) throw DomainError("agent_index out of range");
  std::vector<Transition> transitions;
  for (const auto& fb : scenarios) {
    check_feedback(params, fb);
    transitions.push_back(make_transition(*params, fb, config.dt));
  }
  const std::int64_t steps = step_count(config);
  std::vector<std::vector<double>> out(scenarios.size(),
                                       std::vector<double>(static_cast<std::size_t>(config.n_paths)));

  const std::int64_t threads = std::min<std::int64_t>(worker_threads(), config.n_paths);
  auto work = [&](std::int64_t begin, std::int64_t end) {
    const int n = params->n_agents;
    PathWork w{std::vector<Eigen::VectorXd>(transitions.size(), Eigen::VectorXd(n + 1)),
               Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n),
               std::vector<double>(transitions.size())};
    for (std::int64_t i = begin; i < end; ++i) run_path(*params, transitions, agent, config, steps, i, w, out);
  };
  if (threads <= 1) {
    work(0, config.n_paths);
  } else {
    std::vector<std::thread> pool;
    const std::int64_t chunk = (config.n_paths + threads - 1) / threads;
    for (std::int64_t w = 0; w < threads; ++w) {
      const std::int64_t begin = w * chunk, end = std::min(config.n_paths, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace

std::vector<double> simulate_signal(const ValidatedParams& params, const SimConfig& config,
                                    std::int64_t path_index) {
  validate_sim_config(params, config);
  const std::int64_t steps = step_count(config);
  const double decay = std::exp(-params->beta * config.dt);
  const double sd = std::sqrt(ou_variance(params->beta, params->sigma, config.dt));
  std::mt19937_64 rng = path_rng(config.seed, path_index);
  std::normal_distribution<double> normal;
  std::vector<double> mu(static_cast<std::size_t>(steps) + 1);
  mu[0] = config.mu0;
  for (std::int64_t k = 0; k < steps; ++k) mu[k + 1] = decay * mu[k] + sd * normal(rng);
  return mu;
}

PathBundle simulate_positions(const ValidatedParams& params,
                              const std::vector<LinearFeedback>& feedback,
                              const std::vector<double>& signal, const SimConfig& config,
                              Integrator integrator) {
  check_feedback(params, feedback);
  if (!(config.dt > 0.0)) throw ConfigError("dt must be positive");
  if (signal.empty()) throw DomainError("signal path is empty");
  const int n = params->n_agents;
  const std::size_t len = signal.size();
  const double dt = config.dt;

  Eigen::MatrixXd exact_step;
  if (integrator == Integrator::ExactPiecewiseLinear) {
    const Eigen::MatrixXd f = drift_matrix(*params, feedback);
    // State (phi, mu, mu') with mu' constant over the step.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 2, n + 2);
    m.topLeftCorner(n, n) = f.bottomRightCorner(n, n);
    m.block(0, n, n, 1) = f.block(1, 0, n, 1);
    m(n, n + 1) = 1.0;
    exact_step = (m * dt).exp().topRows(n);
  }

  PathBundle out;
  out.times.resize(len);
  out.signal = signal;
  out.inventories.assign(n, std::vector<double>(len, 0.0));
  out.rates.assign(n, std::vector<double>(len, 0.0));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n + 1);
  Eigen::VectorXd aug(n + 2), rates(n);
  for (std::size_t k = 0; k < len; ++k) {
    out.times[k] = static_cast<double>(k) * dt;
    x(0) = signal[k];
    // Others' total as total - own keeps identical agents bitwise identical.
    const double total = x.tail(n).sum();
    for (int i = 0; i < n; ++i) {
      const LinearFeedback& fb = feedback[i];
      rates(i) = fb.a_bar * x(0) + fb.b_bar * (total - x(i + 1)) - fb.c_bar * x(i + 1);
    }
    for (int i = 0; i < n; ++i) {
      out.inventories[i][k] = x(i + 1);
      out.rates[i][k] = rates(i);
    }
    if (k + 1 == len) break;
    if (integrator == Integrator::Euler) {
      x.tail(n) += dt * rates;
    } else {
      aug.head(n) = x.tail(n);
      aug(n) = signal[k];
      aug(n + 1) = (signal[k + 1] - signal[k]) / dt;
      x.tail(n) = exact_step * aug;
    }
  }
  return out;
}

PathBundle simulate_positions(const ValidatedParams& params, const std::vector<Policy>& policies,
                              const std::vector<double>& signal, const SimConfig& config,
                              Integrator integrator) {
  return simulate_positions(params, feedback_of(params, policies), signal, config, integrator);
}

ValueEstimate estimate_value(const ValidatedParams& params,
                             const std::vector<LinearFeedback>& feedback, int agent_index,
                             const SimConfig& config) {
  return summarize(path_values(params, {feedback}, agent_index, config)[0]);
}

ValueEstimate estimate_value(const ValidatedParams& params, const std::vector<Policy>& policies,
                             int agent_index, const SimConfig& config) {
  return estimate_value(params, feedback_of(params, policies), agent_index, config);
}

LinearFeedback perturb(const LinearFeedback& fb, const Perturbation& pert) {
  return {pert.rate_factor * pert.aim_factor * fb.a_bar, pert.rate_factor * fb.b_bar,
          pert.rate_factor * fb.c_bar};
}

std::vector<DeviationResult> deviation_experiments(const ValidatedParams& params,
                                                   const LinearFeedback& equilibrium_feedback,
                                                   const SimConfig& config,
                                                   const std::vector<Perturbation>& perturbations) {
  std::vector<std::vector<LinearFeedback>> scenarios;
  scenarios.emplace_back(params->n_agents, equilibrium_feedback);
  for (const Perturbation& pert : perturbations) {
    scenarios.push_back(scenarios.front());
    scenarios.back()[0] = perturb(equilibrium_feedback, pert);
  }
  const auto values = path_values(params, scenarios, 0, config);
  const ValueEstimate equilibrium = summarize(values[0]);

  std::vector<DeviationResult> out;
  std::vector<double> diff(values[0].size());
  for (std::size_t s = 1; s < values.size(); ++s) {
    DeviationResult r;
    r.equilibrium = equilibrium;
    r.deviant = summarize(values[s]);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = values[s][i] - values[0][i];
    const ValueEstimate gain = summarize(diff);
    r.mean_gain = gain.mean;
    r.paired_std_error = gain.std_error;
    out.push_back(r);
  }
  return out;
}

DeviationResult deviation_experiment(const ValidatedParams& params,
                                     const LinearFeedback& equilibrium_feedback,
                                     const SimConfig& config, const Perturbation& perturbation) {
  return deviation_experiments(params, equilibrium_feedback, config, {perturbation}).front();
}

}  // namespace clnash
