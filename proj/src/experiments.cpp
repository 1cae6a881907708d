#include "hclbf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <thread>

namespace hclbf {

namespace {

bool system_fits_problem(SystemKind kind, ProblemId problem) {
  return (kind == SystemKind::Quadrotor2D) == (problem == ProblemId::Quadrotor2D);
}

struct TrialResult {
  Outcome outcome = Outcome::Timeout;
  double time = 0.0;
  bool integrator_failed = false;
};

// Runs body(i) for i in [0, n) on `workers` threads; rethrows the first failure.
template <typename Body>
void parallel_for(long n, int workers, Body&& body) {
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(std::min<long>(workers, n));
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (long i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::scoped_lock lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  }
  if (failure) std::rethrow_exception(failure);
}

std::string format_real(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be at least 1");
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  if (!std::isfinite(rhs)) throw std::invalid_argument("rhs must be finite");
  if (!system_fits_problem(system, problem)) {
    throw std::invalid_argument(std::string(to_string(system)) + " cannot run on " +
                                std::string(to_string(problem)));
  }
  sim.validate();
  if (grid) grid->validate();
  if (sampler && static_cast<int>(sampler->coords.size()) != state_dim(system)) {
    throw std::invalid_argument("initial-state sampler has the wrong dimension");
  }
}

ExperimentConfig default_experiment(ProblemId problem, SystemKind system, double rhs,
                                    double sigma) {
  ExperimentConfig cfg;
  cfg.problem = problem;
  cfg.system = system;
  cfg.rhs = rhs;
  cfg.sigma = sigma;
  cfg.sim = default_sim_config(system);
  return cfg;
}

std::string_view to_string(TimeUnit unit) { return unit == TimeUnit::Steps ? "steps" : "seconds"; }

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master) ^ index);
}

std::shared_ptr<const ScalarField> FieldCache::get(ProblemId problem, double rhs,
                                                   const GridSpec& grid,
                                                   const SolveOptions& opts) {
  const Key key{problem, rhs, grid.nx, grid.ny};
  std::scoped_lock lock(mutex_);
  if (auto it = fields_.find(key); it != fields_.end()) return it->second;
  const Environment env = builtin_problem(problem).env;
  auto field =
      std::make_shared<const ScalarField>(solve(rasterize(env, grid), rhs, env.barrier_level, opts));
  fields_.emplace(key, field);
  return field;
}

ExperimentReport run_monte_carlo(const ExperimentConfig& cfg, FieldCache* cache) {
  cfg.validate();
  const Problem problem = builtin_problem(cfg.problem);
  const GridSpec grid = cfg.grid.value_or(default_grid(problem.env.domain));
  if (cache != nullptr) return run_monte_carlo(cfg, *cache->get(cfg.problem, cfg.rhs, grid));
  const ScalarField field = solve(rasterize(problem.env, grid), cfg.rhs, problem.env.barrier_level);
  return run_monte_carlo(cfg, field);
}

ExperimentReport run_monte_carlo(const ExperimentConfig& cfg, const ScalarField& field) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Problem problem = builtin_problem(cfg.problem);
  problem.env.laplacian_rhs = field.rhs;
  const InitialSampler sampler = cfg.sampler.value_or(sampler_for(problem.sampler, cfg.system));
  SimConfig sim = cfg.sim;
  sim.noise.sigma = cfg.sigma;
  sim.mode = cfg.mode;
  const TimeUnit unit =
      cfg.system == SystemKind::Quadrotor2D ? TimeUnit::Seconds : TimeUnit::Steps;

  std::vector<TrialResult> results(static_cast<std::size_t>(cfg.n_trials));
  parallel_for(cfg.n_trials, cfg.workers, [&](long i) {
    std::mt19937_64 rng(trial_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    const Eigen::VectorXd x0 = sampler.sample(rng, state_dim(cfg.system));
    const Trajectory traj = run_trajectory(cfg.system, problem.env, field, sim, x0, rng);
    auto& r = results[static_cast<std::size_t>(i)];
    r.outcome = traj.outcome;
    r.time = unit == TimeUnit::Seconds ? traj.seconds : static_cast<double>(traj.steps);
    r.integrator_failed = traj.integrator_failed;
  });

  ExperimentReport report;
  report.config = cfg;
  report.n_trials = cfg.n_trials;
  report.unit = unit;
  report.solver_residual = field.stats.residual;
  double sum = 0.0;
  for (const auto& r : results) {
    switch (r.outcome) {
      case Outcome::ReachedGoal:
        ++report.n_success;
        sum += r.time;
        break;
      case Outcome::EnteredUnsafe: ++report.unsafe_count; break;
      case Outcome::Timeout: ++report.noreach_count; break;
    }
    if (r.integrator_failed) ++report.integrator_failures;
  }
  if (report.n_success > 0) {
    report.mu_t = sum / static_cast<double>(report.n_success);
    double sq = 0.0;
    for (const auto& r : results) {
      if (r.outcome == Outcome::ReachedGoal) sq += (r.time - report.mu_t) * (r.time - report.mu_t);
    }
    report.sigma_t = std::sqrt(sq / static_cast<double>(report.n_success));
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ExperimentConfig quadrotor_study_config(long n_trials, std::uint64_t seed) {
  ExperimentConfig cfg = default_experiment(ProblemId::Quadrotor2D, SystemKind::Quadrotor2D);
  cfg.n_trials = n_trials;
  cfg.seed = seed;
  return cfg;
}

ExperimentReport run_quadrotor_study(long n_trials, std::uint64_t seed,
                                     const std::optional<SimConfig>& overrides) {
  ExperimentConfig cfg = quadrotor_study_config(n_trials, seed);
  if (overrides) cfg.sim = *overrides;
  return run_monte_carlo(cfg);
}

LambdaEstimate estimate_lambda(const ScalarField& field, SystemKind kind, const Environment& env,
                               int n_headings, std::optional<double> v_floor,
                               const SystemParams& params) {
  if (!is_car_like(kind)) throw std::invalid_argument("lambda estimation needs a car-like system");
  if (n_headings < 1) throw std::invalid_argument("n_headings must be at least 1");
  const double floor = v_floor.value_or(1e-6 * env.barrier_level);
  const GridSpec& g = field.grid;

  LambdaEstimate est;
  est.headings = n_headings;
  bool have = false;
  Eigen::VectorXd state = Eigen::VectorXd::Zero(state_dim(kind));
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (field.mask.at(i, j) != NodeTag::Free) continue;
      const double v = field.at(i, j);
      if (!(v > floor)) {
        ++est.nodes_skipped;
        continue;
      }
      ++est.nodes_sampled;
      const Point2 p{g.x(i), g.y(j)};
      const Vec2 grad = gradient_at(field, p).grad;
      state[0] = p.x;
      state[1] = p.y;
      for (int k = 0; k < n_headings; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / n_headings;
        state[2] = theta;
        const ControlInput u = optimal_control(kind, state, grad, ControllerMode::DescentAligned,
                                               params);
        const double ratio = planar_inner_product(kind, state, u, grad, params) / v;
        if (!have || ratio > est.sup_ratio) {
          have = true;
          est.sup_ratio = ratio;
          est.witness_i = i;
          est.witness_j = j;
          est.witness_point = p;
          est.witness_heading = theta;
          est.witness_value = v;
        }
      }
    }
  }
  est.lambda_hat = have ? 0.0 - est.sup_ratio : 0.0;  // +0 rather than -0 when sup is 0
  return est;
}

std::vector<ExperimentConfig> expand_sweep(const SweepConfig& sweep) {
  std::vector<ExperimentConfig> cells;
  for (SystemKind kind : sweep.systems) {
    for (double rhs : sweep.rhs) {
      for (double sigma : sweep.sigmas) {
        ExperimentConfig cfg = default_experiment(sweep.problem, kind, rhs, sigma);
        cfg.n_trials = sweep.n_trials;
        cfg.seed = sweep.seed;
        cfg.mode = sweep.mode;
        cfg.grid = sweep.grid;
        if (sweep.dt) cfg.sim.dt = *sweep.dt;
        if (sweep.horizon) cfg.sim.horizon = *sweep.horizon;
        cells.push_back(cfg);
      }
    }
  }
  return cells;
}

std::string format_table(const std::vector<ExperimentReport>& reports) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %8s %6s %10s %10s %7s %9s %7s %20s\n", "System",
                "lapV", "sigma", "mu_T", "sigma_T", "unsafe", "no_reach", "n", "seed");
  out += line;
  for (const auto& r : reports) {
    const bool any = r.n_success > 0;
    std::snprintf(line, sizeof line, "%-12s %8s %6s %10s %10s %7ld %9ld %7ld %20llu\n",
                  std::string(to_string(r.config.system)).c_str(),
                  format_real(r.config.rhs, "%g").c_str(),
                  format_real(r.config.sigma, "%g").c_str(),
                  any ? format_real(r.mu_t, "%.3f").c_str() : "-",
                  any ? format_real(r.sigma_t, "%.3f").c_str() : "-", r.unsafe_count,
                  r.noreach_count, r.n_trials, static_cast<unsigned long long>(r.config.seed));
    out += line;
  }
  return out;
}

}  // namespace hclbf
