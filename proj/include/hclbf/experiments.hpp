#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hclbf/geometry.hpp"
#include "hclbf/pde_solver.hpp"
#include "hclbf/simulator.hpp"
#include "hclbf/systems.hpp"

namespace hclbf {

struct ExperimentConfig {
  ProblemId problem = ProblemId::ProblemI;
  SystemKind system = SystemKind::Roomba;
  double rhs = 0.0;
  double sigma = 0.0;
  long n_trials = 200;
  std::uint64_t seed = 42;
  SimConfig sim;
  std::optional<GridSpec> grid;  // default_grid(domain) when empty
  ControllerMode mode = ControllerMode::DescentAligned;
  // Replaces the problem's initial-state sampler (planar coordinates first).
  std::optional<InitialSampler> sampler;
  int workers = 0;  // 0: hardware concurrency

  void validate() const;
};

/// Defaults for `system` on `problem`: per-system SimConfig, 200 trials, seed 42.
ExperimentConfig default_experiment(ProblemId problem, SystemKind system, double rhs = 0.0,
                                    double sigma = 0.0);

enum class TimeUnit : std::uint8_t { Steps, Seconds };
std::string_view to_string(TimeUnit unit);

struct ExperimentReport {
  ExperimentConfig config;
  long n_trials = 0;
  long n_success = 0;
  long unsafe_count = 0;
  long noreach_count = 0;
  long integrator_failures = 0;  // included in noreach_count
  double mu_t = 0.0;             // over successes; 0 when there are none
  double sigma_t = 0.0;          // population standard deviation
  TimeUnit unit = TimeUnit::Steps;
  double solver_residual = 0.0;
  double wall_seconds = 0.0;
};

/// Seed of trial `index` derived from the master seed (splitmix64 mixing).
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index);

/// Solved fields keyed by (problem, rhs, grid), shared between experiment cells.
class FieldCache {
 public:
  std::shared_ptr<const ScalarField> get(ProblemId problem, double rhs, const GridSpec& grid,
                                         const SolveOptions& opts = {});

 private:
  using Key = std::tuple<ProblemId, double, int, int>;
  std::mutex mutex_;
  std::map<Key, std::shared_ptr<const ScalarField>> fields_;
};

/// Runs cfg.n_trials seeded rollouts on a worker pool. Trial i draws its
/// initial state and noise from a generator seeded with trial_seed(seed, i),
/// and results are reduced in trial order, so reports are bit-reproducible
/// for any worker count. Times are in steps for car-like systems and in
/// seconds for the quadrotor. Throws SolverError when the field does not
/// converge.
ExperimentReport run_monte_carlo(const ExperimentConfig& cfg, FieldCache* cache = nullptr);

/// Same, against an already solved field for cfg.problem.
ExperimentReport run_monte_carlo(const ExperimentConfig& cfg, const ScalarField& field);

/// Quadrotor landing study: harmonic field, RK45, dt 0.02, 2000 steps.
ExperimentConfig quadrotor_study_config(long n_trials, std::uint64_t seed);
ExperimentReport run_quadrotor_study(long n_trials, std::uint64_t seed,
                                     const std::optional<SimConfig>& overrides = std::nullopt);

struct LambdaEstimate {
  double lambda_hat = 0.0;
  double sup_ratio = 0.0;  // sup of inf_u <f, grad V> / V; lambda_hat = -sup_ratio
  int witness_i = -1;
  int witness_j = -1;
  Point2 witness_point;
  double witness_heading = 0.0;
  double witness_value = 0.0;
  long nodes_sampled = 0;
  long nodes_skipped = 0;  // Free nodes at or below v_floor
  int headings = 0;
};

/// Decay-rate estimate over all Free nodes with V > v_floor (default
/// 1e-6 c) and `n_headings` equally spaced headings in [0, 2 pi), using the
/// closed-form optimal input. CarRobot is evaluated at psi = 0.
LambdaEstimate estimate_lambda(const ScalarField& field, SystemKind kind, const Environment& env,
                               int n_headings = 64, std::optional<double> v_floor = std::nullopt,
                               const SystemParams& params = {});

/// Systems x rhs x sigma sweep on one problem.
struct SweepConfig {
  ProblemId problem = ProblemId::ProblemI;
  std::vector<SystemKind> systems{SystemKind::Roomba, SystemKind::DiffDrive,
                                  SystemKind::CarRobot};
  std::vector<double> rhs{0.0, -6.0};
  std::vector<double> sigmas{0.0, 0.1};
  long n_trials = 200;
  std::uint64_t seed = 42;
  ControllerMode mode = ControllerMode::DescentAligned;
  std::optional<double> dt;
  std::optional<long> horizon;
  std::optional<GridSpec> grid;
};

/// Cells in table order: system, then rhs, then sigma.
std::vector<ExperimentConfig> expand_sweep(const SweepConfig& sweep);

/// Columns: System, lap V, sigma, mu_T, sigma_T, unsafe, no reach, n, seed.
std::string format_table(const std::vector<ExperimentReport>& reports);

}  // namespace hclbf
