#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hclbf/geometry.hpp"
#include "hclbf/pde_solver.hpp"
#include "hclbf/systems.hpp"

namespace hclbf {

enum class Integrator : std::uint8_t { Euler, AdaptiveRK45 };

std::string_view to_string(Integrator integrator);
Integrator parse_integrator(std::string_view name);

struct SimConfig {
  double dt = 0.1;
  long horizon = 1000;
  Integrator integrator = Integrator::Euler;
  double rel_tol = 1e-6;
  double abs_tol = 1e-8;
  ControllerMode mode = ControllerMode::DescentAligned;
  NoiseConfig noise;
  SystemParams params;

  void validate() const;
};

/// Defaults per system: dt 0.1 / 1000 steps / Euler for the car-like
/// systems, dt 0.02 / 2000 steps / RK45 for the quadrotor.
SimConfig default_sim_config(SystemKind kind);

class IntegratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Advances the state by exactly dt with the input held constant.
Eigen::VectorXd step(SystemKind kind, const Eigen::VectorXd& state, const ControlInput& u,
                     double dt, const SimConfig& cfg);

/// Dormand-Prince 5(4) with embedded error control, integrating
/// dx/dt = f(x) from 0 to `duration`. Throws IntegratorError when the
/// substep shrinks below 1e-12 * duration.
Eigen::VectorXd integrate_dopri45(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& x0, double duration, double rel_tol,
                                  double abs_tol);

enum class Outcome : std::uint8_t { ReachedGoal, EnteredUnsafe, Timeout };

std::string_view to_string(Outcome outcome);

struct Trajectory {
  std::vector<Eigen::VectorXd> states;  // at t = 0, dt, 2 dt, ...
  std::vector<double> values;           // V at each recorded state
  std::vector<RegionLabel> labels;
  std::vector<ControlInput> inputs;     // applied between consecutive states
  // First-order prediction V(x_k) + <grad V, f(x_k, u_k)> dt for each applied input.
  std::vector<double> predicted_values;
  Outcome outcome = Outcome::Timeout;
  long steps = 0;  // index of the terminal state
  double seconds = 0.0;
  bool integrator_failed = false;
};

/// Closed-loop rollout. The state is classified before every control
/// update: closed goal containment ends with ReachedGoal, unsafe or
/// out-of-domain positions end with EnteredUnsafe, reaching `horizon`
/// steps ends with Timeout.
Trajectory run_trajectory(SystemKind kind, const Environment& env, const ScalarField& field,
                          const SimConfig& cfg, const Eigen::VectorXd& x0, std::mt19937_64& rng);

}  // namespace hclbf
