#include "hclbf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hclbf {

std::string_view to_string(Integrator integrator) {
  return integrator == Integrator::Euler ? "euler" : "rk45";
}

Integrator parse_integrator(std::string_view name) {
  if (name == "euler") return Integrator::Euler;
  if (name == "rk45") return Integrator::AdaptiveRK45;
  throw std::invalid_argument("unknown integrator '" + std::string(name) + "'");
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::ReachedGoal: return "goal";
    case Outcome::EnteredUnsafe: return "unsafe";
    case Outcome::Timeout: return "timeout";
  }
  return "unknown";
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  if (noise.sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
}

SimConfig default_sim_config(SystemKind kind) {
  SimConfig cfg;
  if (kind == SystemKind::Quadrotor2D) {
    cfg.dt = 0.02;
    cfg.horizon = 2000;
    cfg.integrator = Integrator::AdaptiveRK45;
  }
  return cfg;
}

Eigen::VectorXd integrate_dopri45(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& x0, double duration, double rel_tol,
                                  double abs_tol) {
  // Dormand-Prince tableau (autonomous form); the 5th-order solution is propagated.
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  // b - b_hat for the error estimate.
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Eigen::VectorXd x = x0;
  double t = 0.0;
  double h = duration;
  const double h_min = 1e-12 * duration;
  Eigen::VectorXd k1 = f(x);
  while (t < duration) {
    h = std::min(h, duration - t);
    const Eigen::VectorXd k2 = f(x + h * a21 * k1);
    const Eigen::VectorXd k3 = f(x + h * (a31 * k1 + a32 * k2));
    const Eigen::VectorXd k4 = f(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Eigen::VectorXd k5 = f(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Eigen::VectorXd k6 = f(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Eigen::VectorXd xn = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Eigen::VectorXd k7 = f(xn);
    const Eigen::VectorXd err =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double scale = abs_tol + rel_tol * std::max(std::abs(x[i]), std::abs(xn[i]));
      err_norm = std::max(err_norm, std::abs(err[i]) / scale);
    }
    if (!std::isfinite(err_norm) || !xn.allFinite() || !err.allFinite()) err_norm = 1e10;

    if (err_norm <= 1.0) {
      t += h;
      x = xn;
      k1 = k7;  // first-same-as-last
      if (duration - t <= 1e-15 * duration) break;
    }
    const double factor =
        err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < h_min) {
      throw IntegratorError("RK45 substep underflow at t = " + std::to_string(t));
    }
  }
  return x;
}

Eigen::VectorXd step(SystemKind kind, const Eigen::VectorXd& state, const ControlInput& u,
                     double dt, const SimConfig& cfg) {
  if (cfg.integrator == Integrator::Euler) {
    return state + dt * dynamics(kind, state, u, cfg.params);
  }
  const auto rhs = [&](const Eigen::VectorXd& x) { return dynamics(kind, x, u, cfg.params); };
  return integrate_dopri45(rhs, state, dt, cfg.rel_tol, cfg.abs_tol);
}

Trajectory run_trajectory(SystemKind kind, const Environment& env, const ScalarField& field,
                          const SimConfig& cfg, const Eigen::VectorXd& x0, std::mt19937_64& rng) {
  cfg.validate();
  if (x0.size() != state_dim(kind)) {
    throw std::invalid_argument("initial state has the wrong dimension for " +
                                std::string(to_string(kind)));
  }
  const double level = env.barrier_level;
  Trajectory traj;
  Eigen::VectorXd x = x0;
  for (long k = 0;; ++k) {
    const Point2 p = planar_position(kind, x);
    const RegionLabel label = classify(env, p);
    traj.states.push_back(x);
    traj.labels.push_back(label);
    traj.steps = k;
    traj.seconds = static_cast<double>(k) * cfg.dt;
    if (label == RegionLabel::OutOfDomain) {
      traj.values.push_back(level);
      traj.outcome = Outcome::EnteredUnsafe;
      return traj;
    }
    const GradientSample sample = gradient_at(field, p);
    traj.values.push_back(sample.value);
    if (label == RegionLabel::Goal) {
      traj.outcome = Outcome::ReachedGoal;
      return traj;
    }
    if (label == RegionLabel::Unsafe) {
      traj.outcome = Outcome::EnteredUnsafe;
      return traj;
    }
    if (k == cfg.horizon) {
      traj.outcome = Outcome::Timeout;
      return traj;
    }

    ControlInput u;
    double predicted = sample.value;
    if (kind == SystemKind::Quadrotor2D) {
      const Vec2 vtil = quadrotor_direction(sample.grad, cfg.mode);
      u = quadrotor_controller(x, vtil, cfg.params, cfg.mode);
      const Eigen::VectorXd dx = dynamics(kind, x, u, cfg.params);
      predicted += (dx[0] * sample.grad.x + dx[2] * sample.grad.y) * cfg.dt;
    } else {
      u = stochastic_control(kind, x, sample, level, cfg.dt, cfg.noise, rng, cfg.mode,
                             cfg.params)
              .u;
      predicted += planar_inner_product(kind, x, u, sample.grad, cfg.params) * cfg.dt;
    }
    traj.inputs.push_back(u);
    traj.predicted_values.push_back(predicted);
    try {
      x = step(kind, x, u, cfg.dt, cfg);
    } catch (const IntegratorError&) {
      traj.integrator_failed = true;
      traj.outcome = Outcome::Timeout;
      return traj;
    }
  }
}

}  // namespace hclbf
