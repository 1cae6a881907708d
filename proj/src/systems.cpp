#include "hclbf/systems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>

namespace hclbf {

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::Roomba: return "roomba";
    case SystemKind::DiffDrive: return "diffdrive";
    case SystemKind::CarRobot: return "carrobot";
    case SystemKind::Quadrotor2D: return "quadrotor2d";
  }
  return "unknown";
}

SystemKind parse_system_kind(std::string_view name) {
  if (name == "roomba") return SystemKind::Roomba;
  if (name == "diffdrive") return SystemKind::DiffDrive;
  if (name == "carrobot") return SystemKind::CarRobot;
  if (name == "quadrotor2d") return SystemKind::Quadrotor2D;
  throw std::invalid_argument("unknown system '" + std::string(name) + "'");
}

std::string_view to_string(ControllerMode mode) {
  return mode == ControllerMode::DescentAligned ? "descent-aligned" : "paper-verbatim";
}

ControllerMode parse_controller_mode(std::string_view name) {
  if (name == "descent-aligned") return ControllerMode::DescentAligned;
  if (name == "paper-verbatim") return ControllerMode::PaperVerbatim;
  throw std::invalid_argument("unknown controller mode '" + std::string(name) + "'");
}

int state_dim(SystemKind kind) {
  switch (kind) {
    case SystemKind::Roomba:
    case SystemKind::DiffDrive: return 3;
    case SystemKind::CarRobot: return 4;
    case SystemKind::Quadrotor2D: return 6;
  }
  return 0;
}

Point2 planar_position(SystemKind kind, const Eigen::VectorXd& state) {
  if (kind == SystemKind::Quadrotor2D) return {state[0], state[2]};
  return {state[0], state[1]};
}

SystemParams SystemParams::literal_quadrotor_limits() {
  SystemParams p;
  p.quad_input_lo = p.g / 2.0 - 4.0;
  p.quad_input_hi = p.g / 2.0 + 4.0;
  return p;
}

bool is_feasible(SystemKind kind, const ControlInput& u, const SystemParams& params,
                 double tol) {
  if (!u.allFinite()) return false;
  switch (kind) {
    case SystemKind::Roomba:
      return std::abs(u[0]) <= 1.0 + tol && std::abs(u[1]) <= 1.0 + tol;
    case SystemKind::DiffDrive:
      return std::abs(u[0]) + std::abs(u[1]) <= 1.0 + tol;
    case SystemKind::CarRobot:
      return std::abs(u[0]) <= std::abs(u[1]) + tol && std::abs(u[1]) <= 1.0 + tol;
    case SystemKind::Quadrotor2D:
      return u[0] >= params.quad_input_lo - tol && u[0] <= params.quad_input_hi + tol &&
             u[1] >= params.quad_input_lo - tol && u[1] <= params.quad_input_hi + tol;
  }
  return false;
}

namespace {

void check_state(SystemKind kind, const Eigen::VectorXd& state) {
  if (state.size() != state_dim(kind)) {
    throw std::invalid_argument(std::string(to_string(kind)) + " expects a state of dimension " +
                                std::to_string(state_dim(kind)));
  }
}

// Planar velocity per unit speed input, and the speed input itself.
Vec2 heading(const Eigen::VectorXd& state) { return {std::cos(state[2]), std::sin(state[2])}; }

}  // namespace

Eigen::VectorXd dynamics(SystemKind kind, const Eigen::VectorXd& state, const ControlInput& u,
                         const SystemParams& params) {
  check_state(kind, state);
  if (!is_feasible(kind, u, params)) {
    throw ConstraintViolation("input (" + std::to_string(u[0]) + ", " + std::to_string(u[1]) +
                              ") violates the " + std::string(to_string(kind)) +
                              " input constraints");
  }
  Eigen::VectorXd dx(state.size());
  switch (kind) {
    case SystemKind::Roomba: {
      const Vec2 h = heading(state);
      dx << u[0] * h.x, u[0] * h.y, u[1];
      break;
    }
    case SystemKind::DiffDrive: {
      const Vec2 h = heading(state);
      const double speed = (u[0] + u[1]) * params.r / 2.0;
      dx << speed * h.x, speed * h.y, (u[1] - u[0]) * params.r / (2.0 * params.d);
      break;
    }
    case SystemKind::CarRobot: {
      const Vec2 h = heading(state);
      dx << u[0] * h.x, u[0] * h.y, u[0] * std::tan(state[3]) / params.l, u[1];
      break;
    }
    case SystemKind::Quadrotor2D: {
      const double f = u[0];
      const double theta = state[4];
      dx << state[1], -f * std::sin(theta) / params.m, state[3],
          f * std::cos(theta) / params.m - params.g, state[5], u[1] / params.ixx;
      break;
    }
  }
  return dx;
}

double planar_inner_product(SystemKind kind, const Eigen::VectorXd& state,
                            const ControlInput& u, Vec2 grad, const SystemParams& params) {
  if (!is_car_like(kind)) throw std::invalid_argument("planar inner product needs a car-like system");
  const Eigen::VectorXd dx = dynamics(kind, state, u, params);
  return dx[0] * grad.x + dx[1] * grad.y;
}

ControlInput optimal_control(SystemKind kind, const Eigen::VectorXd& state, Vec2 grad,
                             ControllerMode mode, const SystemParams& params) {
  check_state(kind, state);
  if (!is_car_like(kind)) throw std::invalid_argument("optimal_control needs a car-like system");
  const double c = std::cos(state[2]);
  const double s = std::sin(state[2]);
  // a: alignment of the heading with grad V; b: its derivative in theta.
  const double sa = sgn(grad.x * c + grad.y * s);
  const double sb = mode == ControllerMode::DescentAligned ? sgn(-grad.x * s + grad.y * c)
                                                           : sgn(-grad.x * c + grad.y * s);
  // Verbatim steering multiplies in sign(a); the descent-aligned law turns the
  // heading toward larger a independently of the driving direction.
  const double steer = mode == ControllerMode::DescentAligned ? sb : sa * sb;

  switch (kind) {
    case SystemKind::Roomba:
      return {-sa, steer};
    case SystemKind::DiffDrive:
      // uL + uR = -sa drives the speed, uR - uL = steer the turn rate.
      return {(-steer - sa) / 2.0, (steer - sa) / 2.0};
    case SystemKind::CarRobot: {
      const double psi = state[3];
      double v = -sa;
      if (mode == ControllerMode::PaperVerbatim) {
        const double w = std::clamp(v * sb - sgn(psi), -1.0, 1.0);
        if (std::abs(w) < std::abs(v)) v = sgn(v) * std::abs(w);
        return {v, w};
      }
      // theta' = v tan(psi) / l, so psi needs the sign of v * sb to turn like steer.
      const double want = v * sb;
      double w = std::clamp(want - sgn(psi), -1.0, 1.0);
      if (std::abs(w) < 1.0) {
        // psi already has the wanted sign (or nothing is wanted): |w| = 1 is
        // required to keep |v| = 1, so keep steering inside the band and relax outside.
        if (want != 0.0 && std::abs(psi) < params.car_steer_limit) {
          w = want;
        } else {
          w = psi != 0.0 ? -sgn(psi) : 1.0;
        }
      }
      return {v, w};
    }
    case SystemKind::Quadrotor2D: break;
  }
  return ControlInput::Zero();
}

BruteForceResult brute_force_control(SystemKind kind, const Eigen::VectorXd& state, Vec2 grad,
                                     int resolution, const SystemParams& params) {
  if (resolution < 2) throw std::invalid_argument("brute-force resolution must be at least 2");
  if (!is_car_like(kind)) throw std::invalid_argument("brute-force control needs a car-like system");
  check_state(kind, state);
  const int n = resolution - 1;
  auto lattice = [n](int k) { return static_cast<double>(2 * k - n) / n; };

  BruteForceResult best;
  bool have = false;
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; b <= n; ++b) {
      const ControlInput u(lattice(a), lattice(b));
      if (!is_feasible(kind, u, params, 1e-12)) continue;
      const double ip = planar_inner_product(kind, state, u, grad, params);
      if (!have) {
        best = {u, ip};
        have = true;
        continue;
      }
      const double tie = 1e-12 * std::max(1.0, std::abs(best.inner_product));
      if (ip < best.inner_product - tie) {
        best = {u, ip};
      } else if (std::abs(ip - best.inner_product) <= tie) {
        const double nu = u.norm();
        const double nb = best.u.norm();
        const bool lex = u[0] < best.u[0] || (u[0] == best.u[0] && u[1] < best.u[1]);
        if (nu < nb || (nu == nb && lex)) best = {u, ip};
      }
    }
  }
  return best;
}

Vec2 quadrotor_direction(Vec2 grad, ControllerMode mode, double eps) {
  const double denom = std::max(norm(grad), eps);
  if (mode == ControllerMode::PaperVerbatim) return {grad.x / denom, grad.x / denom};
  return {-grad.x / denom, -grad.y / denom};
}

ControlInput quadrotor_controller(const Eigen::VectorXd& state, Vec2 vtil,
                                  const SystemParams& params, ControllerMode mode) {
  check_state(SystemKind::Quadrotor2D, state);
  const double xdot = state[1];
  const double z = state[2];
  const double zdot = state[3];
  const double theta = state[4];
  const double thetadot = state[5];
  vtil = {params.quad_descent_speed * vtil.x, params.quad_descent_speed * vtil.y};
  const double phi_c = (xdot - vtil.x) / params.g;
  const double attitude = mode == ControllerMode::PaperVerbatim ? z : theta;
  const double f = params.m * (params.g + vtil.y - zdot);
  const double moment = params.ixx * (-15.0 * thetadot + 18.0 * (phi_c - attitude));
  return {std::clamp(f, params.quad_input_lo, params.quad_input_hi),
          std::clamp(moment, params.quad_input_lo, params.quad_input_hi)};
}

double planar_input_gain(SystemKind kind, const Eigen::VectorXd& state,
                         const SystemParams& params) {
  check_state(kind, state);
  const double c = std::cos(state[2]);
  const double s = std::sin(state[2]);
  Eigen::Matrix2d f2;
  switch (kind) {
    case SystemKind::Roomba:
    case SystemKind::CarRobot:
      f2 << c, 0.0, s, 0.0;
      break;
    case SystemKind::DiffDrive: {
      const double k = params.r / 2.0;
      f2 << k * c, k * c, k * s, k * s;
      break;
    }
    case SystemKind::Quadrotor2D:
      throw std::invalid_argument("quadrotor position is not control-affine in (F, M)");
  }
  return Eigen::JacobiSVD<Eigen::Matrix2d>(f2).singularValues()[0];
}

double noise_upper_bound(SystemKind kind, const Eigen::VectorXd& state, const ControlInput& u,
                         double value, Vec2 grad, double level, double dt,
                         const SystemParams& params) {
  if (value >= level) throw std::domain_error("state is at or above the barrier level");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const double ip = planar_inner_product(kind, state, u, grad, params);
  const double denom = planar_input_gain(kind, state, params) * norm(grad);
  if (denom < 1e-12) return std::numeric_limits<double>::infinity();
  return ((level - value) / dt - ip) / denom;
}

ControlInput clip_noise(const ControlInput& z, double bound) {
  const double n = z.norm();
  if (n == 0.0) return z;
  if (!(bound > 0.0)) return ControlInput::Zero();
  return z * std::min(1.0, 0.999 * bound / n);
}

namespace {

using P2 = Eigen::Vector2d;

P2 project_to_segment(const P2& p, const P2& a, const P2& b) {
  const P2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return a + t * ab;
}

// Vertices in counter-clockwise order.
P2 project_to_convex_polygon(const P2& p, std::span<const P2> poly) {
  bool inside = true;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const P2& a = poly[k];
    const P2& b = poly[(k + 1) % poly.size()];
    const P2 e = b - a;
    const P2 q = p - a;
    if (e.x() * q.y() - e.y() * q.x() < 0.0) {
      inside = false;
      break;
    }
  }
  if (inside) return p;
  P2 best = poly[0];
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const P2 c = project_to_segment(p, poly[k], poly[(k + 1) % poly.size()]);
    const double d = (c - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

ControlInput project_to_feasible(SystemKind kind, const ControlInput& u,
                                 const SystemParams& params) {
  switch (kind) {
    case SystemKind::Roomba:
      return u.cwiseMax(-1.0).cwiseMin(1.0);
    case SystemKind::DiffDrive: {
      static const std::array<P2, 4> diamond{P2(1, 0), P2(0, 1), P2(-1, 0), P2(0, -1)};
      return project_to_convex_polygon(u, diamond);
    }
    case SystemKind::CarRobot: {
      // {|v| <= |w| <= 1} in (v, w) is two triangles meeting at the origin.
      static const std::array<P2, 3> upper{P2(0, 0), P2(1, 1), P2(-1, 1)};
      static const std::array<P2, 3> lower{P2(0, 0), P2(-1, -1), P2(1, -1)};
      const P2 a = project_to_convex_polygon(u, upper);
      const P2 b = project_to_convex_polygon(u, lower);
      return (a - u).squaredNorm() <= (b - u).squaredNorm() ? a : b;
    }
    case SystemKind::Quadrotor2D:
      return u.cwiseMax(params.quad_input_lo).cwiseMin(params.quad_input_hi);
  }
  return u;
}

ControlDecision stochastic_control(SystemKind kind, const Eigen::VectorXd& state,
                                   const GradientSample& sample, double level, double dt,
                                   const NoiseConfig& noise, std::mt19937_64& rng,
                                   ControllerMode mode, const SystemParams& params) {
  if (noise.sigma < 0.0) throw std::invalid_argument("noise sigma must be non-negative");
  ControlDecision out;
  out.nominal = optimal_control(kind, state, sample.grad, mode, params);
  out.noise = ControlInput::Zero();
  out.u = out.nominal;
  if (noise.sigma == 0.0) return out;

  std::normal_distribution<double> gauss(0.0, noise.sigma);
  ControlInput z;
  z[0] = gauss(rng);
  z[1] = gauss(rng);
  out.bound = sample.value < level
                  ? noise_upper_bound(kind, state, out.nominal, sample.value, sample.grad, level,
                                      dt, params)
                  : 0.0;
  out.noise = clip_noise(z, out.bound);
  out.u = project_to_feasible(kind, out.nominal + out.noise, params);
  return out;
}

InitialSampler sampler_for(const InitialSampler& base, SystemKind kind) {
  InitialSampler s = base;
  if (kind == SystemKind::CarRobot && s.coords.size() == 3) {
    s.coords.push_back(CoordinateSampler::fixed(0.0));
  }
  return s;
}

}  // namespace hclbf
