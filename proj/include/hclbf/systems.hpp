#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

#include <Eigen/Dense>

#include "hclbf/field_eval.hpp"
#include "hclbf/geometry.hpp"

namespace hclbf {

enum class SystemKind : std::uint8_t { Roomba, DiffDrive, CarRobot, Quadrotor2D };

std::string_view to_string(SystemKind kind);
/// Accepts "roomba", "diffdrive", "carrobot", "quadrotor2d".
SystemKind parse_system_kind(std::string_view name);

/// Roomba, DiffDrive: (x, y, theta). CarRobot: (x, y, theta, psi).
/// Quadrotor2D: (x, xdot, z, zdot, theta, thetadot).
int state_dim(SystemKind kind);
inline constexpr int kInputDim = 2;
inline bool is_car_like(SystemKind kind) { return kind != SystemKind::Quadrotor2D; }

/// Planar position the certificate is evaluated at: (x, y), or (x, z) for the quadrotor.
Point2 planar_position(SystemKind kind, const Eigen::VectorXd& state);

struct SystemParams {
  double r = 0.1;     // wheel radius
  double d = 0.1;     // half axle
  double l = 0.1;     // wheelbase
  double m = 0.033;   // quadrotor mass
  double ixx = 2.31e-05;
  double g = 9.81;
  // Quadrotor thrust and moment limits, centred on half the hover thrust.
  double quad_input_lo = 0.033 * 9.81 / 2.0 - 4.0;
  double quad_input_hi = 0.033 * 9.81 / 2.0 + 4.0;
  // Speed of the commanded descent direction for the quadrotor.
  double quad_descent_speed = 0.1;
  // |psi| band the CarRobot steers within before relaxing.
  double car_steer_limit = 0.6;

  /// Limits read literally as [g/2 - 4, g/2 + 4] = [0.905, 8.905], which
  /// exclude both hover thrust and zero moment.
  static SystemParams literal_quadrotor_limits();
};

using ControlInput = Eigen::Vector2d;

/// descent-aligned: steering terms follow the derivative of the heading
/// alignment with the gradient. paper-verbatim: the printed closed forms.
enum class ControllerMode : std::uint8_t { DescentAligned, PaperVerbatim };

std::string_view to_string(ControllerMode mode);
ControllerMode parse_controller_mode(std::string_view name);

class ConstraintViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Roomba: v, w in [-1, 1]. DiffDrive: |uL| + |uR| <= 1. CarRobot:
/// |v| <= |w| <= 1. Quadrotor2D: F, M in [quad_input_lo, quad_input_hi].
bool is_feasible(SystemKind kind, const ControlInput& u, const SystemParams& params,
                 double tol = 1e-9);

/// State derivative. Throws ConstraintViolation for infeasible inputs.
Eigen::VectorXd dynamics(SystemKind kind, const Eigen::VectorXd& state, const ControlInput& u,
                         const SystemParams& params = {});

/// <(xdot, ydot), grad V> for the car-like systems.
double planar_inner_product(SystemKind kind, const Eigen::VectorXd& state,
                            const ControlInput& u, Vec2 grad, const SystemParams& params = {});

/// sign with sign(0) = 0.
inline double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

/// Closed-form minimiser of <f(x, u), grad V> over the feasible inputs of a
/// car-like system.
ControlInput optimal_control(SystemKind kind, const Eigen::VectorXd& state, Vec2 grad,
                             ControllerMode mode = ControllerMode::DescentAligned,
                             const SystemParams& params = {});

struct BruteForceResult {
  ControlInput u;
  double inner_product = 0.0;
};

/// Exhaustive minimisation over a `resolution` x `resolution` lattice on
/// [-1, 1]^2 restricted to feasible inputs. Ties go to the smaller input
/// norm, then to the lexicographically smaller input.
BruteForceResult brute_force_control(SystemKind kind, const Eigen::VectorXd& state, Vec2 grad,
                                     int resolution, const SystemParams& params = {});

/// Thrust/moment law tracking the velocity s * vtil in the (x, z) plane,
/// s = quad_descent_speed and vtil a unit direction:
///   phi_c = (xdot - s vtil_x) / g,  F = m (g + s vtil_z - zdot),
///   M = Ixx (-15 thetadot + 18 (phi_c - theta)),
/// with F and M clamped into the input limits. In paper-verbatim mode the
/// attitude error uses the altitude z in place of theta.
ControlInput quadrotor_controller(const Eigen::VectorXd& state, Vec2 vtil,
                                  const SystemParams& params = {},
                                  ControllerMode mode = ControllerMode::DescentAligned);

/// Direction fed to quadrotor_controller. Descent-aligned: -grad/|grad|.
/// Paper-verbatim: (V_x, V_x)/|grad| as printed.
Vec2 quadrotor_direction(Vec2 grad, ControllerMode mode, double eps = 1e-9);

/// Spectral norm of the input matrix rows that drive the planar position.
double planar_input_gain(SystemKind kind, const Eigen::VectorXd& state,
                         const SystemParams& params = {});

/// Largest noise norm that keeps the first-order prediction of V below c:
///   ((c - V)/dt - <grad V, f(x, u)>) / (|f2(x)| |grad V|),
/// +infinity when the denominator is below 1e-12. Throws
/// std::domain_error when V >= c.
double noise_upper_bound(SystemKind kind, const Eigen::VectorXd& state, const ControlInput& u,
                         double value, Vec2 grad, double level, double dt,
                         const SystemParams& params = {});

/// Scales z by min(1, 0.999 bound / |z|).
ControlInput clip_noise(const ControlInput& z, double bound);

/// Euclidean projection onto the feasible input set.
ControlInput project_to_feasible(SystemKind kind, const ControlInput& u,
                                 const SystemParams& params = {});

struct NoiseConfig {
  double sigma = 0.0;
};

struct ControlDecision {
  ControlInput u;        // applied input
  ControlInput nominal;  // noiseless optimum
  ControlInput noise;    // clipped perturbation (zero when sigma = 0)
  double bound = 0.0;    // noise_upper_bound at the state, 0 when V >= c
};

/// Optimal input plus i.i.d. N(0, sigma^2) noise per input, clipped to the
/// noise bound and projected back onto the feasible set. At states with
/// V >= c no noise is added.
ControlDecision stochastic_control(SystemKind kind, const Eigen::VectorXd& state,
                                   const GradientSample& sample, double level, double dt,
                                   const NoiseConfig& noise, std::mt19937_64& rng,
                                   ControllerMode mode = ControllerMode::DescentAligned,
                                   const SystemParams& params = {});

/// The builtin samplers draw (x, y, theta); CarRobot appends psi(0) = 0.
InitialSampler sampler_for(const InitialSampler& base, SystemKind kind);

}  // namespace hclbf
