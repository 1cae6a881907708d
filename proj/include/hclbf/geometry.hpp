#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hclbf {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Closed axis-aligned rectangle [xmin, xmax] x [ymin, ymax].
struct Rect {
  double xmin = 0.0;
  double xmax = 0.0;
  double ymin = 0.0;
  double ymax = 0.0;

  /// Throws std::invalid_argument unless xmin < xmax and ymin < ymax.
  void validate() const;

  bool contains(Point2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  bool contains(const Rect& r) const {
    return r.xmin >= xmin && r.xmax <= xmax && r.ymin >= ymin && r.ymax <= ymax;
  }
  /// True when the interiors overlap; rectangles sharing only an edge do not.
  bool overlaps(const Rect& r) const {
    return r.xmin < xmax && r.xmax > xmin && r.ymin < ymax && r.ymax > ymin;
  }
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
};

enum class RegionLabel : std::uint8_t { Goal, Unsafe, Safe, OutOfDomain };

std::string_view to_string(RegionLabel label);

/// A reach-avoid problem: the admissible set, its goal box, interior
/// obstacles and the Dirichlet data of the certificate (V = 0 on the goal,
/// V = barrier_level on obstacles and on the domain boundary, and
/// laplacian(V) = laplacian_rhs elsewhere).
struct Environment {
  Rect domain;
  Rect goal;
  std::vector<Rect> unsafe;
  double barrier_level = 1.0;
  double laplacian_rhs = 0.0;

  /// Checks rectangle validity, containment in the domain, that the goal
  /// shares at most an edge with each obstacle and barrier_level > 0.
  /// Throws std::invalid_argument.
  void validate() const;
};

/// Closed containment with precedence OutOfDomain > Unsafe > Goal > Safe.
/// The domain boundary counts as unsafe.
RegionLabel classify(const Environment& env, Point2 p);

/// One coordinate of the initial-state distribution. An empty interval list
/// means the coordinate is fixed at `value`; otherwise the coordinate is
/// uniform over the union of the listed intervals.
struct CoordinateSampler {
  struct Interval {
    double lo = 0.0;
    double hi = 0.0;
  };
  std::vector<Interval> intervals;
  double value = 0.0;

  static CoordinateSampler fixed(double v);
  static CoordinateSampler uniform(double lo, double hi);
  static CoordinateSampler uniform_union(std::vector<Interval> parts);

  /// Picks an interval with probability proportional to its length, then
  /// samples uniformly inside it.
  double sample(std::mt19937_64& rng) const;
};

struct InitialSampler {
  std::vector<CoordinateSampler> coords;
  // State indices holding the planar position used for classification.
  int px_index = 0;
  int py_index = 1;

  /// Throws std::invalid_argument if `state_dim` differs from coords.size().
  Eigen::VectorXd sample(std::mt19937_64& rng, int state_dim) const;
};

enum class ProblemId : std::uint8_t { ProblemI, ProblemII, Quadrotor2D };

std::string_view to_string(ProblemId id);
/// Accepts "problem-i", "problem-ii", "quadrotor2d". Throws on unknown ids.
ProblemId parse_problem_id(std::string_view name);

struct Problem {
  Environment env;
  InitialSampler sampler;
};

/// The three benchmark problems with unit barrier level and a harmonic
/// right-hand side. Car-like problems sample (x, y, theta); the quadrotor
/// samples (x, xdot, z, zdot, theta, thetadot).
Problem builtin_problem(ProblemId id);

/// Convenience wrapper over InitialSampler::sample.
Eigen::VectorXd sample_initial_state(const InitialSampler& sampler, std::mt19937_64& rng,
                                     int state_dim);

}  // namespace hclbf
