#include "hclbf/geometry.hpp"

#include <numbers>
#include <stdexcept>

namespace hclbf {

void Rect::validate() const {
  if (!(xmin < xmax) || !(ymin < ymax)) {
    throw std::invalid_argument("rectangle must satisfy xmin < xmax and ymin < ymax");
  }
}

std::string_view to_string(RegionLabel label) {
  switch (label) {
    case RegionLabel::Goal: return "goal";
    case RegionLabel::Unsafe: return "unsafe";
    case RegionLabel::Safe: return "safe";
    case RegionLabel::OutOfDomain: return "out_of_domain";
  }
  return "unknown";
}

void Environment::validate() const {
  domain.validate();
  goal.validate();
  if (!domain.contains(goal)) throw std::invalid_argument("goal rectangle leaves the domain");
  for (const Rect& r : unsafe) {
    r.validate();
    if (!domain.contains(r)) throw std::invalid_argument("unsafe rectangle leaves the domain");
    if (r.overlaps(goal)) throw std::invalid_argument("goal overlaps an unsafe rectangle");
  }
  if (!(barrier_level > 0.0)) throw std::invalid_argument("barrier_level must be positive");
}

RegionLabel classify(const Environment& env, Point2 p) {
  const Rect& d = env.domain;
  if (!d.contains(p)) return RegionLabel::OutOfDomain;
  if (p.x == d.xmin || p.x == d.xmax || p.y == d.ymin || p.y == d.ymax) {
    return RegionLabel::Unsafe;
  }
  for (const Rect& r : env.unsafe) {
    if (r.contains(p)) return RegionLabel::Unsafe;
  }
  if (env.goal.contains(p)) return RegionLabel::Goal;
  return RegionLabel::Safe;
}

CoordinateSampler CoordinateSampler::fixed(double v) {
  CoordinateSampler s;
  s.value = v;
  return s;
}

CoordinateSampler CoordinateSampler::uniform(double lo, double hi) {
  return uniform_union({{lo, hi}});
}

CoordinateSampler CoordinateSampler::uniform_union(std::vector<Interval> parts) {
  for (const Interval& in : parts) {
    if (!(in.lo < in.hi)) throw std::invalid_argument("sampler interval must satisfy lo < hi");
  }
  CoordinateSampler s;
  s.intervals = std::move(parts);
  return s;
}

double CoordinateSampler::sample(std::mt19937_64& rng) const {
  if (intervals.empty()) return value;
  double total = 0.0;
  for (const Interval& in : intervals) total += in.hi - in.lo;
  // One uniform draw over the concatenated length selects both the interval
  // and the position inside it.
  std::uniform_real_distribution<double> dist(0.0, total);
  double t = dist(rng);
  for (const Interval& in : intervals) {
    const double len = in.hi - in.lo;
    if (t < len) return in.lo + t;
    t -= len;
  }
  return intervals.back().hi;
}

Eigen::VectorXd InitialSampler::sample(std::mt19937_64& rng, int state_dim) const {
  if (static_cast<int>(coords.size()) != state_dim) {
    throw std::invalid_argument("sampler has " + std::to_string(coords.size()) +
                                " coordinates but the state has " +
                                std::to_string(state_dim));
  }
  Eigen::VectorXd x(state_dim);
  for (int i = 0; i < state_dim; ++i) x[i] = coords[static_cast<std::size_t>(i)].sample(rng);
  return x;
}

Eigen::VectorXd sample_initial_state(const InitialSampler& sampler, std::mt19937_64& rng,
                                     int state_dim) {
  return sampler.sample(rng, state_dim);
}

std::string_view to_string(ProblemId id) {
  switch (id) {
    case ProblemId::ProblemI: return "problem-i";
    case ProblemId::ProblemII: return "problem-ii";
    case ProblemId::Quadrotor2D: return "quadrotor2d";
  }
  return "unknown";
}

ProblemId parse_problem_id(std::string_view name) {
  if (name == "problem-i") return ProblemId::ProblemI;
  if (name == "problem-ii") return ProblemId::ProblemII;
  if (name == "quadrotor2d") return ProblemId::Quadrotor2D;
  throw std::invalid_argument("unknown problem id '" + std::string(name) + "'");
}

Problem builtin_problem(ProblemId id) {
  using CS = CoordinateSampler;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  Problem p;
  switch (id) {
    case ProblemId::ProblemI: {
      p.env.domain = {-1.0, 1.0, -1.0, 1.0};
      p.env.goal = {-0.1, 0.1, -0.1, 0.1};
      p.env.unsafe = {{-0.5, -0.3, -0.5, -0.3},
                      {-0.5, -0.3, 0.3, 0.5},
                      {0.3, 0.5, -0.5, -0.3},
                      {0.3, 0.5, 0.3, 0.5}};
      const CS ring = CS::uniform_union({{-0.9, -0.6}, {0.6, 0.9}});
      p.sampler.coords = {ring, ring, CS::uniform(0.0, kTwoPi)};
      break;
    }
    case ProblemId::ProblemII: {
      p.env.domain = {-1.0, 1.0, -1.0, 1.0};
      p.env.goal = {-0.1, 0.1, -0.1, 0.1};
      p.env.unsafe = {{-0.5, -0.3, -0.5, 0.5}, {0.3, 0.5, -0.5, 0.5}};
      p.sampler.coords = {CS::uniform_union({{-0.9, -0.6}, {0.6, 0.9}}),
                          CS::uniform(-0.3, 0.3), CS::uniform(0.0, kTwoPi)};
      break;
    }
    case ProblemId::Quadrotor2D: {
      p.env.domain = {-1.0, 2.0, 0.0, 2.0};
      p.env.goal = {-1.0, 0.5, 0.25, 0.75};
      p.env.unsafe = {{-1.0, 0.0, 1.25, 2.0}, {-1.0, 2.0, 0.0, 0.25}, {0.5, 1.0, 0.0, 1.0}};
      const CS small = CS::uniform(-0.05, 0.05);
      // (x, xdot, z, zdot, theta, thetadot)
      p.sampler.coords = {CS::uniform(1.4, 1.6), small, CS::uniform(0.3, 1.5),
                          small, small, small};
      p.sampler.px_index = 0;
      p.sampler.py_index = 2;
      break;
    }
  }
  p.env.barrier_level = 1.0;
  p.env.laplacian_rhs = 0.0;
  return p;
}

}  // namespace hclbf
