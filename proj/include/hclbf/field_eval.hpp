#pragma once

#include "hclbf/geometry.hpp"
#include "hclbf/pde_solver.hpp"

namespace hclbf {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 v);

struct GradientSample {
  double value = 0.0;
  Vec2 grad;
  double grad_norm = 0.0;
};

// The continuous field is a bicubic Hermite patch per cell built from node
// values, node gradients (central differences in the interior, one-sided on
// the outermost ring) and the matching cross derivatives. Value and gradient
// are exact at nodes, continuous across cells, and the gradient is the true
// derivative of the value. Linear data is reproduced exactly.

/// Throws std::out_of_range outside the closed domain.
double value_at(const ScalarField& field, Point2 p);

GradientSample gradient_at(const ScalarField& field, Point2 p);

/// grad / max(|grad|, eps).
Vec2 normalized(Vec2 grad, double eps = 1e-9);
Vec2 normalized_gradient(const ScalarField& field, Point2 p, double eps = 1e-9);

}  // namespace hclbf
