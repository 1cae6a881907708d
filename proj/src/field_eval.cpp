#include "hclbf/field_eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hclbf {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

namespace {

struct CellLocation {
  int i = 0;  // lower-left node
  int j = 0;
  double tx = 0.0;  // fractional offsets in [0, 1]
  double ty = 0.0;
};

CellLocation locate(const GridSpec& g, Point2 p) {
  if (!g.domain.contains(p)) throw std::out_of_range("point lies outside the field domain");
  const double fx = (p.x - g.domain.xmin) / g.hx();
  const double fy = (p.y - g.domain.ymin) / g.hy();
  CellLocation c;
  c.i = std::clamp(static_cast<int>(std::floor(fx)), 0, g.nx - 2);
  c.j = std::clamp(static_cast<int>(std::floor(fy)), 0, g.ny - 2);
  c.tx = std::clamp(fx - c.i, 0.0, 1.0);
  c.ty = std::clamp(fy - c.j, 0.0, 1.0);
  return c;
}

Vec2 node_gradient(const ScalarField& f, int i, int j) {
  const GridSpec& g = f.grid;
  Vec2 d;
  if (i == 0) {
    d.x = (f.at(1, j) - f.at(0, j)) / g.hx();
  } else if (i == g.nx - 1) {
    d.x = (f.at(i, j) - f.at(i - 1, j)) / g.hx();
  } else {
    d.x = (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * g.hx());
  }
  if (j == 0) {
    d.y = (f.at(i, 1) - f.at(i, 0)) / g.hy();
  } else if (j == g.ny - 1) {
    d.y = (f.at(i, j) - f.at(i, j - 1)) / g.hy();
  } else {
    d.y = (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * g.hy());
  }
  return d;
}

// Cross derivative d/dx of the node y-derivative, using the same central or
// one-sided rule as node_gradient.
double node_cross(const ScalarField& f, int i, int j) {
  const GridSpec& g = f.grid;
  if (i == 0) return (node_gradient(f, 1, j).y - node_gradient(f, 0, j).y) / g.hx();
  if (i == g.nx - 1) return (node_gradient(f, i, j).y - node_gradient(f, i - 1, j).y) / g.hx();
  return (node_gradient(f, i + 1, j).y - node_gradient(f, i - 1, j).y) / (2.0 * g.hx());
}

// Cubic Hermite basis on [0, 1] and derivatives: index 0/1 weights the value
// at the left/right end, index 2/3 the slope at the left/right end.
struct Hermite {
  double w[4];
  double dw[4];
  explicit Hermite(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    w[0] = 2 * t3 - 3 * t2 + 1;
    w[1] = -2 * t3 + 3 * t2;
    w[2] = t3 - 2 * t2 + t;
    w[3] = t3 - t2;
    dw[0] = 6 * t2 - 6 * t;
    dw[1] = -6 * t2 + 6 * t;
    dw[2] = 3 * t2 - 4 * t + 1;
    dw[3] = 3 * t2 - 2 * t;
  }
};

struct Patch {
  double value;
  Vec2 grad;
};

// Bicubic Hermite patch over one cell from node values, node gradients and
// node cross derivatives. C1 across cell edges; reproduces cubics whenever
// the node derivatives are exact.
Patch evaluate_patch(const ScalarField& f, const CellLocation& c) {
  const GridSpec& g = f.grid;
  const double hx = g.hx();
  const double hy = g.hy();
  const Hermite bx(c.tx);
  const Hermite by(c.ty);
  Patch out{0.0, {0.0, 0.0}};
  for (int b = 0; b < 2; ++b) {
    for (int a = 0; a < 2; ++a) {
      const int i = c.i + a;
      const int j = c.j + b;
      const double v = f.at(i, j);
      const Vec2 d = node_gradient(f, i, j);
      const double dxy = node_cross(f, i, j);
      const double ux = bx.w[a], uxs = hx * bx.w[a + 2];
      const double vy = by.w[b], vys = hy * by.w[b + 2];
      const double dux = bx.dw[a] / hx, duxs = bx.dw[a + 2];
      const double dvy = by.dw[b] / hy, dvys = by.dw[b + 2];
      out.value += v * ux * vy + d.x * uxs * vy + d.y * ux * vys + dxy * uxs * vys;
      out.grad.x += v * dux * vy + d.x * duxs * vy + d.y * dux * vys + dxy * duxs * vys;
      out.grad.y += v * ux * dvy + d.x * uxs * dvy + d.y * ux * dvys + dxy * uxs * dvys;
    }
  }
  return out;
}

}  // namespace

double value_at(const ScalarField& field, Point2 p) {
  return evaluate_patch(field, locate(field.grid, p)).value;
}

GradientSample gradient_at(const ScalarField& field, Point2 p) {
  const Patch patch = evaluate_patch(field, locate(field.grid, p));
  return {patch.value, patch.grad, norm(patch.grad)};
}

Vec2 normalized(Vec2 grad, double eps) {
  const double denom = std::max(norm(grad), eps);
  return {grad.x / denom, grad.y / denom};
}

Vec2 normalized_gradient(const ScalarField& field, Point2 p, double eps) {
  return normalized(gradient_at(field, p).grad, eps);
}

}  // namespace hclbf
