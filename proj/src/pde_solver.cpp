#include "hclbf/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hclbf {

void GridSpec::validate() const {
  if (nx < 3 || ny < 3) throw std::invalid_argument("grid needs at least 3 nodes per axis");
  domain.validate();
}

GridSpec default_grid(const Rect& domain) {
  constexpr double kSpacing = 0.01;
  GridSpec g;
  g.domain = domain;
  g.nx = static_cast<int>(std::lround(domain.width() / kSpacing)) + 1;
  g.ny = static_cast<int>(std::lround(domain.height() / kSpacing)) + 1;
  g.nx = std::max(g.nx, 3);
  g.ny = std::max(g.ny, 3);
  return g;
}

std::size_t NodeMask::count(NodeTag t) const {
  return static_cast<std::size_t>(std::count(tags.begin(), tags.end(), t));
}

void NodeMask::validate() const {
  grid.validate();
  if (tags.size() != grid.size()) throw std::invalid_argument("mask size does not match grid");
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (grid.on_ring(i, j) && at(i, j) == NodeTag::Free) {
        throw std::invalid_argument("outermost grid ring must be fixed");
      }
    }
  }
  if (count(NodeTag::Free) == 0) throw std::invalid_argument("mask has no free nodes");
}

namespace {

// Closed containment with a slack of 1e-9 cell widths so that nodes meant to
// sit on an edge are not lost to rounding in user-supplied coordinates.
bool node_in(const Rect& r, double x, double y, double sx, double sy) {
  return x >= r.xmin - sx && x <= r.xmax + sx && y >= r.ymin - sy && y <= r.ymax + sy;
}

}  // namespace

NodeMask rasterize(const Environment& env, const GridSpec& grid) {
  grid.validate();
  const Rect& d = env.domain;
  const Rect& g = grid.domain;
  if (g.xmin != d.xmin || g.xmax != d.xmax || g.ymin != d.ymin || g.ymax != d.ymax) {
    throw std::invalid_argument("grid does not span the environment domain");
  }
  const double sx = 1e-9 * grid.hx();
  const double sy = 1e-9 * grid.hy();

  NodeMask mask{grid, std::vector<NodeTag>(grid.size(), NodeTag::Free)};
  for (int j = 0; j < grid.ny; ++j) {
    const double y = grid.y(j);
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i);
      NodeTag tag = NodeTag::Free;
      if (grid.on_ring(i, j)) {
        tag = NodeTag::FixedUnsafe;
      } else if (std::any_of(env.unsafe.begin(), env.unsafe.end(),
                             [&](const Rect& r) { return node_in(r, x, y, sx, sy); })) {
        tag = NodeTag::FixedUnsafe;
      } else if (node_in(env.goal, x, y, sx, sy)) {
        tag = NodeTag::FixedGoal;
      }
      mask.tags[grid.index(i, j)] = tag;
    }
  }
  return mask;
}

namespace {

struct Stencil {
  double cx;      // 1/hx^2
  double cy;      // 1/hy^2
  double center;  // 2/hx^2 + 2/hy^2
};

Stencil make_stencil(const GridSpec& g) {
  const double cx = 1.0 / (g.hx() * g.hx());
  const double cy = 1.0 / (g.hy() * g.hy());
  return {cx, cy, 2.0 * (cx + cy)};
}

double laplacian_at(const std::vector<double>& v, std::size_t k, std::size_t nx,
                    const Stencil& s) {
  return (v[k + 1] + v[k - 1]) * s.cx + (v[k + nx] + v[k - nx]) * s.cy - v[k] * s.center;
}

double max_residual(const std::vector<double>& v, std::span<const std::size_t> free_nodes,
                    std::size_t nx, const Stencil& s, double rhs) {
  double r = 0.0;
  for (std::size_t k : free_nodes) r = std::max(r, std::abs(laplacian_at(v, k, nx, s) - rhs));
  return r;
}

double optimal_omega(const GridSpec& g) {
  // Jacobi spectral radius for the full rectangle; obstacles only lower it.
  const double cx = 1.0 / (g.hx() * g.hx());
  const double cy = 1.0 / (g.hy() * g.hy());
  const double rho = (cx * std::cos(std::numbers::pi / (g.nx - 1)) +
                      cy * std::cos(std::numbers::pi / (g.ny - 1))) /
                     (cx + cy);
  return 2.0 / (1.0 + std::sqrt(1.0 - rho * rho));
}

}  // namespace

ScalarField solve_with_boundary(const NodeMask& mask, std::span<const double> fixed_values,
                                double rhs, double level, const SolveOptions& options) {
  mask.validate();
  if (!(options.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  const GridSpec& g = mask.grid;
  if (fixed_values.size() != g.size()) {
    throw std::invalid_argument("boundary value array does not match grid");
  }

  ScalarField field{g, std::vector<double>(g.size()), mask, rhs, level, {}};
  std::vector<std::size_t> red;
  std::vector<std::size_t> black;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (mask.tags[k] == NodeTag::Free) {
        field.values[k] = options.initial_value;
        ((i + j) % 2 == 0 ? red : black).push_back(k);
      } else {
        field.values[k] = fixed_values[k];
      }
    }
  }
  std::vector<std::size_t> all_free(red);
  all_free.insert(all_free.end(), black.begin(), black.end());

  const Stencil s = make_stencil(g);
  const double omega = options.omega > 0.0 ? options.omega : optimal_omega(g);
  const auto nx = static_cast<std::size_t>(g.nx);
  std::vector<double>& v = field.values;

  auto sweep = [&](const std::vector<std::size_t>& nodes) {
    for (std::size_t k : nodes) {
      const double gs = ((v[k + 1] + v[k - 1]) * s.cx + (v[k + nx] + v[k - nx]) * s.cy - rhs) /
                        s.center;
      v[k] += omega * (gs - v[k]);
    }
  };

  constexpr long kCheckEvery = 8;
  double res = max_residual(v, all_free, nx, s, rhs);
  long iter = 0;
  while (res > options.tol && iter < options.max_iter) {
    sweep(red);
    sweep(black);
    ++iter;
    if (iter % kCheckEvery == 0 || iter == options.max_iter) {
      res = max_residual(v, all_free, nx, s, rhs);
    }
  }
  field.stats = {iter, res};
  if (res > options.tol) {
    throw SolverError("solver did not converge: residual " + std::to_string(res) + " after " +
                          std::to_string(iter) + " iterations",
                      res, iter);
  }
  return field;
}

ScalarField solve(const NodeMask& mask, double rhs, double level, const SolveOptions& options) {
  if (!(level > 0.0)) throw std::invalid_argument("barrier level must be positive");
  std::vector<double> fixed(mask.tags.size(), 0.0);
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    if (mask.tags[k] == NodeTag::FixedUnsafe) fixed[k] = level;
  }
  SolveOptions scaled = options;
  scaled.tol = options.tol * level;
  return solve_with_boundary(mask, fixed, rhs, level, scaled);
}

double residual(const ScalarField& field) {
  const GridSpec& g = field.grid;
  const Stencil s = make_stencil(g);
  const auto nx = static_cast<std::size_t>(g.nx);
  double r = 0.0;
  for (int j = 1; j < g.ny - 1; ++j) {
    for (int i = 1; i < g.nx - 1; ++i) {
      const std::size_t k = g.index(i, j);
      if (field.mask.tags[k] != NodeTag::Free) continue;
      r = std::max(r, std::abs(laplacian_at(field.values, k, nx, s) - field.rhs));
    }
  }
  return r;
}

PropertyReport verify_clbf_properties(const ScalarField& field, const Environment& env) {
  const double c = env.barrier_level;
  PropertyReport report;
  report.checks[0].name = "V = 0 on goal";
  report.checks[1].name = "V > 0 off goal";
  report.checks[2].name = "V >= c on unsafe";
  report.checks[3].name = "V < c off unsafe";

  // Worst violation is the one furthest from satisfying the condition.
  auto record = [](PropertyCheck& chk, std::size_t k, double badness) {
    if (chk.violations.empty() || badness > chk.worst_value) {
      chk.worst_node = k;
      chk.worst_value = badness;
    }
    chk.violations.push_back(k);
    chk.pass = false;
  };

  for (std::size_t k = 0; k < field.values.size(); ++k) {
    const double v = field.values[k];
    const NodeTag tag = field.mask.tags[k];
    if (tag == NodeTag::FixedGoal) {
      ++report.checks[0].checked;
      if (v != 0.0) record(report.checks[0], k, std::abs(v));
    } else {
      ++report.checks[1].checked;
      if (!(v > 0.0)) record(report.checks[1], k, -v);
    }
    if (tag == NodeTag::FixedUnsafe) {
      ++report.checks[2].checked;
      if (!(v >= c)) record(report.checks[2], k, c - v);
    } else {
      ++report.checks[3].checked;
      if (!(v < c)) record(report.checks[3], k, v - c);
    }
  }
  // Report the field value at the witness rather than the badness measure.
  for (PropertyCheck& chk : report.checks) {
    if (!chk.pass) chk.worst_value = field.values[chk.worst_node];
  }
  return report;
}

}  // namespace hclbf
