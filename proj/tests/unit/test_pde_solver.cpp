#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dense_poisson.hpp"
#include "hclbf/pde_solver.hpp"

using namespace hclbf;

namespace {

const Environment kProblemI = builtin_problem(ProblemId::ProblemI).env;

GridSpec grid51() { return GridSpec{51, 51, kProblemI.domain}; }

// Mask with only the outer ring fixed, for manufactured solutions.
NodeMask ring_mask(const GridSpec& g) {
  NodeMask m{g, std::vector<NodeTag>(g.size(), NodeTag::Free)};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.on_ring(i, j)) m.tags[g.index(i, j)] = NodeTag::FixedUnsafe;
  return m;
}

template <typename F>
std::vector<double> sample(const GridSpec& g, F f) {
  std::vector<double> v(g.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) v[g.index(i, j)] = f(g.x(i), g.y(j));
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

TEST_CASE("default grid and rasterization") {
  const GridSpec g = default_grid(kProblemI.domain);
  CHECK(g.nx == 201);
  CHECK(g.ny == 201);
  CHECK(g.hx() == doctest::Approx(0.01));
  const NodeMask m = rasterize(kProblemI, g);
  CHECK(m.at(100, 100) == NodeTag::FixedGoal);
  CHECK(m.at(0, 0) == NodeTag::FixedUnsafe);
  CHECK(m.at(200, 37) == NodeTag::FixedUnsafe);
  CHECK(m.at(170, 170) == NodeTag::Free);
  // obstacle corner node (0.3, 0.3) is inside the closed rectangle
  CHECK(m.at(130, 130) == NodeTag::FixedUnsafe);

  std::size_t goal = 0, unsafe = 0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const Point2 p{g.x(i), g.y(j)};
      bool bad = g.on_ring(i, j);
      for (const Rect& r : kProblemI.unsafe) bad = bad || r.contains(p);
      if (bad) ++unsafe;
      else if (kProblemI.goal.contains(p)) ++goal;
    }
  }
  CHECK(goal == 441);
  CHECK(m.count(NodeTag::FixedGoal) == goal);
  CHECK(m.count(NodeTag::FixedUnsafe) == unsafe);
  CHECK(m.count(NodeTag::Free) == g.size() - goal - unsafe);
}

TEST_CASE("grid and mask validation") {
  CHECK_THROWS_AS((GridSpec{2, 10, kProblemI.domain}.validate()), std::invalid_argument);
  CHECK_THROWS_AS(rasterize(kProblemI, GridSpec{51, 51, {0.0, 1.0, 0.0, 1.0}}),
                  std::invalid_argument);
  NodeMask m = ring_mask(grid51());
  m.tags[0] = NodeTag::Free;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("manufactured linear solution") {
  const GridSpec g = grid51();
  const NodeMask m = ring_mask(g);
  const auto exact = sample(g, [](double x, double) { return x; });
  SolveOptions opts;
  opts.tol = 1e-10;
  const ScalarField f = solve_with_boundary(m, exact, 0.0, 1.0, opts);
  CHECK(max_abs_diff(f.values, exact) < 1e-9);
}

TEST_CASE("manufactured quadratic solution") {
  const GridSpec g = grid51();
  const NodeMask m = ring_mask(g);
  const auto exact = sample(g, [](double x, double y) { return x * x + y * y; });
  SolveOptions opts;
  opts.tol = 1e-10;
  const ScalarField f = solve_with_boundary(m, exact, 4.0, 2.0, opts);
  CHECK(max_abs_diff(f.values, exact) < 1e-9);
  CHECK(residual(f) <= 1e-10);
}

TEST_CASE("agrees with the dense LU oracle") {
  const NodeMask m = rasterize(kProblemI, grid51());
  SolveOptions opts;
  opts.tol = 1e-10;
  const ScalarField f = solve(m, 0.0, 1.0, opts);
  // Node (43, 43) sits at (0.72, 0.72); value frozen from the oracle.
  CHECK(f.grid.x(43) == doctest::Approx(0.72));
  CHECK(f.at(43, 43) == doctest::Approx(0.99390038804501213).epsilon(1e-9));

  for (double rhs : {0.0, -6.0}) {
    const auto oracle = testing::dense_poisson_solve(m, rhs, 1.0);
    const ScalarField s = solve(m, rhs, 1.0, opts);
    CHECK(max_abs_diff(s.values, oracle) < 1e-9);
  }
}

TEST_CASE("residual of hand-built fields") {
  const GridSpec g = grid51();
  ScalarField f;
  f.grid = g;
  f.mask = ring_mask(g);
  f.rhs = 0.0;
  f.values = sample(g, [](double x, double y) { return 3.0 * x - y; });
  CHECK(residual(f) < 1e-9);
  f.values = sample(g, [](double x, double y) { return x * x + 2.0 * y * y; });
  CHECK(residual(f) == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("solver failure surfaces residual and iterations") {
  const NodeMask m = rasterize(kProblemI, grid51());
  SolveOptions opts;
  opts.max_iter = 3;
  try {
    (void)solve(m, 0.0, 1.0, opts);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.iterations() == 3);
    CHECK(e.residual() > opts.tol);
  }
  CHECK_THROWS_AS(solve(m, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("harmonic certificate properties") {
  const NodeMask m = rasterize(kProblemI, default_grid(kProblemI.domain));
  const ScalarField f = solve(m, 0.0, 1.0);
  const PropertyReport report = verify_clbf_properties(f, kProblemI);
  CHECK(report.all_pass());
  for (const auto& c : report.checks) CHECK(c.checked > 0);

  SUBCASE("maximum principle") {
    for (std::size_t k = 0; k < f.values.size(); ++k) {
      if (m.tags[k] != NodeTag::Free) continue;
      CHECK(f.values[k] > 0.0);
      CHECK(f.values[k] < 1.0);
    }
  }
  SUBCASE("discrete mean value property") {
    const GridSpec& g = f.grid;
    double worst = 0.0;
    for (int j = 1; j < g.ny - 1; ++j) {
      for (int i = 1; i < g.nx - 1; ++i) {
        if (m.at(i, j) != NodeTag::Free) continue;
        const double mean = 0.25 * (f.at(i + 1, j) + f.at(i - 1, j) + f.at(i, j + 1) + f.at(i, j - 1));
        worst = std::max(worst, std::abs(f.at(i, j) - mean));
      }
    }
    CHECK(worst < 1e-8 * g.hx() * g.hx());
  }
  SUBCASE("independent of the initial guess") {
    SolveOptions opts;
    opts.initial_value = 1.0;
    const ScalarField g = solve(m, 0.0, 1.0, opts);
    CHECK(max_abs_diff(f.values, g.values) < 1e-5);
  }
  SUBCASE("superharmonic field dominates") {
    const ScalarField s = solve(m, -6.0, 1.0);
    for (std::size_t k = 0; k < f.values.size(); ++k) CHECK(s.values[k] >= f.values[k] - 1e-9);
    CHECK(*std::max_element(s.values.begin(), s.values.end()) >= 1.0);
  }
}

TEST_CASE("property audit flags a constant field") {
  const NodeMask m = rasterize(kProblemI, grid51());
  ScalarField f = solve(m, 0.0, 1.0);
  std::fill(f.values.begin(), f.values.end(), 0.5);
  const PropertyReport r = verify_clbf_properties(f, kProblemI);
  CHECK_FALSE(r.checks[0].pass);
  CHECK(r.checks[1].pass);
  CHECK_FALSE(r.checks[2].pass);
  CHECK(r.checks[3].pass);
  CHECK_FALSE(r.all_pass());
  CHECK(r.checks[0].violations.size() == m.count(NodeTag::FixedGoal));
  CHECK(r.checks[0].worst_value == doctest::Approx(0.5));
}
