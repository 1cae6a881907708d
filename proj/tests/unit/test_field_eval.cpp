#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "hclbf/field_eval.hpp"
#include "hclbf/pde_solver.hpp"

using namespace hclbf;

namespace {

// Field holding f at the nodes of an n x n lattice on [0, 1]^2 (h = 0.25 for n = 5).
template <typename F>
ScalarField field_from(int n, F f) {
  ScalarField s;
  s.grid = GridSpec{n, n, {0.0, 1.0, 0.0, 1.0}};
  s.mask.grid = s.grid;
  s.mask.tags.assign(s.grid.size(), NodeTag::Free);
  s.values.resize(s.grid.size());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) s.values[s.grid.index(i, j)] = f(s.grid.x(i), s.grid.y(j));
  return s;
}

const ScalarField& harmonic_problem_i() {
  static const ScalarField f = [] {
    const Environment env = builtin_problem(ProblemId::ProblemI).env;
    return solve(rasterize(env, default_grid(env.domain)), 0.0, 1.0);
  }();
  return f;
}

}  // namespace

TEST_CASE("vector helpers") {
  CHECK(dot({1.0, 2.0}, {3.0, -1.0}) == 1.0);
  CHECK(norm({3.0, 4.0}) == 5.0);
  const Vec2 n = normalized({3.0, 4.0});
  CHECK(n.x == doctest::Approx(0.6));
  CHECK(n.y == doctest::Approx(0.8));
  const Vec2 z = normalized({0.0, 0.0});
  CHECK(z.x == 0.0);
  CHECK(z.y == 0.0);
}

TEST_CASE("linear data is reproduced exactly") {
  const ScalarField f = field_from(5, [](double x, double) { return x; });
  CHECK(value_at(f, {0.375, 0.5}) == doctest::Approx(0.375).epsilon(1e-12));
  const GradientSample g = gradient_at(f, {0.375, 0.5});
  CHECK(g.value == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(g.grad.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.grad.y == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(g.grad_norm == doctest::Approx(1.0).epsilon(1e-12));
  const GradientSample corner = gradient_at(f, {1.0, 1.0});
  CHECK(corner.grad.x == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quadratic gradient at an interior node") {
  const ScalarField f = field_from(5, [](double x, double y) { return x * x + 0.5 * y; });
  // central differences are exact for quadratics at interior nodes
  const GradientSample g = gradient_at(f, {0.5, 0.5});
  CHECK(g.grad.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.grad.y == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("exact at every node") {
  const ScalarField& f = harmonic_problem_i();
  const GridSpec& g = f.grid;
  for (int j = 0; j < g.ny; j += 7)
    for (int i = 0; i < g.nx; i += 5) CHECK(value_at(f, {g.x(i), g.y(j)}) == doctest::Approx(f.at(i, j)).epsilon(1e-12));
}

TEST_CASE("domain checks") {
  const ScalarField f = field_from(5, [](double x, double) { return x; });
  CHECK_THROWS_AS(value_at(f, {1.0 + 1e-9, 0.5}), std::out_of_range);
  CHECK_THROWS_AS(gradient_at(f, {0.5, -0.1}), std::out_of_range);
  CHECK_NOTHROW(value_at(f, {1.0, 0.0}));
}

TEST_CASE("continuity across cell edges") {
  const ScalarField& f = harmonic_problem_i();
  const double h = f.grid.hx();
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> cell(1, f.grid.nx - 3);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const double xe = f.grid.x(cell(rng));
    const double y = f.grid.y(cell(rng)) + h * frac(rng);
    const double eps = 1e-9;
    const GradientSample left = gradient_at(f, {xe - eps, y});
    const GradientSample right = gradient_at(f, {xe + eps, y});
    CHECK(std::abs(left.value - right.value) < 1e-7);
    CHECK(std::abs(left.grad.x - right.grad.x) < 1e-5);
    CHECK(std::abs(left.grad.y - right.grad.y) < 1e-5);
  }
}

TEST_CASE("gradient matches finite differences of the value") {
  const ScalarField& f = harmonic_problem_i();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.98, 0.98);
  const double h = 1e-6;
  for (int k = 0; k < 1000; ++k) {
    const Point2 p{u(rng), u(rng)};
    const GradientSample g = gradient_at(f, p);
    const double fx = (value_at(f, {p.x + h, p.y}) - value_at(f, {p.x - h, p.y})) / (2.0 * h);
    const double fy = (value_at(f, {p.x, p.y + h}) - value_at(f, {p.x, p.y - h})) / (2.0 * h);
    CHECK(std::abs(fx - g.grad.x) < 1e-4);
    CHECK(std::abs(fy - g.grad.y) < 1e-4);
  }
}

TEST_CASE("normalized gradient has unit length away from critical points") {
  const ScalarField& f = harmonic_problem_i();
  const Vec2 n = normalized_gradient(f, {0.75, 0.7});
  CHECK(norm(n) == doctest::Approx(1.0));
  CHECK(n.x > 0.0);
}
