#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hclbf/geometry.hpp"

using namespace hclbf;

TEST_CASE("classify on Problem I") {
  const Environment env = builtin_problem(ProblemId::ProblemI).env;
  CHECK(classify(env, {0.0, 0.0}) == RegionLabel::Goal);
  CHECK(classify(env, {-0.4, -0.4}) == RegionLabel::Unsafe);
  CHECK(classify(env, {0.7, 0.7}) == RegionLabel::Safe);
  CHECK(classify(env, {1.0, 0.0}) == RegionLabel::Unsafe);
  CHECK(classify(env, {1.0 + 1e-12, 0.0}) == RegionLabel::OutOfDomain);
  // closed containment on every edge
  CHECK(classify(env, {0.1, 0.1}) == RegionLabel::Goal);
  CHECK(classify(env, {-0.3, -0.5}) == RegionLabel::Unsafe);
}

TEST_CASE("builtin problems carry the stated geometry") {
  const Problem p1 = builtin_problem(ProblemId::ProblemI);
  REQUIRE(p1.env.unsafe.size() == 4);
  for (const Rect& r : p1.env.unsafe) {
    CHECK(r.width() == doctest::Approx(0.2));
    CHECK(r.height() == doctest::Approx(0.2));
  }
  CHECK(p1.env.barrier_level == 1.0);

  const Problem p2 = builtin_problem(ProblemId::ProblemII);
  REQUIRE(p2.env.unsafe.size() == 2);
  for (const Rect& r : p2.env.unsafe) {
    CHECK(r.width() == doctest::Approx(0.2));
    CHECK(r.height() == doctest::Approx(1.0));
  }

  const Problem q = builtin_problem(ProblemId::Quadrotor2D);
  CHECK(q.env.goal.xmin == q.env.domain.xmin);
  CHECK(q.env.unsafe.size() == 3);
  CHECK(q.sampler.coords.size() == 6);
  CHECK(q.sampler.py_index == 2);
  for (auto id : {ProblemId::ProblemI, ProblemId::ProblemII, ProblemId::Quadrotor2D}) {
    CHECK_NOTHROW(builtin_problem(id).env.validate());
    CHECK(parse_problem_id(to_string(id)) == id);
  }
  CHECK_THROWS_AS(parse_problem_id("problem-iii"), std::invalid_argument);
}

TEST_CASE("environment validation") {
  Environment env = builtin_problem(ProblemId::ProblemI).env;
  SUBCASE("goal overlapping an obstacle") {
    env.unsafe.push_back({-0.05, 0.05, -0.05, 0.05});
    CHECK_THROWS_AS(env.validate(), std::invalid_argument);
  }
  SUBCASE("obstacle outside the domain") {
    env.unsafe.push_back({0.9, 1.1, 0.0, 0.1});
    CHECK_THROWS_AS(env.validate(), std::invalid_argument);
  }
  SUBCASE("non-positive barrier level") {
    env.barrier_level = 0.0;
    CHECK_THROWS_AS(env.validate(), std::invalid_argument);
  }
  SUBCASE("degenerate rectangle") {
    env.goal = {0.1, 0.1, 0.0, 0.1};
    CHECK_THROWS_AS(env.validate(), std::invalid_argument);
  }
}

TEST_CASE("shared goal/obstacle edge labels unsafe") {
  Environment env;
  env.domain = {0.0, 1.0, 0.0, 1.0};
  env.goal = {0.2, 0.4, 0.2, 0.4};
  env.unsafe = {{0.4, 0.6, 0.2, 0.4}};
  CHECK_NOTHROW(env.validate());
  CHECK(classify(env, {0.4, 0.3}) == RegionLabel::Unsafe);
  CHECK(classify(env, {0.39, 0.3}) == RegionLabel::Goal);
}

TEST_CASE("classify agrees with rectangle containment") {
  std::mt19937_64 rng(11);
  for (auto id : {ProblemId::ProblemI, ProblemId::ProblemII, ProblemId::Quadrotor2D}) {
    const Environment env = builtin_problem(id).env;
    const Rect& d = env.domain;
    std::uniform_real_distribution<double> ux(d.xmin - 0.1, d.xmax + 0.1);
    std::uniform_real_distribution<double> uy(d.ymin - 0.1, d.ymax + 0.1);
    for (int k = 0; k < 20000; ++k) {
      const Point2 p{ux(rng), uy(rng)};
      const RegionLabel label = classify(env, p);
      CHECK(label == classify(env, p));
      bool in_unsafe = p.x == d.xmin || p.x == d.xmax || p.y == d.ymin || p.y == d.ymax;
      for (const Rect& r : env.unsafe) in_unsafe = in_unsafe || r.contains(p);
      if (!d.contains(p)) {
        CHECK(label == RegionLabel::OutOfDomain);
      } else if (in_unsafe) {
        CHECK(label == RegionLabel::Unsafe);
      } else {
        CHECK((label == RegionLabel::Goal) == env.goal.contains(p));
      }
    }
  }
}

TEST_CASE("samplers stay on their support") {
  std::mt19937_64 rng(3);
  const Problem p1 = builtin_problem(ProblemId::ProblemI);
  const Problem p2 = builtin_problem(ProblemId::ProblemII);
  const Problem q = builtin_problem(ProblemId::Quadrotor2D);
  for (int k = 0; k < 2000; ++k) {
    const Eigen::VectorXd a = sample_initial_state(p1.sampler, rng, 3);
    CHECK((std::abs(a[0]) >= 0.6 && std::abs(a[0]) <= 0.9));
    CHECK((std::abs(a[1]) >= 0.6 && std::abs(a[1]) <= 0.9));
    CHECK((a[2] >= 0.0 && a[2] < 2.0 * std::numbers::pi));

    const Eigen::VectorXd b = sample_initial_state(p2.sampler, rng, 3);
    CHECK((b[1] >= -0.3 && b[1] <= 0.3));

    const Eigen::VectorXd c = sample_initial_state(q.sampler, rng, 6);
    CHECK((c[4] >= -0.05 && c[4] <= 0.05));
    CHECK((c[0] >= 1.4 && c[0] <= 1.6));
  }
  CHECK_THROWS_AS(p1.sampler.sample(rng, 4), std::invalid_argument);
}

TEST_CASE("sampled initial positions are safe") {
  for (auto id : {ProblemId::ProblemI, ProblemId::ProblemII, ProblemId::Quadrotor2D}) {
    const Problem p = builtin_problem(id);
    const int dim = static_cast<int>(p.sampler.coords.size());
    std::mt19937_64 rng(2024);
    long unsafe = 0;
    for (int k = 0; k < 100000; ++k) {
      const Eigen::VectorXd x = p.sampler.sample(rng, dim);
      const Point2 pos{x[p.sampler.px_index], x[p.sampler.py_index]};
      if (classify(p.env, pos) != RegionLabel::Safe) ++unsafe;
    }
    CHECK_MESSAGE(unsafe == 0, to_string(id));
  }
}

TEST_CASE("union sampler weights intervals by length") {
  const auto s = CoordinateSampler::uniform_union({{0.0, 1.0}, {10.0, 13.0}});
  std::mt19937_64 rng(5);
  int upper = 0;
  const int n = 40000;
  for (int k = 0; k < n; ++k) upper += s.sample(rng) >= 10.0;
  CHECK(static_cast<double>(upper) / n == doctest::Approx(0.75).epsilon(0.02));
  CHECK(CoordinateSampler::fixed(2.5).sample(rng) == 2.5);
}
