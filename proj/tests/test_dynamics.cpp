#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "stableflow/dynamics.hpp"

using namespace stableflow;
using stableflow::testing::code_of;
using stableflow::testing::random_model;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Metric form of the field: -(J^T J)^{-1} grad_x Phi(psi(x)), with the chain
// rule gradient J^T grad_y Phi built by hand.
Vec dense_metric_field(const DiffeoModel& model, PotentialKind kind, const Vec& x) {
  const Mat jac = model.jacobian(x);
  const Vec diff = model.forward(x) - model.goal_latent();
  const Vec grad_y = kind == PotentialKind::Euclidean ? Vec(diff / diff.norm()) : diff;
  const Mat metric = jac.transpose() * jac;
  return -metric.ldlt().solve(jac.transpose() * grad_y);
}

double segment_deviation(const Vec& p, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double s = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

}  // namespace

TEST_CASE("latent velocity examples") {
  const Potential euclid{PotentialKind::Euclidean, Vec::Zero(2)};
  const Vec v = latent_velocity(euclid, v2(3, 4));
  CHECK(v[0] == doctest::Approx(-0.6).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(-0.8).epsilon(1e-15));
  for (double delta : {1e-9, 1e-3, 7.0}) CHECK(latent_velocity(euclid, v2(delta, 0)) == v2(-1, 0));
  const Potential quad{PotentialKind::Quadratic, Vec::Zero(2)};
  CHECK(latent_velocity(quad, v2(3, 4)) == v2(-3, -4));
  CHECK(code_of([&] { latent_velocity(euclid, Vec::Zero(2)); }) == ErrorCode::AtGoal);
  CHECK(quad.value(v2(3, 4)) == doctest::Approx(12.5));
  CHECK(euclid.value(v2(3, 4)) == doctest::Approx(5.0));
}

TEST_CASE("identity model field is the unit-speed radial field") {
  const auto model = DiffeoModel::identity({2, 10, 200, 0.45}, 1, AffineNormalizer::identity(2), Vec::Zero(2));
  const VelocityField field(model);
  const Vec f = eval_field(field, v2(3, 4));
  CHECK(std::abs(f[0] + 0.6) < 1e-15);
  CHECK(std::abs(f[1] + 0.8) < 1e-15);
  CHECK(eval_field(field, v2(5e-4, 0)) == Vec::Zero(2));
}

TEST_CASE("field equals the dense metric form") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 2;
    const auto kind = trial % 4 == 1 ? PotentialKind::Quadratic : PotentialKind::Euclidean;
    Vec goal = oracle::random_vec(rng, n, -0.2, 0.2);
    const auto model = random_model(n, 6, 40, 300 + trial, 0.2, 0.45, goal);
    const VelocityField field(model, kind);
    const Vec x = oracle::random_vec(rng, n, -1, 1);
    CHECK((eval_field(field, x) - dense_metric_field(model, kind, x)).norm() < 1e-9);
  }
}

TEST_CASE("dead zone reports zero around the goal") {
  const auto model = random_model(2, 4, 30, 5, 0.3, 0.45, v2(0.1, 0.2));
  const VelocityField field(model);
  const Vec y_star = model.goal_latent();
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    Vec dir = oracle::random_vec(rng, 2, -1, 1);
    dir.normalize();
    const Vec x = model.inverse(y_star + 0.9e-3 * dir);
    CHECK(eval_field(field, x) == Vec::Zero(2));
  }
  CHECK(eval_field(field, model.goal()) == Vec::Zero(2));
}

TEST_CASE("latent speed is one outside the goal ball") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 30; ++trial) {
    const auto model = random_model(2, 10, 100, 400 + trial, 0.15);
    const VelocityField field(model);
    const Vec x = oracle::random_vec(rng, 2, -1, 1);
    CHECK(std::abs((model.jacobian(x) * eval_field(field, x)).norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("identity rollout is a straight line") {
  const auto model = DiffeoModel::identity({2, 10, 200, 0.45}, 1, AffineNormalizer::identity(2), Vec::Zero(2));
  const VelocityField field(model);
  const Rollout r = rollout(field, v2(1, 0), 0.01, 1000);
  CHECK(r.converged);
  CHECK(std::abs(r.steps - (1.0 - 1e-3) / 0.01) <= 1.0);
  for (const auto& x : r.states) CHECK(std::abs(x[1]) < 1e-9);
  CHECK(r.states.back().norm() <= 1e-3);
  for (std::size_t i = 0; i < r.times.size(); ++i) CHECK(r.times[i] == doctest::Approx(0.01 * i));
}

TEST_CASE("rollouts of random models descend and converge") {
  std::mt19937_64 rng(33);
  const double dt = 1e-2;
  for (int trial = 0; trial < 6; ++trial) {
    const auto model = random_model(2, 10, 200, 500 + trial, 0.1, 0.45, oracle::random_vec(rng, 2, -0.2, 0.2));
    const VelocityField field(model);
    for (int start = 0; start < 10; ++start) {
      const Vec x0 = oracle::random_vec(rng, 2, -0.5, 0.5);
      const double d0 = field.latent_distance(x0);
      const Rollout r = rollout(field, x0, dt, 10000);
      REQUIRE(r.converged);
      CHECK(r.steps <= static_cast<int>(std::ceil(1.5 * d0 / dt)));
      double previous = field.lyapunov(r.states.front());
      for (std::size_t i = 1; i < r.states.size(); ++i) {
        const double value = field.lyapunov(r.states[i]);
        CHECK(value < previous);
        previous = value;
      }
      // Pushed forward, the path is the straight segment to the latent goal.
      const Vec ya = model.forward(x0);
      double worst = 0.0;
      for (const auto& x : r.states)
        worst = std::max(worst, segment_deviation(model.forward(x), ya, model.goal_latent()));
      CHECK(worst < 10 * dt);
    }
  }
}

TEST_CASE("quadratic potential rollouts converge too") {
  const auto model = random_model(2, 4, 50, 9, 0.2);
  const VelocityField field(model, PotentialKind::Quadratic);
  const Rollout r = rollout(field, v2(0.5, -0.4), 0.01, 5000);
  CHECK(r.converged);
  CHECK(field.latent_distance(r.states.back()) <= 1e-3);
}

TEST_CASE("rk4 converges at fourth order, euler at first") {
  const auto model = random_model(2, 6, 60, 77, 0.2);
  const VelocityField field(model);
  const Vec x0 = v2(1.5, -1.2);
  REQUIRE(field.latent_distance(x0) > 1.0);
  // Integrate to t = 0.5, well short of the goal ball.
  auto endpoint = [&](double dt, Integrator method) {
    return rollout(field, x0, dt, static_cast<int>(std::lround(0.5 / dt)), method).states.back();
  };
  const Vec reference = endpoint(0.05 / 100, Integrator::Rk4);
  const double rk_coarse = (endpoint(0.05, Integrator::Rk4) - reference).norm();
  const double rk_fine = (endpoint(0.005, Integrator::Rk4) - reference).norm();
  const double eu_coarse = (endpoint(0.05, Integrator::Euler) - reference).norm();
  const double eu_fine = (endpoint(0.005, Integrator::Euler) - reference).norm();
  MESSAGE("rk4 ratio " << rk_coarse / rk_fine << ", euler ratio " << eu_coarse / eu_fine);
  CHECK(rk_coarse / rk_fine > 2000.0);
  CHECK(eu_coarse / eu_fine > 5.0);
  CHECK(eu_coarse / eu_fine < 20.0);
  CHECK(rk_fine < eu_fine);
}

TEST_CASE("rollout argument validation") {
  const auto model = random_model(2, 2, 10, 1, 0.1);
  const VelocityField field(model);
  CHECK(code_of([&] { rollout(field, v2(1, 1), 0.0, 10); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { rollout(field, v2(1, 1), 0.01, 0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { rollout(field, Vec::Ones(3), 0.01, 10); }) == ErrorCode::DimensionMismatch);
  const Rollout capped = rollout(field, v2(1, 1), 0.01, 5);
  CHECK_FALSE(capped.converged);
  CHECK(capped.steps == 5);
  CHECK(capped.states.size() == 6);
}

TEST_CASE("field grid") {
  const auto model = DiffeoModel::identity({2, 4, 20, 0.45}, 1, AffineNormalizer::identity(2), Vec::Zero(2));
  const VelocityField field(model);
  const auto grid = field_grid(field, {}, 3);
  REQUIRE(grid.size() == 9);
  CHECK(grid[0].x == v2(-1, -1));
  CHECK(grid[1].x == v2(0, -1));
  CHECK(grid[3].x == v2(-1, 0));
  for (const auto& s : grid) {
    if (s.x.norm() == 0.0) {
      CHECK(s.v == Vec::Zero(2));
    } else {
      CHECK((s.v + s.x / s.x.norm()).norm() < 1e-15);
    }
  }
  const auto fine = field_grid(field, {-1, 1, -1, 1}, 8);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    const auto& mirror = fine[fine.size() - 1 - i];
    CHECK((mirror.x + fine[i].x).norm() < 1e-15);
    CHECK((mirror.v + fine[i].v).norm() < 1e-14);
  }

  const auto trained = random_model(2, 10, 200, 3, 0.3);
  for (const auto& s : field_grid(VelocityField(trained), {-3, 3, -3, 3}, 20)) CHECK(s.v.allFinite());

  const auto model3 = random_model(3, 3, 10, 2, 0.1);
  const VelocityField field3(model3);
  CHECK(code_of([&] { field_grid(field3, {}, 3); }) == ErrorCode::DimensionMismatch);
  const auto sliced = field_grid(field3, {}, 3, Vec::Constant(1, 0.25));
  REQUIRE(sliced.size() == 9);
  CHECK(sliced[4].x[2] == 0.25);
}

TEST_CASE("grid respects the normalizer") {
  Vec scale(2), offset(2);
  scale << 0.5, 0.5;
  offset << 10, 20;
  const auto model = DiffeoModel::identity({2, 2, 10, 0.45}, 1, AffineNormalizer(scale, offset), Vec::Zero(2));
  const VelocityField field(model);
  const auto grid = field_grid(field, {8, 12, 18, 22}, 3);
  // Original point (12, 20) normalizes to (1, 0); unit latent speed is 2
  // original units per time unit.
  CHECK((grid[5].v - v2(-2, 0)).norm() < 1e-14);
}
