#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "stableflow/core.hpp"
#include "stableflow/error.hpp"

using namespace stableflow;
using stableflow::testing::code_of;
using stableflow::testing::make_trajectory;

TEST_CASE("trajectory invariants are enforced") {
  CHECK(code_of([] { make_trajectory({0, 1, 1}, {{0, 0}, {1, 1}, {2, 2}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { make_trajectory({0, 1}, {{0, 0}, {1, 1, 1}}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] { make_trajectory({0}, {{0}}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] { Trajectory({0, 1}, {Vec::Zero(2)}); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([] { Trajectory({0, 1}, {Vec::Zero(2), Vec::Zero(2)}, std::vector<Vec>{Vec::Zero(2)}); }) ==
        ErrorCode::LengthMismatch);
  CHECK(code_of([] { DemonstrationSet({}); }) == ErrorCode::Empty);
  CHECK(code_of([] {
          DemonstrationSet({make_trajectory({0, 1}, {{0, 0}, {1, 1}}), make_trajectory({0, 1}, {{0, 0, 0}, {1, 1, 1}})});
        }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("fit_normalizer on a 100 x 100 box") {
  const DemonstrationSet data({make_trajectory({0, 1}, {{0, 0}, {100, 100}})});
  const auto norm = fit_normalizer(data);
  CHECK(norm.scale()[0] == doctest::Approx(0.01));
  CHECK(norm.scale()[1] == doctest::Approx(0.01));
  CHECK(norm.normalize(Vec::Constant(2, 50.0)).norm() == doctest::Approx(0.0));
}

TEST_CASE("fit_normalizer is identity-like on the unit box") {
  const DemonstrationSet data({make_trajectory({0, 1}, {{-0.5, 0.5}, {0.5, -0.5}})});
  const auto norm = fit_normalizer(data);
  CHECK(norm.scale().isApprox(Vec::Ones(2)));
  CHECK(norm.offset().norm() < 1e-15);
}

TEST_CASE("fit_normalizer on box [2,4] x [-1,3]") {
  const DemonstrationSet data({make_trajectory({0, 1, 2}, {{2, -1}, {3, 1}, {4, 3}})});
  const auto norm = fit_normalizer(data);

  // Independent per-coordinate min/max scan.
  Vec lo(2), hi(2);
  for (int d = 0; d < 2; ++d) {
    std::vector<double> coords;
    for (const auto& x : data[0].positions()) coords.push_back(x[d]);
    const auto [mn, mx] = std::minmax_element(coords.begin(), coords.end());
    lo[d] = *mn;
    hi[d] = *mx;
  }
  Vec p(2);
  p << 4, 3;
  const Vec expected = ((p - 0.5 * (lo + hi)).array() / (hi - lo).array()).matrix();
  CHECK(expected.isApprox(Vec::Constant(2, 0.5)));

  Vec a(2);
  a << 3, 1;
  CHECK(norm.normalize(a).norm() < 1e-15);
  CHECK((norm.normalize(p) - expected).norm() < 1e-15);
}

TEST_CASE("fit_normalizer rejects constant dimensions") {
  const DemonstrationSet data({make_trajectory({0, 1}, {{0, 2}, {1, 2}})});
  CHECK(code_of([&] { fit_normalizer(data); }) == ErrorCode::DegenerateExtent);
}

TEST_CASE("normalize and denormalize are inverse") {
  std::mt19937_64 rng(7);
  const AffineNormalizer norm(oracle::random_vec(rng, 3, 0.01, 10.0), oracle::random_vec(rng, 3, -50, 50));
  for (int i = 0; i < 1000; ++i) {
    const Vec x = oracle::random_vec(rng, 3, -100, 100);
    CHECK((norm.denormalize(norm.normalize(x)) - x).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((norm.normalize(norm.denormalize(x)) - x).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("fitted normalizer maps data into the half box") {
  std::mt19937_64 rng(11);
  std::vector<Trajectory> trajs;
  for (int k = 0; k < 4; ++k) {
    std::vector<double> t;
    std::vector<Vec> x;
    for (int i = 0; i < 50; ++i) {
      t.push_back(i);
      x.push_back(oracle::random_vec(rng, 2, -30, 70));
    }
    trajs.emplace_back(t, x);
  }
  const DemonstrationSet data(trajs);
  const auto norm = fit_normalizer(data);
  for (const auto& traj : data.trajectories())
    for (const auto& x : traj.positions()) {
      const Vec z = norm.normalize(x);
      CHECK(z.maxCoeff() <= 0.5 + 1e-15);
      CHECK(z.minCoeff() >= -0.5 - 1e-15);
    }
}

TEST_CASE("velocities scale per dimension without offset") {
  AffineNormalizer norm(Vec::Constant(2, 0.5), Vec::Constant(2, 10.0));
  Vec v(2);
  v << 2, -4;
  CHECK(norm.normalize_velocity(v).isApprox(Vec(v * 0.5)));
  const auto traj = estimate_velocities(make_trajectory({0, 1, 2}, {{10, 10}, {12, 14}, {14, 18}}));
  const auto scaled = norm.normalize(traj);
  CHECK(scaled.velocities()[1].isApprox(Vec(traj.velocities()[1] * 0.5)));
  CHECK(scaled.times() == traj.times());
}

TEST_CASE("estimate_velocities on linear motion") {
  const auto traj = estimate_velocities(make_trajectory({0, 1, 2}, {{0, 0}, {1, 2}, {2, 4}}));
  for (const auto& v : traj.velocities()) {
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(2.0));
  }
}

TEST_CASE("estimate_velocities is exact for quadratics at interior points") {
  const auto traj = estimate_velocities(make_trajectory({0, 1, 2}, {{0, 0}, {1, 0}, {4, 0}}));
  CHECK(traj.velocities()[1][0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(traj.velocities()[1][1] == 0.0);
}

TEST_CASE("estimate_velocities with nonuniform spacing") {
  const auto traj = estimate_velocities(make_trajectory({0, 0.5, 2}, {{0, 1}, {0.5, 1}, {2, 1}}));
  CHECK(std::abs(traj.velocities()[1][0] - 1.0) < 1e-14);
  // Quadratic on the same nonuniform grid: x = t^2 has derivative 1 at t = 0.5.
  const auto quad = estimate_velocities(make_trajectory({0, 0.5, 2}, {{0, 0}, {0.25, 0}, {4, 0}}));
  CHECK(std::abs(quad.velocities()[1][0] - 1.0) < 1e-14);
}

TEST_CASE("estimate_velocities exact on affine uniform trajectories") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x0 = oracle::random_vec(rng, 3, -5, 5);
    const Vec vel = oracle::random_vec(rng, 3, -5, 5);
    std::vector<double> t;
    std::vector<Vec> x;
    for (int i = 0; i < 30; ++i) {
      t.push_back(0.1 * i);
      x.push_back(x0 + vel * (0.1 * i));
    }
    const auto traj = estimate_velocities(Trajectory(t, x));
    for (const auto& v : traj.velocities()) CHECK((v - vel).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("estimate_velocities needs three samples") {
  CHECK(code_of([] { estimate_velocities(make_trajectory({0, 1}, {{0, 0}, {1, 1}})); }) == ErrorCode::TooShort);
}

TEST_CASE("extract_goal averages endpoints") {
  SUBCASE("single trajectory") {
    const DemonstrationSet data({make_trajectory({0, 1}, {{1, 1}, {0.1, -0.2}})});
    const Vec g = extract_goal(data);
    CHECK(g[0] == doctest::Approx(0.1));
    CHECK(g[1] == doctest::Approx(-0.2));
  }
  SUBCASE("symmetric endpoints") {
    const DemonstrationSet data(
        {make_trajectory({0, 1}, {{3, 3}, {1, 0}}), make_trajectory({0, 1}, {{3, 3}, {-1, 0}})});
    CHECK(extract_goal(data).norm() < 1e-15);
  }
  SUBCASE("scattered near the origin") {
    std::mt19937_64 rng(5);
    std::vector<Trajectory> trajs;
    for (int i = 0; i < 7; ++i) {
      Vec end = oracle::random_vec(rng, 2, -1, 1);
      end *= 0.999e-3 / end.norm() * std::uniform_real_distribution<double>(0, 1)(rng);
      trajs.emplace_back(std::vector<double>{0, 1}, std::vector<Vec>{Vec::Ones(2), end});
    }
    CHECK(extract_goal(DemonstrationSet(trajs)).norm() < 1e-3);
  }
}

TEST_CASE("demonstration JSON and CSV round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "stableflow_core_test";
  std::filesystem::create_directories(dir);
  const auto traj = estimate_velocities(make_trajectory({0, 0.5, 1.25}, {{0.1, 0.2}, {0.3, 0.4}, {1.0 / 3.0, 2}}));
  const DemonstrationSet data({traj, make_trajectory({0, 1}, {{5, 6}, {7, 8}})});
  save_demonstrations(data, dir / "demo.json");
  const auto loaded = load_demonstrations(dir / "demo.json");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].positions()[2][0] == 1.0 / 3.0);
  CHECK(loaded[0].has_velocities());
  CHECK_FALSE(loaded[1].has_velocities());
  CHECK(loaded[0].velocities()[1] == traj.velocities()[1]);

  {
    std::ofstream csv(dir / "one.csv");
    csv << "t,x1,x2,v1,v2\n0,1,2,0.5,0.5\n1,1.5,2.5,0.5,0.5\n2,2,3,0.5,0.5\n";
  }
  const auto from_csv = load_demonstrations(dir / "one.csv");
  REQUIRE(from_csv.size() == 1);
  CHECK(from_csv[0].size() == 3);
  CHECK(from_csv[0].velocities()[2][1] == 0.5);

  {
    std::ofstream bad(dir / "bad.json");
    bad << "{\"dim\": 2, \"trajectories\": [{\"t\": [0, 1], \"x\": [[0, 0], [1]]}]}";
  }
  CHECK(code_of([&] { load_demonstrations(dir / "bad.json"); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { load_demonstrations(dir / "missing.json"); }) == ErrorCode::Io);
}
