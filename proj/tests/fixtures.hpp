#pragma once

#include <functional>
#include <optional>
#include <random>

#include "stableflow/diffeo_model.hpp"
#include "stableflow/error.hpp"

namespace stableflow::testing {

/// Model with frames from `seed` and weights uniform in [-magnitude, magnitude].
inline DiffeoModel random_model(int dim, int layers, int features, std::uint64_t seed, double magnitude,
                                double lengthscale = 0.45, Vec goal = {}) {
  if (goal.size() == 0) goal = Vec::Zero(dim);
  DiffeoModel model =
      DiffeoModel::identity({dim, layers, features, lengthscale}, seed, AffineNormalizer::identity(dim), goal);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> u(-magnitude, magnitude);
  Vec theta(static_cast<Eigen::Index>(model.parameter_count()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = u(rng);
  model.set_parameters(theta);
  return model;
}

inline Trajectory make_trajectory(const std::vector<double>& t, const std::vector<std::vector<double>>& x) {
  std::vector<Vec> pos;
  for (const auto& p : x) pos.push_back(Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size())));
  return Trajectory(t, pos);
}

/// Category of the Error thrown by f, or nullopt if it returns normally.
inline std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace stableflow::testing
