#pragma once

#include <string>

#include "stableflow/core.hpp"

namespace stableflow {

enum class PotentialKind {
  Euclidean,  // ||y - y*||, unit-speed straight lines
  Quadratic,  // 0.5 ||y - y*||^2
};

PotentialKind parse_potential_kind(const std::string& name);
std::string to_string(PotentialKind kind);

/// Latent potential centred at the latent goal.
struct Potential {
  PotentialKind kind = PotentialKind::Euclidean;
  Vec goal;

  double value(const Vec& y) const;
};

/// -grad Phi(y). Throws AtGoal only when y coincides exactly with the goal
/// under the Euclidean kind.
Vec latent_velocity(const Potential& potential, const Vec& y);

}  // namespace stableflow
