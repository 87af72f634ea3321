#include "stableflow/potential.hpp"

#include "stableflow/error.hpp"

namespace stableflow {

PotentialKind parse_potential_kind(const std::string& name) {
  if (name == "euclidean") return PotentialKind::Euclidean;
  if (name == "quadratic") return PotentialKind::Quadratic;
  throw Error(ErrorCode::InvalidArgument, "unknown potential '" + name + "' (euclidean|quadratic)");
}

std::string to_string(PotentialKind kind) {
  return kind == PotentialKind::Euclidean ? "euclidean" : "quadratic";
}

double Potential::value(const Vec& y) const {
  const double dist = (y - goal).norm();
  return kind == PotentialKind::Euclidean ? dist : 0.5 * dist * dist;
}

Vec latent_velocity(const Potential& potential, const Vec& y) {
  const Vec diff = y - potential.goal;
  if (potential.kind == PotentialKind::Quadratic) return -diff;
  const double dist = diff.norm();
  if (dist == 0.0) throw Error(ErrorCode::AtGoal, "latent velocity undefined at the goal");
  return -diff / dist;
}

}  // namespace stableflow
