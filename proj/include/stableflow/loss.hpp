#pragma once

#include <span>

#include "stableflow/diffeo_model.hpp"
#include "stableflow/potential.hpp"

namespace stableflow {

/// One (position, target velocity) pair in normalized coordinates.
struct VelocitySample {
  Vec x;
  Vec xdot;
};

struct LossOptions {
  double l2 = 1e-8;
  PotentialKind potential = PotentialKind::Euclidean;
  /// Samples whose latent image lies within this radius of the latent goal
  /// are rejected with GoalSingularity.
  double eps_goal = 1e-3;
};

struct LossGradient {
  double loss = 0.0;      // data_loss + penalty
  double data_loss = 0.0; // mean squared velocity error
  double penalty = 0.0;   // l2 * ||theta||^2
  Vec gradient;           // d loss / d theta, same layout as DiffeoModel::parameters()
};

/// Mean squared error between target velocities and the pullback field
/// J(x)^{-1} v_latent(psi(x)), plus an L2 penalty on the weights, and its
/// exact gradient by a hand-written reverse pass. The dependence of the
/// latent goal psi(goal) on the weights is included.
LossGradient loss_gradient(const DiffeoModel& model, std::span<const VelocitySample> batch,
                           const LossOptions& options);

/// Loss only, evaluated through the public model API (no tape).
double loss_value(const DiffeoModel& model, std::span<const VelocitySample> batch, const LossOptions& options);

}  // namespace stableflow
