#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "stableflow/diffeo_model.hpp"
#include "stableflow/potential.hpp"

namespace stableflow {

inline constexpr double kDefaultEpsGoal = 1e-3;
inline constexpr double kDefaultDt = 1e-2;

/// The pullback dynamics xdot = J(x)^{-1} v_latent(psi(x)) in normalized
/// coordinates. This equals natural gradient descent -G(x)^{-1} grad (Phi o psi)
/// with G = J^T J, computed without forming G. Reports zero inside the latent
/// ball of radius eps_goal around psi(goal).
class VelocityField {
 public:
  explicit VelocityField(const DiffeoModel& model, PotentialKind kind = PotentialKind::Euclidean,
                         double eps_goal = kDefaultEpsGoal);

  const DiffeoModel& model() const { return *model_; }
  const Potential& potential() const { return potential_; }
  double eps_goal() const { return eps_goal_; }

  /// Phi(psi(x)).
  double lyapunov(const Vec& x) const { return potential_.value(model_->forward(x)); }
  double latent_distance(const Vec& x) const { return (model_->forward(x) - potential_.goal).norm(); }

  /// Field value with the goal dead zone.
  Vec operator()(const Vec& x) const { return evaluate(x, eps_goal_); }

  /// Field value without the dead zone; zero only exactly at the latent goal.
  Vec unclamped(const Vec& x) const { return evaluate(x, 0.0); }

 private:
  Vec evaluate(const Vec& x, double dead_zone) const;

  const DiffeoModel* model_;
  Potential potential_;
  double eps_goal_;
};

Vec eval_field(const VelocityField& field, const Vec& x);

enum class Integrator { Rk4, Euler };

Integrator parse_integrator(const std::string& name);

struct Rollout {
  std::vector<double> times;
  std::vector<Vec> states;
  bool converged = false;
  int steps = 0;
};

/// Fixed-step integration of the field from x0 (normalized coordinates).
/// Stops as soon as the latent goal ball is entered. Under the Euclidean
/// potential the latent speed is exactly one, so the step that would cross
/// the goal is shortened to land inside the ball instead of overshooting;
/// recorded timestamps stay on the dt grid.
Rollout rollout(const VelocityField& field, const Vec& x0, double dt, int max_steps,
                Integrator method = Integrator::Rk4);

struct FieldSample {
  Vec x;
  Vec v;
};

struct GridBounds {
  double x1_min = -1.0;
  double x1_max = 1.0;
  double x2_min = -1.0;
  double x2_max = 1.0;
};

/// resolution^2 samples over the box in original coordinates, rows along x2,
/// columns along x1. For n > 2, `slice` fixes dimensions 2..n-1 (original
/// coordinates).
std::vector<FieldSample> field_grid(const VelocityField& field, const GridBounds& bounds, int resolution,
                                    const std::optional<Vec>& slice = std::nullopt);

void write_grid_csv(const std::vector<FieldSample>& grid, const std::filesystem::path& path);

/// Writes `t,x1..xn`, positions mapped back to original coordinates.
void write_rollout_csv(const Rollout& rollout, const AffineNormalizer& normalizer,
                       const std::filesystem::path& path);

}  // namespace stableflow
