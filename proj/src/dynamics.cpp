#include "stableflow/dynamics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "stableflow/error.hpp"

namespace stableflow {

VelocityField::VelocityField(const DiffeoModel& model, PotentialKind kind, double eps_goal)
    : model_(&model), potential_{kind, model.goal_latent()}, eps_goal_(eps_goal) {
  if (!(eps_goal_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps_goal must be positive");
}

Vec VelocityField::evaluate(const Vec& x, double dead_zone) const {
  bool at_goal = false;
  Vec v = model_->pullback_field(x, [&](const Vec& y) -> Vec {
    at_goal = dead_zone > 0.0 ? (y - potential_.goal).norm() <= dead_zone : y == potential_.goal;
    return at_goal ? Vec::Zero(y.size()) : latent_velocity(potential_, y);
  });
  if (at_goal) return Vec::Zero(x.size());
  if (!v.allFinite()) throw Error(ErrorCode::NonFinite, "field evaluation overflowed");
  return v;
}

Vec eval_field(const VelocityField& field, const Vec& x) { return field(x); }

Integrator parse_integrator(const std::string& name) {
  if (name == "rk4") return Integrator::Rk4;
  if (name == "euler") return Integrator::Euler;
  throw Error(ErrorCode::InvalidArgument, "unknown integrator '" + name + "' (rk4|euler)");
}

namespace {

Vec integrate_step(const VelocityField& field, const Vec& x, double h, Integrator method) {
  const Vec k1 = field.unclamped(x);
  if (method == Integrator::Euler) return x + h * k1;
  const Vec k2 = field.unclamped(x + 0.5 * h * k1);
  const Vec k3 = field.unclamped(x + 0.5 * h * k2);
  const Vec k4 = field.unclamped(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Rollout rollout(const VelocityField& field, const Vec& x0, double dt, int max_steps, Integrator method) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (max_steps < 1) throw Error(ErrorCode::InvalidArgument, "max_steps must be at least 1");
  if (x0.size() != field.model().dim()) throw Error(ErrorCode::DimensionMismatch, "start state has wrong dim");
  if (!x0.allFinite()) throw Error(ErrorCode::NonFinite, "start state is not finite");

  const double eps = field.eps_goal();
  const bool unit_speed = field.potential().kind == PotentialKind::Euclidean;
  Rollout out;
  Vec x = x0;
  out.times.push_back(0.0);
  out.states.push_back(x);
  double dist = field.latent_distance(x);
  out.converged = dist <= eps;
  while (!out.converged && out.steps < max_steps) {
    double h = dt;
    // Time to reach the goal is exactly the latent distance; stop halfway
    // into the ball rather than stepping across it.
    if (unit_speed && dist - dt <= eps) h = dist - 0.5 * eps;
    x = integrate_step(field, x, h, method);
    if (!x.allFinite()) throw Error(ErrorCode::NonFinite, "rollout diverged at step " + std::to_string(out.steps));
    ++out.steps;
    out.times.push_back(dt * out.steps);
    out.states.push_back(x);
    dist = field.latent_distance(x);
    out.converged = dist <= eps;
  }
  return out;
}

std::vector<FieldSample> field_grid(const VelocityField& field, const GridBounds& bounds, int resolution,
                                    const std::optional<Vec>& slice) {
  const auto& model = field.model();
  const int n = model.dim();
  if (resolution < 1) throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
  if (n != 2 && (!slice || slice->size() != n - 2))
    throw Error(ErrorCode::DimensionMismatch, "grid export over a " + std::to_string(n) +
                                                  "-d model needs a slice fixing " + std::to_string(n - 2) +
                                                  " coordinates");
  auto axis = [resolution](double lo, double hi, int i) {
    return resolution == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (resolution - 1);
  };
  std::vector<FieldSample> grid;
  grid.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (int r = 0; r < resolution; ++r)
    for (int c = 0; c < resolution; ++c) {
      Vec x(n);
      x[0] = axis(bounds.x1_min, bounds.x1_max, c);
      x[1] = axis(bounds.x2_min, bounds.x2_max, r);
      if (n > 2) x.tail(n - 2) = *slice;
      const Vec v = field(model.normalizer().normalize(x));
      grid.push_back({x, model.normalizer().denormalize_velocity(v)});
    }
  return grid;
}

void write_grid_csv(const std::vector<FieldSample>& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << std::setprecision(17) << "x1,x2,v1,v2\n";
  for (const auto& s : grid) out << s.x[0] << ',' << s.x[1] << ',' << s.v[0] << ',' << s.v[1] << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void write_rollout_csv(const Rollout& rollout, const AffineNormalizer& normalizer,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  const int n = normalizer.dim();
  out << std::setprecision(17) << 't';
  for (int d = 1; d <= n; ++d) out << ",x" << d;
  out << '\n';
  for (std::size_t i = 0; i < rollout.states.size(); ++i) {
    const Vec x = normalizer.denormalize(rollout.states[i]);
    out << rollout.times[i];
    for (int d = 0; d < n; ++d) out << ',' << x[d];
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace stableflow
