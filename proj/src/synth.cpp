#include "stableflow/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "stableflow/error.hpp"

namespace stableflow {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Base curve p(tau) and dp/dtau for tau in [0, 1]; p(1) is the goal.
struct CurvePoint {
  Eigen::Vector2d p;
  Eigen::Vector2d dp;
};

CurvePoint base_curve(SynthShape shape, double tau) {
  switch (shape) {
    case SynthShape::SCurve:
      return {{-0.3 * std::sin(kTwoPi * tau), 0.5 - tau}, {-0.3 * kTwoPi * std::cos(kTwoPi * tau), -1.0}};
    case SynthShape::Sine:
      return {{tau - 0.5, 0.3 * std::sin(kTwoPi * tau)}, {1.0, 0.3 * kTwoPi * std::cos(kTwoPi * tau)}};
    case SynthShape::Spiral: {
      const double r = 0.45 * (1.0 - tau);
      const double angle = 3.0 * std::numbers::pi * tau;
      const double dr = -0.45;
      const double dangle = 3.0 * std::numbers::pi;
      return {{r * std::cos(angle), r * std::sin(angle)},
              {dr * std::cos(angle) - r * dangle * std::sin(angle), dr * std::sin(angle) + r * dangle * std::cos(angle)}};
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown shape");
}

double arc_length(SynthShape shape) {
  constexpr int kPanels = 4096;  // composite Simpson
  double total = 0.0;
  for (int i = 0; i <= kPanels; ++i) {
    const double w = (i == 0 || i == kPanels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    total += w * base_curve(shape, static_cast<double>(i) / kPanels).dp.norm();
  }
  return total / (3.0 * kPanels);
}

// Per-axis width of the base curve's bounding box.
Eigen::Vector2d extent(SynthShape shape) {
  constexpr int kSamples = 4096;
  Eigen::Vector2d lo = base_curve(shape, 0.0).p, hi = lo;
  for (int i = 1; i <= kSamples; ++i) {
    const Eigen::Vector2d p = base_curve(shape, static_cast<double>(i) / kSamples).p;
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return hi - lo;
}

}  // namespace

SynthShape parse_synth_shape(const std::string& name) {
  if (name == "scurve") return SynthShape::SCurve;
  if (name == "sine") return SynthShape::Sine;
  if (name == "spiral") return SynthShape::Spiral;
  throw Error(ErrorCode::InvalidArgument, "unknown shape '" + name + "' (scurve|sine|spiral)");
}

DemonstrationSet synthesize(const SynthOptions& options) {
  if (options.count < 1) throw Error(ErrorCode::InvalidArgument, "count must be at least 1");
  if (options.points < 10) throw Error(ErrorCode::InvalidArgument, "points must be at least 10");
  if (!(options.noise >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise must be non-negative");

  const double duration = arc_length(options.shape);
  const Eigen::Vector2d jitter_scale = options.noise * extent(options.shape);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> jitter(0.0, 1.0);

  std::vector<Trajectory> trajectories;
  trajectories.reserve(static_cast<std::size_t>(options.count));
  for (int demo = 0; demo < options.count; ++demo) {
    std::vector<double> times;
    std::vector<Vec> positions;
    std::vector<Vec> velocities;
    for (int k = 0; k < options.points; ++k) {
      const double tau = static_cast<double>(k) / (options.points - 1);
      const CurvePoint c = base_curve(options.shape, tau);
      Vec x = c.p;
      if (options.noise > 0.0 && k + 1 < options.points) {
        x[0] += jitter_scale[0] * jitter(rng);
        x[1] += jitter_scale[1] * jitter(rng);
      }
      times.push_back(duration * tau);
      positions.push_back(std::move(x));
      velocities.push_back(c.dp / duration);
    }
    trajectories.emplace_back(std::move(times), std::move(positions), std::move(velocities));
  }
  return DemonstrationSet(std::move(trajectories));
}

}  // namespace stableflow
