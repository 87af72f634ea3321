#include "stableflow/core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "stableflow/error.hpp"

namespace stableflow {

Trajectory::Trajectory(std::vector<double> times, std::vector<Vec> positions,
                       std::optional<std::vector<Vec>> velocities)
    : times_(std::move(times)), positions_(std::move(positions)), velocities_(std::move(velocities)) {
  if (times_.empty()) throw Error(ErrorCode::Empty, "trajectory has no samples");
  if (positions_.size() != times_.size())
    throw Error(ErrorCode::LengthMismatch, "trajectory has " + std::to_string(times_.size()) +
                                               " timestamps but " + std::to_string(positions_.size()) +
                                               " positions");
  const auto n = positions_.front().size();
  if (n < 2) throw Error(ErrorCode::DimensionMismatch, "trajectory dimension must be at least 2");
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (positions_[i].size() != n)
      throw Error(ErrorCode::DimensionMismatch, "sample " + std::to_string(i) + " has wrong dimension");
    if (!std::isfinite(times_[i]) || !positions_[i].allFinite())
      throw Error(ErrorCode::NonFinite, "sample " + std::to_string(i) + " is not finite");
    if (i > 0 && !(times_[i] > times_[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "timestamps must be strictly increasing (sample " +
                                                  std::to_string(i) + ")");
  }
  if (velocities_) {
    if (velocities_->size() != positions_.size())
      throw Error(ErrorCode::LengthMismatch, "velocities and positions differ in length");
    for (const auto& v : *velocities_) {
      if (v.size() != n) throw Error(ErrorCode::DimensionMismatch, "velocity has wrong dimension");
      if (!v.allFinite()) throw Error(ErrorCode::NonFinite, "velocity is not finite");
    }
  }
}

const std::vector<Vec>& Trajectory::velocities() const {
  if (!velocities_) throw Error(ErrorCode::InvalidArgument, "trajectory has no velocities");
  return *velocities_;
}

DemonstrationSet::DemonstrationSet(std::vector<Trajectory> trajectories)
    : trajectories_(std::move(trajectories)), dim_(0) {
  if (trajectories_.empty()) throw Error(ErrorCode::Empty, "demonstration set is empty");
  dim_ = trajectories_.front().dim();
  for (const auto& traj : trajectories_)
    if (traj.dim() != dim_)
      throw Error(ErrorCode::DimensionMismatch, "trajectories disagree on dimension");
}

std::size_t DemonstrationSet::total_points() const {
  std::size_t total = 0;
  for (const auto& traj : trajectories_) total += traj.size();
  return total;
}

AffineNormalizer::AffineNormalizer(Vec scale, Vec offset)
    : scale_(std::move(scale)), offset_(std::move(offset)) {
  if (scale_.size() != offset_.size())
    throw Error(ErrorCode::DimensionMismatch, "normalizer scale and offset differ in size");
  for (Eigen::Index i = 0; i < scale_.size(); ++i)
    if (!(scale_[i] > 0.0) || !std::isfinite(scale_[i]) || !std::isfinite(offset_[i]))
      throw Error(ErrorCode::InvalidArgument, "normalizer scale must be positive and finite");
}

AffineNormalizer AffineNormalizer::identity(int dim) {
  return AffineNormalizer(Vec::Ones(dim), Vec::Zero(dim));
}

Vec AffineNormalizer::normalize(const Vec& x) const {
  return ((x - offset_).array() * scale_.array()).matrix();
}

Vec AffineNormalizer::denormalize(const Vec& z) const {
  return (z.array() / scale_.array()).matrix() + offset_;
}

Vec AffineNormalizer::normalize_velocity(const Vec& v) const {
  return (v.array() * scale_.array()).matrix();
}

Vec AffineNormalizer::denormalize_velocity(const Vec& v) const {
  return (v.array() / scale_.array()).matrix();
}

Trajectory AffineNormalizer::normalize(const Trajectory& traj) const {
  if (traj.dim() != dim()) throw Error(ErrorCode::DimensionMismatch, "normalizer dimension mismatch");
  std::vector<Vec> positions;
  positions.reserve(traj.size());
  for (const auto& x : traj.positions()) positions.push_back(normalize(x));
  std::optional<std::vector<Vec>> velocities;
  if (traj.has_velocities()) {
    velocities.emplace();
    velocities->reserve(traj.size());
    for (const auto& v : traj.velocities()) velocities->push_back(normalize_velocity(v));
  }
  return Trajectory(traj.times(), std::move(positions), std::move(velocities));
}

DemonstrationSet AffineNormalizer::normalize(const DemonstrationSet& data) const {
  std::vector<Trajectory> out;
  out.reserve(data.size());
  for (const auto& traj : data.trajectories()) out.push_back(normalize(traj));
  return DemonstrationSet(std::move(out));
}

AffineNormalizer fit_normalizer(const DemonstrationSet& data) {
  const int n = data.dim();
  Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
  Vec hi = Vec::Constant(n, -std::numeric_limits<double>::infinity());
  for (const auto& traj : data.trajectories())
    for (const auto& x : traj.positions()) {
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
  Vec scale(n);
  Vec offset(n);
  for (int d = 0; d < n; ++d) {
    const double extent = hi[d] - lo[d];
    if (extent < 1e-12)
      throw Error(ErrorCode::DegenerateExtent,
                  "dimension " + std::to_string(d) + " is constant across the data; drop or jitter it");
    scale[d] = 1.0 / extent;
    offset[d] = 0.5 * (lo[d] + hi[d]);
  }
  return AffineNormalizer(std::move(scale), std::move(offset));
}

Trajectory estimate_velocities(const Trajectory& traj) {
  const std::size_t count = traj.size();
  if (count < 3) throw Error(ErrorCode::TooShort, "need at least 3 samples to estimate velocities");
  const auto& t = traj.times();
  const auto& x = traj.positions();
  std::vector<Vec> v(count);
  v.front() = (x[1] - x[0]) / (t[1] - t[0]);
  v.back() = (x[count - 1] - x[count - 2]) / (t[count - 1] - t[count - 2]);
  for (std::size_t i = 1; i + 1 < count; ++i) {
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    // Three-point weights, exact for quadratics on any spacing.
    const double wm = -h2 / (h1 * (h1 + h2));
    const double w0 = (h2 - h1) / (h1 * h2);
    const double wp = h1 / (h2 * (h1 + h2));
    v[i] = wm * x[i - 1] + w0 * x[i] + wp * x[i + 1];
  }
  return Trajectory(t, x, std::move(v));
}

DemonstrationSet ensure_velocities(const DemonstrationSet& data) {
  std::vector<Trajectory> out;
  out.reserve(data.size());
  for (const auto& traj : data.trajectories())
    out.push_back(traj.has_velocities() ? traj : estimate_velocities(traj));
  return DemonstrationSet(std::move(out));
}

Vec extract_goal(const DemonstrationSet& data) {
  Vec sum = Vec::Zero(data.dim());
  for (const auto& traj : data.trajectories()) sum += traj.positions().back();
  return sum / static_cast<double>(data.size());
}

}  // namespace stableflow
