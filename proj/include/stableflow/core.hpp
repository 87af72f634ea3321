#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <vector>

namespace stableflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Time-stamped positions in R^n, optionally with aligned velocities.
/// Validated on construction and immutable afterwards.
class Trajectory {
 public:
  Trajectory(std::vector<double> times, std::vector<Vec> positions,
             std::optional<std::vector<Vec>> velocities = std::nullopt);

  std::size_t size() const { return times_.size(); }
  int dim() const { return static_cast<int>(positions_.front().size()); }

  const std::vector<double>& times() const { return times_; }
  const std::vector<Vec>& positions() const { return positions_; }
  bool has_velocities() const { return velocities_.has_value(); }
  const std::vector<Vec>& velocities() const;

  double duration() const { return times_.back() - times_.front(); }

 private:
  std::vector<double> times_;
  std::vector<Vec> positions_;
  std::optional<std::vector<Vec>> velocities_;
};

class DemonstrationSet {
 public:
  explicit DemonstrationSet(std::vector<Trajectory> trajectories);

  int dim() const { return dim_; }
  std::size_t size() const { return trajectories_.size(); }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  const Trajectory& operator[](std::size_t i) const { return trajectories_[i]; }

  std::size_t total_points() const;

 private:
  std::vector<Trajectory> trajectories_;
  int dim_;
};

/// Per-dimension affine map x -> (x - offset) * scale. Velocities map by the
/// linear part only.
class AffineNormalizer {
 public:
  AffineNormalizer(Vec scale, Vec offset);

  static AffineNormalizer identity(int dim);

  const Vec& scale() const { return scale_; }
  const Vec& offset() const { return offset_; }
  int dim() const { return static_cast<int>(scale_.size()); }

  Vec normalize(const Vec& x) const;
  Vec denormalize(const Vec& z) const;
  Vec normalize_velocity(const Vec& v) const;
  Vec denormalize_velocity(const Vec& v) const;

  Trajectory normalize(const Trajectory& traj) const;
  DemonstrationSet normalize(const DemonstrationSet& data) const;

 private:
  Vec scale_;
  Vec offset_;
};

/// Maps the axis-aligned bounding box of all positions onto [-0.5, 0.5]^n.
/// Throws DegenerateExtent when some dimension has (near) zero width.
AffineNormalizer fit_normalizer(const DemonstrationSet& data);

/// Fills velocities by nonuniform central differences on interior samples and
/// first-order one-sided differences at the endpoints.
Trajectory estimate_velocities(const Trajectory& traj);

/// Velocities present, or estimated if absent.
DemonstrationSet ensure_velocities(const DemonstrationSet& data);

/// Mean of the final positions.
Vec extract_goal(const DemonstrationSet& data);

// Trajectory file I/O. JSON: {"dim", "trajectories": [{"t", "x", "xdot"?}]}.
// CSV (one trajectory): header t,x1..xn[,v1..vn].
DemonstrationSet load_demonstrations(const std::filesystem::path& path);
void save_demonstrations(const DemonstrationSet& data, const std::filesystem::path& path);
Trajectory load_trajectory_csv(const std::filesystem::path& path);

}  // namespace stableflow
