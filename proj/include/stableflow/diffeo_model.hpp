#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <json.hpp>

#include "stableflow/coupling_layer.hpp"

namespace stableflow {

struct FlowShape {
  int dim = 2;
  int layers = 10;
  int features = 200;
  double lengthscale = 0.45;
};

/// The learned change of coordinates y = psi(x), a stack of coupling layers
/// applied in index order (layer 0 first), together with the data normalizer
/// and the goal. Positions passed to forward/inverse/jacobian are in
/// normalized coordinates.
///
/// The latent goal psi(goal) is recomputed every time weights change, so it
/// is always consistent when read.
class DiffeoModel {
 public:
  DiffeoModel(std::vector<CouplingLayer> layers, AffineNormalizer normalizer, Vec goal, std::uint64_t seed);

  /// Zero-weight model whose frames are drawn from `seed`.
  static DiffeoModel identity(const FlowShape& shape, std::uint64_t seed, AffineNormalizer normalizer, Vec goal);

  int dim() const { return static_cast<int>(goal_.size()); }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  int features() const { return layers_.front().frame().features(); }
  double lengthscale() const { return layers_.front().frame().lengthscale(); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<CouplingLayer>& layers() const { return layers_; }
  const AffineNormalizer& normalizer() const { return normalizer_; }
  const Vec& goal() const { return goal_; }
  const Vec& goal_latent() const { return goal_latent_; }

  Vec forward(const Vec& x) const;
  Vec inverse(const Vec& y) const;
  Mat jacobian(const Vec& x) const;
  double log_det_jacobian(const Vec& x) const;

  /// J(x)^{-1} v, walking the layers from last to first without forming J.
  Vec pullback_velocity(const Vec& x, const Vec& v_latent) const;

  /// J(x)^{-1} latent(psi(x)) from one pass that evaluates each layer's
  /// features once; psi(x) is stored in `y` when given.
  using LatentField = std::function<Vec(const Vec&)>;
  Vec pullback_field(const Vec& x, const LatentField& latent, Vec* y = nullptr) const;

  /// Flat learnable parameters: per layer, w_scale then w_translate.
  std::size_t parameter_count() const;
  Vec parameters() const;
  void set_parameters(const Vec& theta);

 private:
  void refresh_goal();

  std::vector<CouplingLayer> layers_;
  AffineNormalizer normalizer_;
  Vec goal_;
  Vec goal_latent_;
  std::uint64_t seed_;
};

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const DiffeoModel& model);
DiffeoModel model_from_json(const nlohmann::json& j);
void save_model(const DiffeoModel& model, const std::filesystem::path& path);
DiffeoModel load_model(const std::filesystem::path& path);

}  // namespace stableflow
