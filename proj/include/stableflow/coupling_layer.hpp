#pragma once

#include <vector>

#include "stableflow/rff.hpp"

namespace stableflow {

/// Pass-through pattern of one coupling layer: mask[d] is true when dimension
/// d belongs to the conditioning part a, false for the transformed part b.
using Mask = std::vector<bool>;

/// Layer 1 passes even dimensions through (floor(n/2) of them); every later
/// layer complements its predecessor.
Mask alternating_mask(int dim, int layer_index);

/// Affine coupling block:
///
///   a_out = a
///   b_out = b * exp(s(a)) + t(a)
///
/// where s and t are linear readouts of one shared RFF frame over a.
/// Bijective for any finite weights; the identity when both weight vectors
/// are zero.
class CouplingLayer {
 public:
  CouplingLayer(Mask mask, RffFrame frame, Vec w_scale, Vec w_translate);

  /// Zero-weight layer over a freshly sampled frame.
  static CouplingLayer identity(Mask mask, int features, double lengthscale, std::mt19937_64& rng);

  int dim() const { return static_cast<int>(mask_.size()); }
  const Mask& mask() const { return mask_; }
  const std::vector<int>& pass_indices() const { return pass_; }
  const std::vector<int>& transform_indices() const { return transform_; }
  const RffFrame& frame() const { return frame_; }
  const Vec& w_scale() const { return w_scale_; }
  const Vec& w_translate() const { return w_translate_; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(w_scale_.size() + w_translate_.size()); }

  void set_weights(Vec w_scale, Vec w_translate);

  Vec pass_part(const Vec& z) const;
  Vec transform_part(const Vec& z) const;
  Vec log_scale(const Vec& a) const { return weight_matrix(w_scale_, frame_.output_dim()) * frame_.features(a); }
  Vec translation(const Vec& a) const { return weight_matrix(w_translate_, frame_.output_dim()) * frame_.features(a); }

  Vec forward(const Vec& z) const;
  Vec inverse(const Vec& z) const;

  /// n x n Jacobian of forward at z, in the original coordinate order.
  Mat jacobian(const Vec& z) const;

  /// J(z)^{-1} v using the block-triangular structure; z is the layer input.
  Vec solve_jacobian(const Vec& z, const Vec& v) const;

  /// log det J(z) = sum_j s_j(a).
  double log_det_jacobian(const Vec& z) const { return log_scale(pass_part(z)).sum(); }

 private:
  Mask mask_;
  std::vector<int> pass_;
  std::vector<int> transform_;
  RffFrame frame_;
  Vec w_scale_;
  Vec w_translate_;
};

}  // namespace stableflow
