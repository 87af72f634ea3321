#pragma once

#include <cstdint>
#include <random>

#include "stableflow/core.hpp"

namespace stableflow {

/// Frozen random Fourier feature basis approximating a Gaussian kernel with
/// lengthscale l:
///
///   phi_i(z) = sqrt(2/m) * cos(alpha_i . z + beta_i),
///   alpha_i ~ N(0, l^-2 I),  beta_i ~ U[0, 2 pi).
///
/// A weight vector w of length m * d_out defines g(z) with
/// g_j(z) = sum_i phi_i(z) w[i * d_out + j].
class RffFrame {
 public:
  /// `alphas` is m x d_in, one frequency per row.
  RffFrame(Mat alphas, Vec betas, double lengthscale, int output_dim);

  static RffFrame sample(int input_dim, int output_dim, int features, double lengthscale,
                         std::mt19937_64& rng);

  int features() const { return static_cast<int>(betas_.size()); }
  int input_dim() const { return static_cast<int>(alphas_.cols()); }
  int output_dim() const { return output_dim_; }
  double lengthscale() const { return lengthscale_; }
  double amplitude() const { return amplitude_; }
  const Mat& alphas() const { return alphas_; }
  const Vec& betas() const { return betas_; }

  /// Cosine features phi(z), length m.
  Vec features(const Vec& z) const;

  /// cos and sin of the phases alpha_i . z + beta_i (no amplitude).
  void phase_cos_sin(const Vec& z, Vec& c, Vec& s) const;

  /// d phi / d z, m x d_in. Row i is -sqrt(2/m) sin(alpha_i . z + beta_i) alpha_i^T.
  Mat feature_jacobian(const Vec& z) const;

  /// g(z) for a flat weight vector of length m * d_out.
  Vec evaluate(const Vec& weights, const Vec& z) const;

 private:
  Mat alphas_;
  Vec betas_;
  double lengthscale_;
  int output_dim_;
  double amplitude_;
};

/// View of a flat weight vector as the d_out x m matrix W with g = W phi.
inline Eigen::Map<const Mat> weight_matrix(const Vec& weights, int output_dim) {
  return {weights.data(), output_dim, weights.size() / output_dim};
}

}  // namespace stableflow
