#include "stableflow/rff.hpp"

#include <cmath>
#include <numbers>

#include "stableflow/error.hpp"
#include "vecmath.h"

namespace stableflow {

RffFrame::RffFrame(Mat alphas, Vec betas, double lengthscale, int output_dim)
    : alphas_(std::move(alphas)),
      betas_(std::move(betas)),
      lengthscale_(lengthscale),
      output_dim_(output_dim),
      amplitude_(0.0) {
  if (alphas_.rows() != betas_.size() || betas_.size() == 0)
    throw Error(ErrorCode::DimensionMismatch, "RFF frame needs one beta per alpha row and m > 0");
  if (alphas_.cols() < 1 || output_dim_ < 1)
    throw Error(ErrorCode::DimensionMismatch, "RFF frame input and output dims must be positive");
  if (!(lengthscale_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "lengthscale must be positive");
  if (!alphas_.allFinite() || !betas_.allFinite()) throw Error(ErrorCode::NonFinite, "RFF frame not finite");
  amplitude_ = std::sqrt(2.0 / static_cast<double>(betas_.size()));
}

RffFrame RffFrame::sample(int input_dim, int output_dim, int features, double lengthscale,
                          std::mt19937_64& rng) {
  if (features < 1) throw Error(ErrorCode::InvalidArgument, "feature count must be positive");
  if (!(lengthscale > 0.0)) throw Error(ErrorCode::InvalidArgument, "lengthscale must be positive");
  std::normal_distribution<double> normal(0.0, 1.0 / lengthscale);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  Mat alphas(features, input_dim);
  Vec betas(features);
  for (int i = 0; i < features; ++i) {
    for (int d = 0; d < input_dim; ++d) alphas(i, d) = normal(rng);
    betas[i] = uniform(rng);
  }
  return RffFrame(std::move(alphas), std::move(betas), lengthscale, output_dim);
}

Vec RffFrame::features(const Vec& z) const {
  const Vec phase = alphas_ * z + betas_;
  Vec c(phase.size());
  stableflow_cos(phase.data(), c.data(), static_cast<int>(phase.size()));
  return amplitude_ * c;
}

void RffFrame::phase_cos_sin(const Vec& z, Vec& c, Vec& s) const {
  const Vec phase = alphas_ * z + betas_;
  c.resize(phase.size());
  s.resize(phase.size());
  stableflow_sincos(phase.data(), c.data(), s.data(), static_cast<int>(phase.size()));
}

Mat RffFrame::feature_jacobian(const Vec& z) const {
  Vec c, s;
  phase_cos_sin(z, c, s);
  return (-amplitude_ * s).asDiagonal() * alphas_;
}

Vec RffFrame::evaluate(const Vec& weights, const Vec& z) const {
  if (weights.size() != static_cast<Eigen::Index>(features()) * output_dim_)
    throw Error(ErrorCode::DimensionMismatch, "weight vector must have m * d_out entries");
  return weight_matrix(weights, output_dim_) * features(z);
}

}  // namespace stableflow
