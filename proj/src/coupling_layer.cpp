#include "stableflow/coupling_layer.hpp"

#include "stableflow/error.hpp"

namespace stableflow {

Mask alternating_mask(int dim, int layer_index) {
  if (dim < 2) throw Error(ErrorCode::DimensionMismatch, "coupling layers need at least 2 dimensions");
  Mask mask(dim, false);
  for (int d = 0, taken = 0; d < dim && taken < dim / 2; d += 2, ++taken) mask[d] = true;
  if (layer_index % 2 == 1) mask.flip();
  return mask;
}

CouplingLayer::CouplingLayer(Mask mask, RffFrame frame, Vec w_scale, Vec w_translate)
    : mask_(std::move(mask)), frame_(std::move(frame)) {
  for (int d = 0; d < static_cast<int>(mask_.size()); ++d) (mask_[d] ? pass_ : transform_).push_back(d);
  if (pass_.empty() || transform_.empty())
    throw Error(ErrorCode::DimensionMismatch, "mask must select a nonempty pass-through and transformed part");
  if (frame_.input_dim() != static_cast<int>(pass_.size()) ||
      frame_.output_dim() != static_cast<int>(transform_.size()))
    throw Error(ErrorCode::DimensionMismatch, "RFF frame dims do not match the mask");
  set_weights(std::move(w_scale), std::move(w_translate));
}

CouplingLayer CouplingLayer::identity(Mask mask, int features, double lengthscale, std::mt19937_64& rng) {
  int pass = 0;
  for (bool m : mask) pass += m ? 1 : 0;
  const int transformed = static_cast<int>(mask.size()) - pass;
  auto frame = RffFrame::sample(pass, transformed, features, lengthscale, rng);
  const auto count = static_cast<Eigen::Index>(features) * transformed;
  return CouplingLayer(std::move(mask), std::move(frame), Vec::Zero(count), Vec::Zero(count));
}

void CouplingLayer::set_weights(Vec w_scale, Vec w_translate) {
  const auto expected = static_cast<Eigen::Index>(frame_.features()) * frame_.output_dim();
  if (w_scale.size() != expected || w_translate.size() != expected)
    throw Error(ErrorCode::DimensionMismatch, "coupling weights must have m * d_out = " +
                                                  std::to_string(expected) + " entries");
  w_scale_ = std::move(w_scale);
  w_translate_ = std::move(w_translate);
}

Vec CouplingLayer::pass_part(const Vec& z) const { return z(pass_); }

Vec CouplingLayer::transform_part(const Vec& z) const { return z(transform_); }

Vec CouplingLayer::forward(const Vec& z) const {
  const Vec a = z(pass_);
  const Vec phi = frame_.features(a);
  const int d_out = frame_.output_dim();
  const Vec s = weight_matrix(w_scale_, d_out) * phi;
  const Vec t = weight_matrix(w_translate_, d_out) * phi;
  Vec out = z;
  out(transform_) = (z(transform_).array() * s.array().exp() + t.array()).matrix();
  return out;
}

Vec CouplingLayer::inverse(const Vec& z) const {
  const Vec a = z(pass_);
  const Vec phi = frame_.features(a);
  const int d_out = frame_.output_dim();
  const Vec s = weight_matrix(w_scale_, d_out) * phi;
  const Vec t = weight_matrix(w_translate_, d_out) * phi;
  Vec out = z;
  out(transform_) = ((z(transform_) - t).array() * (-s.array()).exp()).matrix();
  return out;
}

Mat CouplingLayer::jacobian(const Vec& z) const {
  const Vec a = z(pass_);
  const Vec b = z(transform_);
  const int d_out = frame_.output_dim();
  const Vec phi = frame_.features(a);
  const Mat dphi = frame_.feature_jacobian(a);
  const Vec scale = (weight_matrix(w_scale_, d_out) * phi).array().exp();
  const Mat ds = weight_matrix(w_scale_, d_out) * dphi;
  const Mat dt = weight_matrix(w_translate_, d_out) * dphi;
  const Mat cross = (b.array() * scale.array()).matrix().asDiagonal() * ds + dt;

  const int n = dim();
  Mat jac = Mat::Zero(n, n);
  for (int p : pass_) jac(p, p) = 1.0;
  for (std::size_t j = 0; j < transform_.size(); ++j) {
    const int row = transform_[j];
    jac(row, row) = scale[static_cast<Eigen::Index>(j)];
    for (std::size_t i = 0; i < pass_.size(); ++i)
      jac(row, pass_[i]) = cross(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
  }
  return jac;
}

Vec CouplingLayer::solve_jacobian(const Vec& z, const Vec& v) const {
  // With M the cross block d b_out / d a:
  //   u_a = v_a,  u_b = exp(-s) * (v_b - M v_a).
  // M v_a = (b * e^s) * (W_s g) + W_t g with g = (d phi / d a) v_a.
  const Vec b = z(transform_);
  const int d_out = frame_.output_dim();
  const Vec va = v(pass_);
  Vec c, sn;
  frame_.phase_cos_sin(z(pass_), c, sn);
  const Vec phi = frame_.amplitude() * c;
  const Vec g = (-frame_.amplitude() * sn.array() * (frame_.alphas() * va).array()).matrix();
  const auto ws = weight_matrix(w_scale_, d_out);
  const auto wt = weight_matrix(w_translate_, d_out);
  const Vec inv_scale = (-(ws * phi).array()).exp();
  Vec u = v;
  u(transform_) = ((v(transform_) - wt * g).array() * inv_scale.array() - b.array() * (ws * g).array()).matrix();
  return u;
}

}  // namespace stableflow
