#include "stableflow/diffeo_model.hpp"

#include <random>

#include "layer_kernels.hpp"
#include "stableflow/error.hpp"

namespace stableflow {

DiffeoModel::DiffeoModel(std::vector<CouplingLayer> layers, AffineNormalizer normalizer, Vec goal,
                         std::uint64_t seed)
    : layers_(std::move(layers)), normalizer_(std::move(normalizer)), goal_(std::move(goal)), seed_(seed) {
  if (layers_.empty()) throw Error(ErrorCode::InvalidArgument, "model needs at least one layer");
  const int n = static_cast<int>(goal_.size());
  if (normalizer_.dim() != n) throw Error(ErrorCode::DimensionMismatch, "normalizer and goal dims differ");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (layers_[k].dim() != n) throw Error(ErrorCode::DimensionMismatch, "layer mask length differs from dim");
    if (k > 0) {
      const auto& prev = layers_[k - 1].mask();
      const auto& cur = layers_[k].mask();
      for (int d = 0; d < n; ++d)
        if (prev[d] == cur[d])
          throw Error(ErrorCode::DimensionMismatch, "masks must alternate between consecutive layers");
    }
  }
  if (!goal_.allFinite()) throw Error(ErrorCode::NonFinite, "goal is not finite");
  refresh_goal();
}

DiffeoModel DiffeoModel::identity(const FlowShape& shape, std::uint64_t seed, AffineNormalizer normalizer, Vec goal) {
  if (shape.layers < 1) throw Error(ErrorCode::InvalidArgument, "layer count must be positive");
  if (goal.size() != shape.dim) throw Error(ErrorCode::DimensionMismatch, "goal does not match model dim");
  std::mt19937_64 rng(seed);
  std::vector<CouplingLayer> layers;
  layers.reserve(static_cast<std::size_t>(shape.layers));
  for (int k = 0; k < shape.layers; ++k)
    layers.push_back(CouplingLayer::identity(alternating_mask(shape.dim, k), shape.features, shape.lengthscale, rng));
  return DiffeoModel(std::move(layers), std::move(normalizer), std::move(goal), seed);
}

namespace {

// Per-thread buffers so repeated field evaluations do not allocate.
struct FieldWorkspace {
  std::vector<detail::LayerView> views;
  std::vector<detail::LayerTape> tapes;
  std::vector<double> z, w, u;
};

FieldWorkspace& prepared_workspace(const DiffeoModel& model) {
  thread_local FieldWorkspace ws;
  const int n = model.dim();
  detail::layer_views(model, ws.views);
  ws.tapes.resize(ws.views.size());
  for (std::size_t k = 0; k < ws.views.size(); ++k) ws.tapes[k].resize(ws.views[k], n);
  return ws;
}

}  // namespace

Vec DiffeoModel::forward(const Vec& x) const {
  const int n = dim();
  if (x.size() != n) throw Error(ErrorCode::DimensionMismatch, "state has wrong dim");
  auto& ws = prepared_workspace(*this);
  ws.z.assign(x.data(), x.data() + n);
  for (std::size_t k = 0; k < ws.views.size(); ++k)
    detail::forward_record(ws.views[k], ws.z.data(), ws.z.data(), n, ws.tapes[k]);
  return Eigen::Map<const Vec>(ws.z.data(), n);
}

Vec DiffeoModel::inverse(const Vec& y) const {
  Vec z = y;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) z = it->inverse(z);
  return z;
}

Mat DiffeoModel::jacobian(const Vec& x) const {
  Mat jac = Mat::Identity(dim(), dim());
  Vec z = x;
  for (const auto& layer : layers_) {
    jac = layer.jacobian(z) * jac;
    z = layer.forward(z);
  }
  return jac;
}

double DiffeoModel::log_det_jacobian(const Vec& x) const {
  double total = 0.0;
  Vec z = x;
  for (const auto& layer : layers_) {
    total += layer.log_det_jacobian(z);
    z = layer.forward(z);
  }
  return total;
}

Vec DiffeoModel::pullback_velocity(const Vec& x, const Vec& v_latent) const {
  return pullback_field(x, [&](const Vec&) { return v_latent; });
}

Vec DiffeoModel::pullback_field(const Vec& x, const LatentField& latent, Vec* y) const {
  const int n = dim();
  if (x.size() != n) throw Error(ErrorCode::DimensionMismatch, "state has wrong dim");
  auto& ws = prepared_workspace(*this);
  ws.z.assign(x.data(), x.data() + n);
  ws.u.resize(n);
  for (std::size_t k = 0; k < ws.views.size(); ++k)
    detail::forward_record(ws.views[k], ws.z.data(), ws.z.data(), n, ws.tapes[k]);

  const Vec latent_point = Eigen::Map<const Vec>(ws.z.data(), n);
  const Vec v = latent(latent_point);
  if (v.size() != n) throw Error(ErrorCode::DimensionMismatch, "latent velocity has wrong dim");
  ws.w.assign(v.data(), v.data() + n);
  for (std::size_t k = ws.views.size(); k-- > 0;) {
    detail::solve_record(ws.views[k], ws.tapes[k], ws.w.data(), ws.u.data(), n);
    std::swap(ws.w, ws.u);
  }
  if (y) *y = latent_point;
  return Eigen::Map<const Vec>(ws.w.data(), n);
}

std::size_t DiffeoModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) total += layer.parameter_count();
  return total;
}

Vec DiffeoModel::parameters() const {
  Vec theta(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index offset = 0;
  for (const auto& layer : layers_) {
    const auto size = layer.w_scale().size();
    theta.segment(offset, size) = layer.w_scale();
    theta.segment(offset + size, size) = layer.w_translate();
    offset += 2 * size;
  }
  return theta;
}

void DiffeoModel::set_parameters(const Vec& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count())
    throw Error(ErrorCode::DimensionMismatch, "parameter vector has wrong length");
  Eigen::Index offset = 0;
  for (auto& layer : layers_) {
    const auto size = layer.w_scale().size();
    layer.set_weights(theta.segment(offset, size), theta.segment(offset + size, size));
    offset += 2 * size;
  }
  refresh_goal();
}

void DiffeoModel::refresh_goal() { goal_latent_ = forward(goal_); }

}  // namespace stableflow
