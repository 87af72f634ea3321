#include "stableflow/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stableflow/error.hpp"
#include "stableflow/parallel.hpp"
#include "layer_kernels.hpp"

namespace stableflow {
namespace {

using namespace detail;

// Fixed chunking keeps the reduction order, and hence the result bits,
// independent of how many threads run.
constexpr std::size_t kChunkSize = 32;

// Scratch shared by the reverse kernels.
struct Scratch {
  std::vector<double> ub, s_bar, t_bar, P_bar, Q_bar, g_bar, phi_bar, theta_bar;

  void resize(int m, int dout) {
    for (auto* v : {&ub, &s_bar, &t_bar, &P_bar, &Q_bar}) v->resize(dout);
    for (auto* v : {&g_bar, &phi_bar, &theta_bar}) v->resize(m);
  }
};

// Reverse of solve_record. Overwrites u_bar with the adjoint of the solve
// input w and writes the adjoint of the layer input into z_bar.
template <int Din, int Dout>
void solve_backward_kernel(const LayerView& v, const LayerTape& t, double* u_bar, double* z_bar, int n, double* grad,
                    Scratch& s) {
  const int din = Din > 0 ? Din : v.din;
  const int dout = Dout > 0 ? Dout : v.dout;
  double* gws = grad + v.offset;
  double* gwt = gws + static_cast<Eigen::Index>(v.m) * dout;
  std::fill(z_bar, z_bar + n, 0.0);
  for (int j = 0; j < dout; ++j) {
    const int r = v.trans[j];
    const double ub = u_bar[r];
    s.ub[j] = ub;
    const double einv_bar = ub * (t.w[r] - t.Q[j]);
    z_bar[r] = -ub * t.P[j];
    s.P_bar[j] = -ub * t.b[j];
    s.Q_bar[j] = -ub / t.e[j];
    s.s_bar[j] = -einv_bar / t.e[j];
    u_bar[r] = ub / t.e[j];
  }
  for (int i = 0; i < v.m; ++i) {
    const double phi = v.c * t.cos_p[i];
    double g_bar = 0.0, phi_bar = 0.0;
    for (int j = 0; j < dout; ++j) {
      const auto k = j + i * dout;
      gws[k] += s.P_bar[j] * t.g[i] + s.s_bar[j] * phi;
      gwt[k] += s.Q_bar[j] * t.g[i];
      g_bar += v.ws[k] * s.P_bar[j] + v.wt[k] * s.Q_bar[j];
      phi_bar += v.ws[k] * s.s_bar[j];
    }
    const double theta_bar = -v.c * (g_bar * t.cos_p[i] * t.h[i] + phi_bar * t.sin_p[i]);
    const double h_bar = -v.c * g_bar * t.sin_p[i];
    for (int d = 0; d < din; ++d) {
      const double alpha = v.alpha[i + d * v.m];
      u_bar[v.pass[d]] += alpha * h_bar;
      z_bar[v.pass[d]] += alpha * theta_bar;
    }
  }
}

// Reverse of forward_record, in place: adjoint of the output -> adjoint of
// the input.
template <int Din, int Dout>
void forward_backward_kernel(const LayerView& v, const LayerTape& t, double* z_bar, double* grad, Scratch& s) {
  const int din = Din > 0 ? Din : v.din;
  const int dout = Dout > 0 ? Dout : v.dout;
  double* gws = grad + v.offset;
  double* gwt = gws + static_cast<Eigen::Index>(v.m) * dout;
  for (int j = 0; j < dout; ++j) {
    const int r = v.trans[j];
    s.t_bar[j] = z_bar[r];
    s.s_bar[j] = z_bar[r] * t.b[j] * t.e[j];
    z_bar[r] *= t.e[j];
  }
  for (int i = 0; i < v.m; ++i) {
    const double phi = v.c * t.cos_p[i];
    double phi_bar = 0.0;
    for (int j = 0; j < dout; ++j) {
      const auto k = j + i * dout;
      gws[k] += s.s_bar[j] * phi;
      gwt[k] += s.t_bar[j] * phi;
      phi_bar += v.ws[k] * s.s_bar[j] + v.wt[k] * s.t_bar[j];
    }
    const double theta_bar = -v.c * phi_bar * t.sin_p[i];
    for (int d = 0; d < din; ++d) z_bar[v.pass[d]] += v.alpha[i + d * v.m] * theta_bar;
  }
}

void solve_backward(const LayerView& v, const LayerTape& t, double* u_bar, double* z_bar, int n, double* grad,
                    Scratch& s) {
  planar(v) ? solve_backward_kernel<1, 1>(v, t, u_bar, z_bar, n, grad, s)
            : solve_backward_kernel<0, 0>(v, t, u_bar, z_bar, n, grad, s);
}

void forward_backward(const LayerView& v, const LayerTape& t, double* z_bar, double* grad, Scratch& s) {
  planar(v) ? forward_backward_kernel<1, 1>(v, t, z_bar, grad, s) : forward_backward_kernel<0, 0>(v, t, z_bar, grad, s);
}

struct ChunkResult {
  double squared_error = 0.0;
  Vec grad;
  Vec goal_bar;
};

struct Workspace {
  std::vector<LayerTape> tapes;
  std::vector<std::vector<double>> solve_z_bar;
  Scratch scratch;

  Workspace(const std::vector<LayerView>& views, int n) : tapes(views.size()), solve_z_bar(views.size()) {
    int max_m = 0, max_dout = 0;
    for (std::size_t k = 0; k < views.size(); ++k) {
      tapes[k].resize(views[k], n);
      solve_z_bar[k].resize(n);
      max_m = std::max(max_m, views[k].m);
      max_dout = std::max(max_dout, views[k].dout);
    }
    scratch.resize(max_m, max_dout);
  }
};

}  // namespace

LossGradient loss_gradient(const DiffeoModel& model, std::span<const VelocitySample> batch,
                           const LossOptions& options) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "loss needs at least one sample");
  const int n = model.dim();
  const auto& layers = model.layers();
  const std::size_t K = layers.size();
  const auto param_count = static_cast<Eigen::Index>(model.parameter_count());
  const double inv_count = 1.0 / static_cast<double>(batch.size());
  const bool unit_speed = options.potential == PotentialKind::Euclidean;

  std::vector<LayerView> views;
  layer_views(model, views);

  const Vec& goal_latent = model.goal_latent();
  const std::size_t chunks = (batch.size() + kChunkSize - 1) / kChunkSize;
  std::vector<ChunkResult> results(chunks);

  parallel_chunks(chunks, [&](std::size_t chunk) {
    ChunkResult& result = results[chunk];
    result.grad = Vec::Zero(param_count);
    result.goal_bar = Vec::Zero(n);
    Workspace ws(views, n);
    std::vector<double> z(n), v(n), diff(n), adj(n), z_bar(n);

    const std::size_t begin = chunk * kChunkSize;
    const std::size_t end = std::min(batch.size(), begin + kChunkSize);
    for (std::size_t idx = begin; idx < end; ++idx) {
      const auto& sample = batch[idx];
      std::copy(sample.x.data(), sample.x.data() + n, z.begin());
      for (std::size_t k = 0; k < K; ++k) forward_record(views[k], z.data(), z.data(), n, ws.tapes[k]);

      double dist = 0.0;
      for (int d = 0; d < n; ++d) {
        diff[d] = z[d] - goal_latent[d];
        dist += diff[d] * diff[d];
      }
      dist = std::sqrt(dist);
      if (!std::isfinite(dist))
        throw Error(ErrorCode::NonFinite, "sample " + std::to_string(idx) + " maps to a non-finite latent point");
      if (!(dist > options.eps_goal))
        throw Error(ErrorCode::GoalSingularity, "sample " + std::to_string(idx) +
                                                    " maps inside the latent goal ball");
      for (int d = 0; d < n; ++d) v[d] = unit_speed ? -diff[d] / dist : -diff[d];

      for (std::size_t k = K; k-- > 0;) {
        solve_record(views[k], ws.tapes[k], v.data(), adj.data(), n);
        std::swap(v, adj);
      }
      for (int d = 0; d < n; ++d) {
        const double r = v[d] - sample.xdot[d];
        result.squared_error += r * r;
        adj[d] = 2.0 * inv_count * r;
      }

      for (std::size_t k = 0; k < K; ++k)
        solve_backward(views[k], ws.tapes[k], adj.data(), ws.solve_z_bar[k].data(), n, result.grad.data(),
                       ws.scratch);

      // Through the latent velocity: adj is the adjoint of -grad Phi(diff).
      if (unit_speed) {
        double along = 0.0;
        for (int d = 0; d < n; ++d) along += diff[d] * adj[d];
        along /= dist * dist;
        for (int d = 0; d < n; ++d) z_bar[d] = -(adj[d] - diff[d] * along) / dist;
      } else {
        for (int d = 0; d < n; ++d) z_bar[d] = -adj[d];
      }
      for (int d = 0; d < n; ++d) result.goal_bar[d] -= z_bar[d];

      for (std::size_t k = K; k-- > 0;) {
        forward_backward(views[k], ws.tapes[k], z_bar.data(), result.grad.data(), ws.scratch);
        for (int d = 0; d < n; ++d) z_bar[d] += ws.solve_z_bar[k][d];
      }
    }
  });

  LossGradient out;
  out.gradient = Vec::Zero(param_count);
  Vec goal_bar = Vec::Zero(n);
  double squared_error = 0.0;
  for (const auto& result : results) {
    squared_error += result.squared_error;
    out.gradient += result.grad;
    goal_bar += result.goal_bar;
  }

  // The latent goal is shared by every sample; backpropagate its summed
  // adjoint through one recorded forward pass.
  Workspace ws(views, n);
  Vec z = model.goal();
  for (std::size_t k = 0; k < K; ++k) forward_record(views[k], z.data(), z.data(), n, ws.tapes[k]);
  for (std::size_t k = K; k-- > 0;) forward_backward(views[k], ws.tapes[k], goal_bar.data(), out.gradient.data(), ws.scratch);

  const Vec theta = model.parameters();
  out.data_loss = squared_error * inv_count;
  out.penalty = options.l2 * theta.squaredNorm();
  out.loss = out.data_loss + out.penalty;
  out.gradient += 2.0 * options.l2 * theta;
  if (!std::isfinite(out.loss) || !out.gradient.allFinite())
    throw Error(ErrorCode::NonFinite, "loss or gradient overflowed");
  return out;
}

double loss_value(const DiffeoModel& model, std::span<const VelocitySample> batch, const LossOptions& options) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "loss needs at least one sample");
  const Potential potential{options.potential, model.goal_latent()};
  double squared_error = 0.0;
  for (const auto& sample : batch) {
    const Vec y = model.forward(sample.x);
    if (!((y - potential.goal).norm() > options.eps_goal))
      throw Error(ErrorCode::GoalSingularity, "sample maps inside the latent goal ball");
    const Vec v = model.pullback_velocity(sample.x, latent_velocity(potential, y));
    squared_error += (v - sample.xdot).squaredNorm();
  }
  return squared_error / static_cast<double>(batch.size()) + options.l2 * model.parameters().squaredNorm();
}

}  // namespace stableflow
