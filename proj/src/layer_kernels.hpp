#pragma once

// Allocation-free forward and inverse-Jacobian kernels for coupling layers,
// shared by field evaluation and the loss gradient so both perform the same
// arithmetic.

#include <algorithm>
#include <cmath>
#include <vector>

#include "stableflow/diffeo_model.hpp"
#include "vecmath.h"

namespace stableflow::detail {

// Raw view of one layer. Alphas are m x d_in column-major, weights
// d_out x m column-major (entry (j, i) at j + i * d_out).
struct LayerView {
  int m = 0, din = 0, dout = 0;
  double c = 0.0;
  const int* pass = nullptr;
  const int* trans = nullptr;
  const double* alpha = nullptr;
  const double* beta = nullptr;
  const double* ws = nullptr;
  const double* wt = nullptr;
  Eigen::Index offset = 0;  // of w_scale in the flat parameter vector
};

// Intermediates of one layer's forward map and of its inverse-Jacobian solve
// at the same input point.
struct LayerTape {
  std::vector<double> a, b;          // layer input split by the mask
  std::vector<double> phase;         // alpha_i . a + beta_i
  std::vector<double> cos_p, sin_p;
  std::vector<double> e;             // exp(s(a))
  std::vector<double> w;             // output-space vector entering the solve
  std::vector<double> h, g;          // alpha_i . w_a and (d phi / d a) w_a
  std::vector<double> P, Q;          // W_s g, W_t g

  void resize(const LayerView& v, int n) {
    a.resize(v.din);
    b.resize(v.dout);
    phase.resize(v.m);
    cos_p.resize(v.m);
    sin_p.resize(v.m);
    e.resize(v.dout);
    w.resize(n);
    h.resize(v.m);
    g.resize(v.m);
    P.resize(v.dout);
    Q.resize(v.dout);
  }
};

// Views of every layer of `model`, with parameter offsets in the order of
// DiffeoModel::parameters().
inline void layer_views(const DiffeoModel& model, std::vector<LayerView>& views) {
  views.clear();
  Eigen::Index offset = 0;
  for (const auto& layer : model.layers()) {
    const auto& frame = layer.frame();
    LayerView v;
    v.m = frame.features();
    v.din = frame.input_dim();
    v.dout = frame.output_dim();
    v.c = frame.amplitude();
    v.pass = layer.pass_indices().data();
    v.trans = layer.transform_indices().data();
    v.alpha = frame.alphas().data();
    v.beta = frame.betas().data();
    v.ws = layer.w_scale().data();
    v.wt = layer.w_translate().data();
    v.offset = offset;
    offset += static_cast<Eigen::Index>(layer.parameter_count());
    views.push_back(v);
  }
}

// z_out = layer(z_in), recording the tape. z_in and z_out may alias.
template <int Din, int Dout>
void forward_record_kernel(const LayerView& v, const double* z_in, double* z_out, int n, LayerTape& t) {
  const int din = Din > 0 ? Din : v.din;
  const int dout = Dout > 0 ? Dout : v.dout;
  for (int d = 0; d < din; ++d) t.a[d] = z_in[v.pass[d]];
  for (int j = 0; j < dout; ++j) t.b[j] = z_in[v.trans[j]];
  for (int i = 0; i < v.m; ++i) {
    double phase = v.beta[i];
    for (int d = 0; d < din; ++d) phase += v.alpha[i + d * v.m] * t.a[d];
    t.phase[i] = phase;
  }
  stableflow_sincos(t.phase.data(), t.cos_p.data(), t.sin_p.data(), v.m);
  if (z_out != z_in) std::copy(z_in, z_in + n, z_out);
  for (int j = 0; j < dout; ++j) {
    double s = 0.0, tr = 0.0;
    for (int i = 0; i < v.m; ++i) {
      s += v.ws[j + i * dout] * t.cos_p[i];
      tr += v.wt[j + i * dout] * t.cos_p[i];
    }
    t.e[j] = std::exp(v.c * s);
    z_out[v.trans[j]] = t.b[j] * t.e[j] + v.c * tr;
  }
}

// u = J^{-1} w for this layer, recording the solve intermediates.
template <int Din, int Dout>
void solve_record_kernel(const LayerView& v, LayerTape& t, const double* w, double* u, int n) {
  const int din = Din > 0 ? Din : v.din;
  const int dout = Dout > 0 ? Dout : v.dout;
  std::copy(w, w + n, t.w.begin());
  for (int i = 0; i < v.m; ++i) {
    double h = 0.0;
    for (int d = 0; d < din; ++d) h += v.alpha[i + d * v.m] * w[v.pass[d]];
    t.h[i] = h;
    t.g[i] = -v.c * t.sin_p[i] * h;
  }
  std::copy(w, w + n, u);
  for (int j = 0; j < dout; ++j) {
    double P = 0.0, Q = 0.0;
    for (int i = 0; i < v.m; ++i) {
      P += v.ws[j + i * dout] * t.g[i];
      Q += v.wt[j + i * dout] * t.g[i];
    }
    t.P[j] = P;
    t.Q[j] = Q;
    u[v.trans[j]] = (w[v.trans[j]] - Q) / t.e[j] - t.b[j] * P;
  }
}

// Planar flows have one pass-through and one transformed coordinate per
// layer; fixing those sizes at compile time lets the compiler drop the inner
// loops. Both variants perform identical arithmetic.
inline bool planar(const LayerView& v) { return v.din == 1 && v.dout == 1; }

inline void forward_record(const LayerView& v, const double* z_in, double* z_out, int n, LayerTape& t) {
  planar(v) ? forward_record_kernel<1, 1>(v, z_in, z_out, n, t) : forward_record_kernel<0, 0>(v, z_in, z_out, n, t);
}

inline void solve_record(const LayerView& v, LayerTape& t, const double* w, double* u, int n) {
  planar(v) ? solve_record_kernel<1, 1>(v, t, w, u, n) : solve_record_kernel<0, 0>(v, t, w, u, n);
}

}  // namespace stableflow::detail
