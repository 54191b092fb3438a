/*
 * Copyright 2026 The rigvoice Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rigvoice/nn.hpp"

#include <cmath>

#include "rigvoice/error.hpp"

namespace rigvoice::nn {

std::size_t ParamLayout::add(const std::string& name, int rows, int cols) {
  const std::size_t off = size_;
  entries_.push_back({name, off, rows, cols});
  size_ += static_cast<std::size_t>(rows) * cols;
  return off;
}

void tanh_inplace(Vec& v) { v = v.array().tanh(); }
void tanh_inplace(Mat& m) { m = m.array().tanh(); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void glorot(double* p, std::size_t off, int fan_in, int fan_out, std::size_t count, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (std::size_t i = 0; i < count; ++i) p[off + i] = rng.uniform(-limit, limit);
}

}  // namespace

Dense::Dense(ParamLayout& layout, const std::string& name, int in_dim, int out_dim)
    : in(in_dim), out(out_dim) {
  w = layout.add(name + ".weight", out, in);
  b = layout.add(name + ".bias", out, 1);
}

void Dense::init(double* params, Rng& rng) const {
  glorot(params, w, in, out, static_cast<std::size_t>(in) * out, rng);
  vec(params, b, out).setZero();
}

Vec Dense::forward(const double* params, const Eigen::Ref<const Vec>& x) const {
  return mat(params, w, out, in) * x + vec(params, b, out);
}

Vec Dense::backward(const double* params, double* grads, const Eigen::Ref<const Vec>& x,
                    const Eigen::Ref<const Vec>& dy) const {
  mat(grads, w, out, in).noalias() += dy * x.transpose();
  vec(grads, b, out) += dy;
  return mat(params, w, out, in).transpose() * dy;
}

Conv1d::Conv1d(ParamLayout& layout, const std::string& name, int in_ch, int out_ch, int kernel_size,
               int stride_len)
    : cin(in_ch), cout(out_ch), kernel(kernel_size), stride(stride_len) {
  w = layout.add(name + ".weight", cout, cin * kernel);
  b = layout.add(name + ".bias", cout, 1);
}

void Conv1d::init(double* params, Rng& rng) const {
  glorot(params, w, cin * kernel, cout * kernel, static_cast<std::size_t>(cout) * cin * kernel, rng);
  vec(params, b, cout).setZero();
}

Mat Conv1d::forward(const double* params, const Mat& x, Mat& cols) const {
  const int t_in = static_cast<int>(x.cols());
  const int t_out = out_len(t_in);
  const int pad = kernel / 2;
  cols.setZero(cin * kernel, t_out);
  for (int t = 0; t < t_out; ++t) {
    for (int tap = 0; tap < kernel; ++tap) {
      const int src = t * stride + tap - pad;
      if (src < 0 || src >= t_in) continue;
      cols.block(tap * cin, t, cin, 1) = x.col(src);
    }
  }
  Mat y = mat(params, w, cout, cin * kernel) * cols;
  y.colwise() += vec(params, b, cout);
  return y;
}

Mat Conv1d::backward(const double* params, double* grads, const Mat& cols, int in_len,
                     const Mat& dy) const {
  const int pad = kernel / 2;
  mat(grads, w, cout, cin * kernel).noalias() += dy * cols.transpose();
  vec(grads, b, cout) += dy.rowwise().sum();
  const Mat dcols = mat(params, w, cout, cin * kernel).transpose() * dy;
  Mat dx = Mat::Zero(cin, in_len);
  for (int t = 0; t < dcols.cols(); ++t) {
    for (int tap = 0; tap < kernel; ++tap) {
      const int src = t * stride + tap - pad;
      if (src < 0 || src >= in_len) continue;
      dx.col(src) += dcols.block(tap * cin, t, cin, 1);
    }
  }
  return dx;
}

Gru::Gru(ParamLayout& layout, const std::string& name, int in_dim, int hidden_dim)
    : in(in_dim), hidden(hidden_dim) {
  wi = layout.add(name + ".weight_ih", 3 * hidden, in);
  wh = layout.add(name + ".weight_hh", 3 * hidden, hidden);
  bi = layout.add(name + ".bias_ih", 3 * hidden, 1);
  bh = layout.add(name + ".bias_hh", 3 * hidden, 1);
}

void Gru::init(double* params, Rng& rng) const {
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
  const std::size_t n = static_cast<std::size_t>(3 * hidden) * (in + hidden + 2);
  for (std::size_t i = 0; i < n; ++i) params[wi + i] = rng.uniform(-k, k);
}

Vec Gru::forward(const double* params, const Mat& x, Cache& cache) const {
  const int steps = static_cast<int>(x.cols());
  const int H = hidden;
  const auto Wi = mat(params, wi, 3 * H, in);
  const auto Wh = mat(params, wh, 3 * H, H);
  const auto Bi = vec(params, bi, 3 * H);
  const auto Bh = vec(params, bh, 3 * H);

  cache.x = x;
  cache.h.assign(steps + 1, Vec::Zero(H));
  cache.r.resize(steps);
  cache.z.resize(steps);
  cache.n.resize(steps);
  cache.hn.resize(steps);
  const Mat gi_all = (Wi * x).colwise() + Bi;
  for (int t = 0; t < steps; ++t) {
    const Vec& hp = cache.h[t];
    const Vec gh = Wh * hp + Bh;
    const auto gi = gi_all.col(t);
    Vec r = (gi.segment(0, H) + gh.segment(0, H)).unaryExpr([](double v) { return sigmoid(v); });
    Vec z = (gi.segment(H, H) + gh.segment(H, H)).unaryExpr([](double v) { return sigmoid(v); });
    Vec hn = gh.segment(2 * H, H);
    Vec n = (gi.segment(2 * H, H).array() + r.array() * hn.array()).tanh().matrix();
    cache.h[t + 1] = ((1.0 - z.array()) * n.array() + z.array() * hp.array()).matrix();
    cache.r[t] = std::move(r);
    cache.z[t] = std::move(z);
    cache.n[t] = std::move(n);
    cache.hn[t] = std::move(hn);
  }
  return cache.h[steps];
}

Mat Gru::backward(const double* params, double* grads, const Cache& cache, const Vec& dh_last) const {
  const int steps = static_cast<int>(cache.x.cols());
  const int H = hidden;
  const auto Wi = mat(params, wi, 3 * H, in);
  const auto Wh = mat(params, wh, 3 * H, H);
  auto dWi = mat(grads, wi, 3 * H, in);
  auto dWh = mat(grads, wh, 3 * H, H);
  auto dBi = vec(grads, bi, 3 * H);
  auto dBh = vec(grads, bh, 3 * H);

  Mat dgi_all(3 * H, steps);
  Vec dh = dh_last;
  Vec dgi(3 * H), dgh(3 * H);
  for (int t = steps - 1; t >= 0; --t) {
    const Vec& hp = cache.h[t];
    const auto r = cache.r[t].array();
    const auto z = cache.z[t].array();
    const auto n = cache.n[t].array();
    const auto hn = cache.hn[t].array();
    const auto d = dh.array();

    const Eigen::ArrayXd da_n = d * (1.0 - z) * (1.0 - n * n);
    const Eigen::ArrayXd da_z = d * (hp.array() - n) * z * (1.0 - z);
    const Eigen::ArrayXd da_r = da_n * hn * r * (1.0 - r);
    dgi << da_r.matrix(), da_z.matrix(), da_n.matrix();
    dgh << da_r.matrix(), da_z.matrix(), (da_n * r).matrix();

    dgi_all.col(t) = dgi;
    dWh.noalias() += dgh * hp.transpose();
    dBh += dgh;
    Vec dh_prev = (d * z).matrix();
    dh_prev.noalias() += Wh.transpose() * dgh;
    dh = std::move(dh_prev);
  }
  dWi.noalias() += dgi_all * cache.x.transpose();
  dBi += dgi_all.rowwise().sum();
  return Wi.transpose() * dgi_all;
}

Adam::Adam(std::size_t n, double lr, double clip_norm)
    : lr_(lr), clip_(clip_norm), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads) {
  require(params.size() == m_.size() && grads.size() == m_.size(), "Adam: size mismatch",
          ErrorCode::kInternal);
  double norm2 = 0;
  for (double g : grads) norm2 += g * g;
  const double norm = std::sqrt(norm2);
  const double scale = (clip_ > 0 && norm > clip_) ? clip_ / norm : 1.0;
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] * scale;
    m_[i] = beta1_ * m_[i] + (1 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1 - beta2_) * g * g;
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace rigvoice::nn
