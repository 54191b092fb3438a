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

#pragma once

// Minimal layer kit with explicit forward/backward passes. Every layer keeps
// only offsets into a model-wide flat parameter vector; gradients accumulate
// into a vector of the same layout. That keeps optimizers, checkpoints and
// gradient checks agnostic of the architecture.

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "rigvoice/rng.hpp"

namespace rigvoice::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using VecMap = Eigen::Map<Vec>;
using ConstVecMap = Eigen::Map<const Vec>;

struct ParamEntry {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
};

class ParamLayout {
 public:
  std::size_t add(const std::string& name, int rows, int cols);
  std::size_t size() const { return size_; }
  const std::vector<ParamEntry>& entries() const { return entries_; }

 private:
  std::vector<ParamEntry> entries_;
  std::size_t size_ = 0;
};

inline ConstMatMap mat(const double* base, std::size_t off, int rows, int cols) {
  return ConstMatMap(base + off, rows, cols);
}
inline MatMap mat(double* base, std::size_t off, int rows, int cols) {
  return MatMap(base + off, rows, cols);
}
inline ConstVecMap vec(const double* base, std::size_t off, int n) { return ConstVecMap(base + off, n); }
inline VecMap vec(double* base, std::size_t off, int n) { return VecMap(base + off, n); }

void tanh_inplace(Vec& v);
void tanh_inplace(Mat& m);
double sigmoid(double x);

/// y = W x + b
struct Dense {
  int in = 0;
  int out = 0;
  std::size_t w = 0;
  std::size_t b = 0;

  Dense() = default;
  Dense(ParamLayout& layout, const std::string& name, int in_dim, int out_dim);

  void init(double* params, Rng& rng) const;
  Vec forward(const double* params, const Eigen::Ref<const Vec>& x) const;
  /// Accumulates dW, db into grads and returns dL/dx.
  Vec backward(const double* params, double* grads, const Eigen::Ref<const Vec>& x,
               const Eigen::Ref<const Vec>& dy) const;
};

/// 1-D convolution over time with channels-first input [channels x time],
/// "same"-style padding of kernel/2 and an optional stride.
struct Conv1d {
  int cin = 0;
  int cout = 0;
  int kernel = 3;
  int stride = 1;
  std::size_t w = 0;  // [cout x (cin * kernel)], column index = tap * cin + channel
  std::size_t b = 0;

  Conv1d() = default;
  Conv1d(ParamLayout& layout, const std::string& name, int in_ch, int out_ch, int kernel_size,
         int stride_len);

  int out_len(int t) const { return (t + 2 * (kernel / 2) - kernel) / stride + 1; }
  void init(double* params, Rng& rng) const;
  /// Returns [cout x out_len]; `cols` receives the im2col matrix for backward.
  Mat forward(const double* params, const Mat& x, Mat& cols) const;
  Mat backward(const double* params, double* grads, const Mat& cols, int in_len, const Mat& dy) const;
};

/// Single-layer GRU (reset gate applied after the hidden projection).
struct Gru {
  int in = 0;
  int hidden = 0;
  std::size_t wi = 0;  // [3H x in], gate order r, z, n
  std::size_t wh = 0;  // [3H x H]
  std::size_t bi = 0;
  std::size_t bh = 0;

  struct Cache {
    Mat x;                // [in x T]
    std::vector<Vec> h;   // T + 1 states, h[0] = 0
    std::vector<Vec> r, z, n, hn;
  };

  Gru() = default;
  Gru(ParamLayout& layout, const std::string& name, int in_dim, int hidden_dim);

  void init(double* params, Rng& rng) const;
  /// Runs over the columns of x and returns the final hidden state.
  Vec forward(const double* params, const Mat& x, Cache& cache) const;
  /// Backprop from dL/dh_T; returns dL/dx.
  Mat backward(const double* params, double* grads, const Cache& cache, const Vec& dh_last) const;
};

/// Adam with global-norm gradient clipping.
class Adam {
 public:
  Adam(std::size_t n, double lr, double clip_norm = 5.0);
  void step(std::vector<double>& params, const std::vector<double>& grads);

 private:
  double lr_, clip_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace rigvoice::nn
