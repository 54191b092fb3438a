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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rigvoice/nn.hpp"
#include "rigvoice/rng.hpp"

namespace rigvoice {

enum class LatentMode { kSample, kMean };

struct CvaeShape {
  int controllers = 0;
  int conditions = 6;
  int z_dim = 8;
  std::vector<int> hidden{128, 64};  // encoder widths; the decoder mirrors them

  bool operator==(const CvaeShape&) const = default;
};

/// Conditional VAE over normalized controller vectors. The condition is
/// concatenated to the encoder input and to the decoder input.
class Cvae {
 public:
  struct Pass {
    nn::Vec enc_in;
    std::vector<nn::Vec> enc_act;  // post-tanh activations of hidden layers
    nn::Vec mu, logvar, eps, z;
    nn::Vec dec_in;
    std::vector<nn::Vec> dec_act;
    nn::Vec x_hat;
  };

  Cvae() = default;
  explicit Cvae(CvaeShape shape);

  const CvaeShape& shape() const { return shape_; }
  const nn::ParamLayout& layout() const { return layout_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  void init(Rng& rng);

  /// In sample mode eps is drawn from `rng` (required); in mean mode z = mu.
  Pass forward(const nn::Vec& x, const nn::Vec& c, LatentMode mode, Rng* rng = nullptr) const;
  /// Same as forward but with a caller-supplied eps, so the sampled path is
  /// a deterministic function of the parameters.
  Pass forward_with_eps(const nn::Vec& x, const nn::Vec& c, const nn::Vec& eps) const;

  nn::Vec encode_mean(const nn::Vec& x, const nn::Vec& c) const;
  nn::Vec decode(const nn::Vec& z, const nn::Vec& c) const;

  /// Returns cvae_loss for the pass and accumulates its gradient into grads.
  double backward(const Pass& pass, const nn::Vec& x, double beta, std::vector<double>& grads) const;

 private:
  void check_inputs(const nn::Vec& x, const nn::Vec& c) const;

  CvaeShape shape_;
  nn::ParamLayout layout_;
  std::vector<nn::Dense> enc_;
  nn::Dense enc_head_;  // -> [mu; logvar]
  std::vector<nn::Dense> dec_;
  std::vector<double> params_;
};

/// ELBO: mean squared reconstruction error + beta * sum_j KL_j, with
/// KL_j = 0.5 (mu_j^2 + exp(logvar_j) - 1 - logvar_j).
double cvae_loss(const nn::Vec& x, const nn::Vec& x_hat, const nn::Vec& mu, const nn::Vec& logvar,
                 double beta);

struct AudioShape {
  int mel_bins = 64;
  int window_frames = 33;
  int conv_channels = 16;
  int conv_kernel = 3;
  int gru_hidden = 64;
  int dense_hidden = 64;
  int outputs = 8;

  bool operator==(const AudioShape&) const = default;
};

/// Audio trunk shared by AudioNet and KeyNet: per-bin input standardization,
/// three 1-D convolutions over time (stride 2 on the second and third), one
/// GRU over the remaining time steps, then two dense layers.
class AudioModel {
 public:
  struct Pass {
    nn::Mat input;
    nn::Mat cols1, cols2, cols3;
    nn::Mat a1, a2, a3;
    nn::Gru::Cache gru;
    nn::Vec h;
    nn::Vec d1;
    nn::Vec out;
  };

  AudioModel() = default;
  explicit AudioModel(AudioShape shape);

  const AudioShape& shape() const { return shape_; }
  const nn::ParamLayout& layout() const { return layout_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  void init(Rng& rng);

  /// Per-mel-bin standardization applied before the first convolution.
  void set_input_stats(std::vector<double> mean, std::vector<double> stddev);
  const std::vector<double>& input_mean() const { return in_mean_; }
  const std::vector<double>& input_std() const { return in_std_; }

  /// `window` is row-major [mel_bins x window_frames].
  nn::Vec forward(std::span<const double> window) const;
  nn::Vec forward(std::span<const double> window, Pass& pass) const;
  void backward(const Pass& pass, const nn::Vec& d_out, std::vector<double>& grads) const;

 private:
  AudioShape shape_;
  nn::ParamLayout layout_;
  nn::Conv1d conv1_, conv2_, conv3_;
  nn::Gru gru_;
  nn::Dense dense1_, dense2_;
  std::vector<double> params_;
  std::vector<double> in_mean_, in_std_;
};

/// Mean squared error over the latent dimensions. If `grad` is non-null it
/// receives dL/dz_hat.
double audionet_loss(const nn::Vec& z_hat, const nn::Vec& z_target, nn::Vec* grad = nullptr);

/// Targets for one KeyNet sample. Tangents only matter where key_flag is 1.
struct KeyTargets {
  std::span<const double> key_flag;
  std::span<const double> in_tangent;
  std::span<const double> out_tangent;
};

constexpr double kBceEpsilon = 1e-7;

/// KeyNet output layout: [logits(C), in_tangents(C), out_tangents(C)].
/// Loss = mean over controllers of
///   BCE(clamp(sigmoid(logit), eps, 1 - eps), flag; pos_weight)
///   + lambda * flag * ((in - in_t)^2 + (out - out_t)^2) / 2
double keynet_loss(const nn::Vec& pred, const KeyTargets& targets, std::span<const double> pos_weight,
                   double lambda, nn::Vec* grad = nullptr);

/// Positive-class weight per controller: #negatives / #positives. A channel
/// with no positives gets weight 1.
std::vector<double> positive_class_weights(std::span<const double> key_counts, double total_frames);

/// Loss as a function of the full parameter vector; fills `grad` when given.
using LossFn = std::function<double(const std::vector<double>& params, std::vector<double>* grad)>;

/// Central finite differences (step `h`) against the analytic gradient on a
/// random subset of `n_check` parameters. Relative error is
/// |a - n| / max(|a|, |n|, floor). Throws if the loss is non-finite.
double gradient_check(const LossFn& loss, std::vector<double> params, int n_check, Rng& rng,
                      double h = 1e-5, double floor = 1e-6);

}  // namespace rigvoice
