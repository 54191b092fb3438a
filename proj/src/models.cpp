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

#include "rigvoice/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rigvoice/error.hpp"

namespace rigvoice {

using nn::Mat;
using nn::Vec;

// ---------------------------------------------------------------- C-VAE

Cvae::Cvae(CvaeShape shape) : shape_(std::move(shape)) {
  require(shape_.controllers > 0, "Cvae: need at least one controller");
  require(shape_.conditions > 0 && shape_.z_dim > 0, "Cvae: bad condition/latent size");
  int width = shape_.controllers + shape_.conditions;
  for (std::size_t i = 0; i < shape_.hidden.size(); ++i) {
    enc_.emplace_back(layout_, "encoder." + std::to_string(i), width, shape_.hidden[i]);
    width = shape_.hidden[i];
  }
  enc_head_ = nn::Dense(layout_, "encoder.head", width, 2 * shape_.z_dim);
  width = shape_.z_dim + shape_.conditions;
  for (std::size_t i = 0; i < shape_.hidden.size(); ++i) {
    const int h = shape_.hidden[shape_.hidden.size() - 1 - i];
    dec_.emplace_back(layout_, "decoder." + std::to_string(i), width, h);
    width = h;
  }
  dec_.emplace_back(layout_, "decoder.out", width, shape_.controllers);
  params_.assign(layout_.size(), 0.0);
}

void Cvae::init(Rng& rng) {
  for (const auto& l : enc_) l.init(params_.data(), rng);
  enc_head_.init(params_.data(), rng);
  for (const auto& l : dec_) l.init(params_.data(), rng);
}

void Cvae::check_inputs(const Vec& x, const Vec& c) const {
  require(x.size() == shape_.controllers,
          "cvae: controller vector has " + std::to_string(x.size()) + " entries, model expects " +
              std::to_string(shape_.controllers));
  require(c.size() == shape_.conditions,
          "cvae: condition vector has " + std::to_string(c.size()) + " entries, model expects " +
              std::to_string(shape_.conditions));
}

Cvae::Pass Cvae::forward(const Vec& x, const Vec& c, LatentMode mode, Rng* rng) const {
  Vec eps = Vec::Zero(shape_.z_dim);
  if (mode == LatentMode::kSample) {
    require(rng != nullptr, "cvae: sample mode needs a random generator");
    for (int i = 0; i < shape_.z_dim; ++i) eps[i] = rng->normal();
  }
  // With eps = 0 the latent is mu + 0 * sigma, i.e. exactly mu.
  return forward_with_eps(x, c, eps);
}

Cvae::Pass Cvae::forward_with_eps(const Vec& x, const Vec& c, const Vec& eps) const {
  check_inputs(x, c);
  const double* P = params_.data();
  Pass p;
  p.enc_in.resize(x.size() + c.size());
  p.enc_in << x, c;
  const Vec* a = &p.enc_in;
  for (const auto& l : enc_) {
    Vec y = l.forward(P, *a);
    nn::tanh_inplace(y);
    p.enc_act.push_back(std::move(y));
    a = &p.enc_act.back();
  }
  const Vec head = enc_head_.forward(P, *a);
  p.mu = head.head(shape_.z_dim);
  p.logvar = head.tail(shape_.z_dim);
  p.eps = eps;
  p.z = p.mu + ((0.5 * p.logvar).array().exp() * eps.array()).matrix();

  p.dec_in.resize(shape_.z_dim + c.size());
  p.dec_in << p.z, c;
  a = &p.dec_in;
  for (std::size_t i = 0; i + 1 < dec_.size(); ++i) {
    Vec y = dec_[i].forward(P, *a);
    nn::tanh_inplace(y);
    p.dec_act.push_back(std::move(y));
    a = &p.dec_act.back();
  }
  p.x_hat = dec_.back().forward(P, *a);
  return p;
}

Vec Cvae::encode_mean(const Vec& x, const Vec& c) const {
  return forward(x, c, LatentMode::kMean).mu;
}

Vec Cvae::decode(const Vec& z, const Vec& c) const {
  require(z.size() == shape_.z_dim, "cvae: latent dimension mismatch");
  require(c.size() == shape_.conditions, "cvae: condition dimension mismatch");
  const double* P = params_.data();
  Vec a(z.size() + c.size());
  a << z, c;
  for (std::size_t i = 0; i + 1 < dec_.size(); ++i) {
    a = dec_[i].forward(P, a);
    nn::tanh_inplace(a);
  }
  return dec_.back().forward(P, a);
}

double Cvae::backward(const Pass& p, const Vec& x, double beta, std::vector<double>& grads) const {
  require(grads.size() == params_.size(), "cvae: gradient buffer size mismatch", ErrorCode::kInternal);
  const double* P = params_.data();
  double* G = grads.data();
  const double loss = cvae_loss(x, p.x_hat, p.mu, p.logvar, beta);

  Vec d = 2.0 * (p.x_hat - x) / static_cast<double>(x.size());
  for (std::size_t i = dec_.size(); i-- > 0;) {
    const Vec& in = i == 0 ? p.dec_in : p.dec_act[i - 1];
    d = dec_[i].backward(P, G, in, d);
    if (i > 0) d.array() *= 1.0 - p.dec_act[i - 1].array().square();
  }
  const Vec dz = d.head(shape_.z_dim);
  const auto std_dev = (0.5 * p.logvar).array().exp();
  Vec dhead(2 * shape_.z_dim);
  dhead.head(shape_.z_dim) = dz + beta * p.mu;
  dhead.tail(shape_.z_dim) =
      (dz.array() * p.eps.array() * 0.5 * std_dev + beta * 0.5 * (p.logvar.array().exp() - 1.0)).matrix();

  const Vec& head_in = enc_.empty() ? p.enc_in : p.enc_act.back();
  d = enc_head_.backward(P, G, head_in, dhead);
  for (std::size_t i = enc_.size(); i-- > 0;) {
    d.array() *= 1.0 - p.enc_act[i].array().square();
    const Vec& in = i == 0 ? p.enc_in : p.enc_act[i - 1];
    d = enc_[i].backward(P, G, in, d);
  }
  return loss;
}

double cvae_loss(const Vec& x, const Vec& x_hat, const Vec& mu, const Vec& logvar, double beta) {
  require(x.size() == x_hat.size(), "cvae_loss: reconstruction size mismatch");
  require(mu.size() == logvar.size(), "cvae_loss: latent size mismatch");
  const double recon = (x_hat - x).squaredNorm() / static_cast<double>(x.size());
  const double kl =
      0.5 * (mu.array().square() + logvar.array().exp() - 1.0 - logvar.array()).sum();
  return recon + beta * kl;
}

// ---------------------------------------------------------- audio trunk

AudioModel::AudioModel(AudioShape shape) : shape_(shape) {
  require(shape_.mel_bins > 0 && shape_.window_frames > 0 && shape_.outputs > 0,
          "AudioModel: bad shape");
  const int ch = shape_.conv_channels;
  conv1_ = nn::Conv1d(layout_, "conv1", shape_.mel_bins, ch, shape_.conv_kernel, 1);
  conv2_ = nn::Conv1d(layout_, "conv2", ch, ch, shape_.conv_kernel, 2);
  conv3_ = nn::Conv1d(layout_, "conv3", ch, ch, shape_.conv_kernel, 2);
  gru_ = nn::Gru(layout_, "gru", ch, shape_.gru_hidden);
  dense1_ = nn::Dense(layout_, "dense1", shape_.gru_hidden, shape_.dense_hidden);
  dense2_ = nn::Dense(layout_, "dense2", shape_.dense_hidden, shape_.outputs);
  params_.assign(layout_.size(), 0.0);
  in_mean_.assign(shape_.mel_bins, 0.0);
  in_std_.assign(shape_.mel_bins, 1.0);
}

void AudioModel::init(Rng& rng) {
  double* P = params_.data();
  conv1_.init(P, rng);
  conv2_.init(P, rng);
  conv3_.init(P, rng);
  gru_.init(P, rng);
  dense1_.init(P, rng);
  dense2_.init(P, rng);
}

void AudioModel::set_input_stats(std::vector<double> mean, std::vector<double> stddev) {
  require(static_cast<int>(mean.size()) == shape_.mel_bins &&
              static_cast<int>(stddev.size()) == shape_.mel_bins,
          "AudioModel: input statistics size mismatch");
  for (double s : stddev) require(s > 0 && std::isfinite(s), "AudioModel: input std must be > 0");
  in_mean_ = std::move(mean);
  in_std_ = std::move(stddev);
}

Vec AudioModel::forward(std::span<const double> window) const {
  Pass pass;
  return forward(window, pass);
}

Vec AudioModel::forward(std::span<const double> window, Pass& p) const {
  const int bins = shape_.mel_bins;
  const int frames = shape_.window_frames;
  require(window.size() == static_cast<std::size_t>(bins) * frames,
          "audio model: window has " + std::to_string(window.size()) + " values, expected " +
              std::to_string(bins * frames));
  const double* P = params_.data();
  p.input.resize(bins, frames);
  for (int m = 0; m < bins; ++m)
    for (int t = 0; t < frames; ++t)
      p.input(m, t) = (window[static_cast<std::size_t>(m) * frames + t] - in_mean_[m]) / in_std_[m];
  p.a1 = conv1_.forward(P, p.input, p.cols1);
  nn::tanh_inplace(p.a1);
  p.a2 = conv2_.forward(P, p.a1, p.cols2);
  nn::tanh_inplace(p.a2);
  p.a3 = conv3_.forward(P, p.a2, p.cols3);
  nn::tanh_inplace(p.a3);
  p.h = gru_.forward(P, p.a3, p.gru);
  p.d1 = dense1_.forward(P, p.h);
  nn::tanh_inplace(p.d1);
  p.out = dense2_.forward(P, p.d1);
  return p.out;
}

void AudioModel::backward(const Pass& p, const Vec& d_out, std::vector<double>& grads) const {
  require(grads.size() == params_.size(), "audio model: gradient buffer size mismatch",
          ErrorCode::kInternal);
  require(d_out.size() == shape_.outputs, "audio model: output gradient size mismatch",
          ErrorCode::kInternal);
  const double* P = params_.data();
  double* G = grads.data();
  Vec d = dense2_.backward(P, G, p.d1, d_out);
  d.array() *= 1.0 - p.d1.array().square();
  d = dense1_.backward(P, G, p.h, d);
  Mat dm = gru_.backward(P, G, p.gru, d);
  dm.array() *= 1.0 - p.a3.array().square();
  dm = conv3_.backward(P, G, p.cols3, static_cast<int>(p.a2.cols()), dm);
  dm.array() *= 1.0 - p.a2.array().square();
  dm = conv2_.backward(P, G, p.cols2, static_cast<int>(p.a1.cols()), dm);
  dm.array() *= 1.0 - p.a1.array().square();
  conv1_.backward(P, G, p.cols1, static_cast<int>(p.input.cols()), dm);
}

// --------------------------------------------------------------- losses

double audionet_loss(const Vec& z_hat, const Vec& z_target, Vec* grad) {
  require(z_hat.size() == z_target.size() && z_hat.size() > 0, "audionet_loss: latent size mismatch");
  const Vec diff = z_hat - z_target;
  const double n = static_cast<double>(diff.size());
  if (grad) *grad = 2.0 * diff / n;
  return diff.squaredNorm() / n;
}

double keynet_loss(const Vec& pred, const KeyTargets& t, std::span<const double> pos_weight,
                   double lambda, Vec* grad) {
  const auto c = static_cast<int>(t.key_flag.size());
  require(c > 0 && pred.size() == 3 * c, "keynet_loss: prediction must have 3 x controllers entries");
  require(t.in_tangent.size() == t.key_flag.size() && t.out_tangent.size() == t.key_flag.size() &&
              pos_weight.size() == t.key_flag.size(),
          "keynet_loss: target size mismatch");
  if (grad) grad->setZero(3 * c);
  double total = 0;
  for (int i = 0; i < c; ++i) {
    const double y = t.key_flag[i];
    const double w = pos_weight[i];
    const double p_raw = nn::sigmoid(pred[i]);
    const double p = std::clamp(p_raw, kBceEpsilon, 1.0 - kBceEpsilon);
    total += -w * y * std::log(p) - (1.0 - y) * std::log(1.0 - p);
    if (grad && p == p_raw) (*grad)[i] = (-w * y * (1.0 - p) + (1.0 - y) * p) / c;
    if (y > 0) {
      const double di = pred[c + i] - t.in_tangent[i];
      const double dout = pred[2 * c + i] - t.out_tangent[i];
      total += lambda * y * 0.5 * (di * di + dout * dout);
      if (grad) {
        (*grad)[c + i] = lambda * y * di / c;
        (*grad)[2 * c + i] = lambda * y * dout / c;
      }
    }
  }
  return total / c;
}

std::vector<double> positive_class_weights(std::span<const double> key_counts, double total_frames) {
  std::vector<double> w;
  w.reserve(key_counts.size());
  for (double pos : key_counts) w.push_back(pos > 0 ? (total_frames - pos) / pos : 1.0);
  return w;
}

double gradient_check(const LossFn& loss, std::vector<double> params, int n_check, Rng& rng,
                      double h, double floor) {
  std::vector<double> grad(params.size(), 0.0);
  const double base = loss(params, &grad);
  if (!std::isfinite(base)) fail(ErrorCode::kDivergence, "gradient_check: loss is not finite");

  std::vector<std::size_t> idx(params.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx.begin(), idx.end());
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(n_check, 0))));

  double worst = 0;
  for (std::size_t i : idx) {
    const double orig = params[i];
    params[i] = orig + h;
    const double up = loss(params, nullptr);
    params[i] = orig - h;
    const double down = loss(params, nullptr);
    params[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down))
      fail(ErrorCode::kDivergence, "gradient_check: loss is not finite");
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(grad[i]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace rigvoice
