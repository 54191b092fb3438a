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

// Finite-difference checks of the three training losses on small models.

#include <vector>

#include "rigvoice/models.hpp"

namespace gradcheck {

using namespace rigvoice;

struct Result {
  double cvae_sample = 0;
  double cvae_mean = 0;
  double audionet = 0;
  double keynet = 0;
  std::size_t cvae_params = 0, audio_params = 0, keynet_params = 0;
};

inline nn::Vec random_vec(Rng& rng, int n, double scale = 1.0) {
  nn::Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

inline std::vector<double> random_window(Rng& rng, const AudioShape& s) {
  std::vector<double> w(static_cast<std::size_t>(s.mel_bins) * s.window_frames);
  for (double& x : w) x = rng.uniform(-14.0, 2.0);  // log-mel range
  return w;
}

inline AudioModel small_audio_model(Rng& rng, int outputs) {
  AudioShape s{6, 9, 3, 3, 5, 6, outputs};
  AudioModel m(s);
  m.init(rng);
  std::vector<double> mean(s.mel_bins), sd(s.mel_bins);
  for (int i = 0; i < s.mel_bins; ++i) {
    mean[i] = rng.uniform(-8, -4);
    sd[i] = rng.uniform(1, 3);
  }
  m.set_input_stats(mean, sd);
  return m;
}

inline Result run(std::uint64_t seed, int n_check = 80) {
  Result r;
  Rng rng(seed);

  // C-VAE: the sampled path with eps held fixed, and the mean path.
  Cvae cvae(CvaeShape{4, 6, 3, {10, 7}});
  cvae.init(rng);
  r.cvae_params = cvae.params().size();
  const nn::Vec x = random_vec(rng, 4, 0.5);
  nn::Vec c = nn::Vec::Zero(6);
  c[2] = 1.0;
  const nn::Vec eps = random_vec(rng, 3);
  auto cvae_loss_fn = [&](bool sampled) -> LossFn {
    return [&, sampled](const std::vector<double>& p, std::vector<double>* g) {
      Cvae m = cvae;
      m.params() = p;
      const auto pass = sampled ? m.forward_with_eps(x, c, eps) : m.forward(x, c, LatentMode::kMean);
      if (!g) return cvae_loss(x, pass.x_hat, pass.mu, pass.logvar, 0.05);
      return m.backward(pass, x, 0.05, *g);
    };
  };
  r.cvae_sample = gradient_check(cvae_loss_fn(true), cvae.params(), n_check, rng);
  r.cvae_mean = gradient_check(cvae_loss_fn(false), cvae.params(), n_check, rng);

  // AudioNet regressing a fixed latent target.
  AudioModel an = small_audio_model(rng, 3);
  r.audio_params = an.params().size();
  const auto window = random_window(rng, an.shape());
  const nn::Vec z = random_vec(rng, 3);
  LossFn an_loss = [&](const std::vector<double>& p, std::vector<double>* g) {
    AudioModel m = an;
    m.params() = p;
    AudioModel::Pass pass;
    const nn::Vec out = m.forward(window, pass);
    nn::Vec d;
    const double loss = audionet_loss(out, z, g ? &d : nullptr);
    if (g) m.backward(pass, d, *g);
    return loss;
  };
  r.audionet = gradient_check(an_loss, an.params(), n_check, rng);

  // KeyNet with a mix of keyed and unkeyed controllers.
  const int n_ctrl = 4;
  AudioModel kn = small_audio_model(rng, 3 * n_ctrl);
  r.keynet_params = kn.params().size();
  const auto kwindow = random_window(rng, kn.shape());
  const std::vector<double> flag{1, 0, 1, 0}, tin{0.3, 0, -0.7, 0}, tout{-0.2, 0, 0.4, 0}, pw{3.0, 1.0, 9.0, 1.5};
  LossFn kn_loss = [&](const std::vector<double>& p, std::vector<double>* g) {
    AudioModel m = kn;
    m.params() = p;
    AudioModel::Pass pass;
    const nn::Vec out = m.forward(kwindow, pass);
    nn::Vec d;
    const double loss = keynet_loss(out, KeyTargets{flag, tin, tout}, pw, 1.0, g ? &d : nullptr);
    if (g) m.backward(pass, d, *g);
    return loss;
  };
  r.keynet = gradient_check(kn_loss, kn.params(), n_check, rng);
  return r;
}

}  // namespace gradcheck
