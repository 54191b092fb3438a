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

#include <doctest.h>

#include <cmath>

#include "rigvoice/error.hpp"
#include "rigvoice/models.hpp"
#include "support/gradcheck.hpp"

using namespace rigvoice;

TEST_CASE("cvae_loss closed forms") {
  nn::Vec x(3);
  x << 0.1, -0.4, 0.9;
  const nn::Vec zero = nn::Vec::Zero(4);
  CHECK(cvae_loss(x, x, zero, zero, 0.05) == 0.0);
  const nn::Vec ones = nn::Vec::Ones(4);
  // KL of N(1, 1) against N(0, 1) is 0.5 per dimension.
  CHECK(cvae_loss(x, x, ones, zero, 1.0) == doctest::Approx(4 * 0.5));
  nn::Vec x_hat = x;
  x_hat[1] += 0.3;
  CHECK(cvae_loss(x, x_hat, ones, zero, 0.0) == doctest::Approx(0.09 / 3));
}

TEST_CASE("cvae mean mode is deterministic and feeds mu to the decoder") {
  Rng rng(1);
  Cvae m(CvaeShape{5, 6, 8, {32, 16}});
  m.init(rng);
  nn::Vec x = gradcheck::random_vec(rng, 5, 0.5), c = nn::Vec::Zero(6);
  c[1] = 1;
  const auto a = m.forward(x, c, LatentMode::kMean), b = m.forward(x, c, LatentMode::kMean);
  CHECK(a.x_hat == b.x_hat);
  CHECK(a.z == a.mu);
  CHECK(m.decode(a.mu, c) == a.x_hat);
  CHECK(m.encode_mean(x, c) == a.mu);
  CHECK(a.x_hat.size() == 5);
  CHECK_THROWS_AS(m.forward(gradcheck::random_vec(rng, 4), c, LatentMode::kMean), Error);
  CHECK_THROWS_AS(m.forward(x, c, LatentMode::kSample, nullptr), Error);

  // Sample mode draws z = mu + exp(logvar / 2) * eps.
  Rng r1(9);
  const auto s = m.forward(x, c, LatentMode::kSample, &r1);
  for (int i = 0; i < 8; ++i) CHECK(s.z[i] == doctest::Approx(s.mu[i] + std::exp(0.5 * s.logvar[i]) * s.eps[i]));
}

TEST_CASE("audionet and keynet losses") {
  nn::Vec z(3);
  z << 0.2, -1.0, 0.5;
  CHECK(audionet_loss(z, z) == 0.0);
  CHECK(audionet_loss(z + nn::Vec::Ones(3), z) == doctest::Approx(1.0));

  const std::vector<double> flag{1, 0}, tin{0.3, 0.0}, tout{-0.1, 0.0}, pw{4.0, 4.0};
  nn::Vec perfect(6);
  perfect << 50, -50, 0.3, 123.0, -0.1, -77.0;  // tangents of unkeyed channel ignored
  CHECK(keynet_loss(perfect, {flag, tin, tout}, pw, 1.0) <= 4.0 * 1e-7);

  const std::vector<double> none{0, 0};
  nn::Vec p(6);
  p << -3, -2, 9, 9, 9, 9;
  const double with_tangents = keynet_loss(p, {none, tin, tout}, pw, 1.0);
  p.tail(4).setZero();
  CHECK(keynet_loss(p, {none, tin, tout}, pw, 1.0) == with_tangents);
}

TEST_CASE("positive class weight is negatives over positives") {
  const std::vector<double> counts{10, 0, 50};
  const auto w = positive_class_weights(counts, 100);
  CHECK(w[0] == doctest::Approx(9.0));
  CHECK(w[1] == 1.0);
  CHECK(w[2] == doctest::Approx(1.0));
}

TEST_CASE("gradient check of a linear model with squared error") {
  Rng rng(4);
  const int n = 12;
  nn::Vec xin = gradcheck::random_vec(rng, n);
  const double target = 0.7;
  LossFn loss = [&](const std::vector<double>& p, std::vector<double>* g) {
    double y = 0;
    for (int i = 0; i < n; ++i) y += p[i] * xin[i];
    const double r = y - target;
    if (g)
      for (int i = 0; i < n; ++i) (*g)[i] += 2 * r * xin[i];
    return r * r;
  };
  std::vector<double> p(n);
  for (double& v : p) v = rng.normal();
  CHECK(gradient_check(loss, p, n, rng) <= 1e-7);

  LossFn bad = [](const std::vector<double>&, std::vector<double>*) { return NAN; };
  CHECK_THROWS_AS(gradient_check(bad, p, 5, rng), Error);
}

TEST_CASE("analytic gradients of all three losses match finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = gradcheck::run(seed);
    CHECK(r.cvae_params <= 5000);
    CHECK(r.audio_params <= 5000);
    CHECK(r.keynet_params <= 5000);
    CHECK(r.cvae_sample <= 1e-4);
    CHECK(r.cvae_mean <= 1e-4);
    CHECK(r.audionet <= 1e-4);
    CHECK(r.keynet <= 1e-4);
  }
}

TEST_CASE("audio model output shape and finiteness on extreme windows") {
  Rng rng(8);
  AudioModel m(AudioShape{});
  m.init(rng);
  std::vector<double> floor_window(64 * 33, std::log(1e-6)), loud(64 * 33, std::log(512.0 * 512.0));
  for (const auto* w : {&floor_window, &loud}) {
    const auto out = m.forward(*w);
    CHECK(out.size() == 8);
    CHECK(out.allFinite());
  }
  CHECK_THROWS_AS(m.forward(std::vector<double>(10, 0.0)), Error);
}
