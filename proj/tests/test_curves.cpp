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
#include <numbers>

#include "rigvoice/curves.hpp"
#include "rigvoice/error.hpp"
#include "rigvoice/rng.hpp"
#include "support/oracles.hpp"

using namespace rigvoice;

namespace {

// Sum of a few random low-frequency sinusoids.
std::vector<double> smooth_curve(Rng& rng, int n) {
  std::vector<double> v(n, rng.uniform(-0.5, 0.5));
  for (int h = 0; h < 3; ++h) {
    const double amp = rng.uniform(0.05, 0.5), freq = rng.uniform(0.2, 3.0), phase = rng.uniform(0, 6.28);
    for (int f = 0; f < n; ++f) v[f] += amp * std::sin(2 * std::numbers::pi * freq * f / n + phase);
  }
  return v;
}

}  // namespace

TEST_CASE("hermite_eval matches the cubic basis") {
  const Key a{0, 0.0, 0.0, 0.0}, b{10, 1.0, 0.0, 0.0};
  CHECK(hermite_eval({0, 0.0, 0, 0}, {10, 0.0, 0, 0}, 5) == 0.0);
  CHECK(hermite_eval(a, b, 10) == 1.0);
  CHECK(hermite_eval(a, b, 5) == doctest::Approx(0.5).epsilon(1e-15));

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Key k0{2, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Key k1{2 + 1 + static_cast<int>(rng.below(20)), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    CHECK(hermite_eval(k0, k1, k0.frame) == k0.value);
    CHECK(hermite_eval(k0, k1, k1.frame) == doctest::Approx(k1.value).epsilon(1e-12));
    const double f = rng.uniform(k0.frame, k1.frame);
    CHECK(hermite_eval(k0, k1, f) == doctest::Approx(oracle::hermite(k0, k1, f)).epsilon(1e-12));
  }
}

TEST_CASE("hermite_eval rejects bad segments") {
  const Key a{0, 0, 0, 0}, b{10, 1, 0, 0};
  CHECK_THROWS_AS(hermite_eval(a, b, 11), Error);
  CHECK_THROWS_AS(hermite_eval(a, b, -0.5), Error);
  CHECK_THROWS_AS(hermite_eval(b, a, 5), Error);
  CHECK_THROWS_AS(hermite_eval(a, a, 0), Error);
  try {
    hermite_eval(a, b, 11);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDomain);
  }
}

TEST_CASE("reconstruct_dense holds ends and interpolates") {
  const std::vector<Key> one{{3, 0.7, 0, 0}};
  CHECK(reconstruct_dense(one, 6) == std::vector<double>(6, 0.7));
  const std::vector<Key> two{{0, 0, 0, 0}, {2, 1, 0, 0}};
  const auto r = reconstruct_dense(two, 3);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == doctest::Approx(0.5));
  CHECK(r[2] == 1.0);
  CHECK_THROWS_AS(reconstruct_dense(std::vector<Key>{}, 4), Error);
}

TEST_CASE("extract_keys on constant and linear input") {
  const auto c = extract_keys(std::vector<double>(100, 0.4), 0.01);
  REQUIRE(c.size() == 2);
  CHECK(c[0].frame == 0);
  CHECK(c[1].frame == 99);

  std::vector<double> ramp(50);
  for (int f = 0; f < 50; ++f) ramp[f] = f / 49.0;
  const auto k = extract_keys(ramp, 0.01);
  REQUIRE(k.size() == 2);
  CHECK(k[0].out_tangent == doctest::Approx(1.0 / 49));
  CHECK(k[1].in_tangent == doctest::Approx(1.0 / 49));
}

TEST_CASE("extract_keys follows the greedy refinement oracle on a sine") {
  std::vector<double> s(120);
  for (int f = 0; f < 120; ++f) s[f] = std::sin(2 * std::numbers::pi * f / 40.0);
  const auto got = extract_keys(s, 0.02);
  const auto want = oracle::greedy_keys(s, 0.02);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].frame == want[i].frame);
    CHECK(got[i].value == want[i].value);
  }
  const auto rec = reconstruct_dense(got, 120);
  for (int f = 0; f < 120; ++f) CHECK(std::abs(rec[f] - s[f]) <= 0.02);
}

TEST_CASE("extract_keys round trip on random smooth curves") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 20 + static_cast<int>(rng.below(200));
    const auto v = smooth_curve(rng, n);
    const double tol = rng.uniform(0.002, 0.05);
    const auto keys = extract_keys(v, tol);
    CHECK(keys.front().frame == 0);
    CHECK(keys.back().frame == n - 1);
    for (std::size_t i = 1; i < keys.size(); ++i) CHECK(keys[i].frame > keys[i - 1].frame);
    const auto rec = reconstruct_dense(keys, n);
    double worst = 0;
    for (int f = 0; f < n; ++f) worst = std::max(worst, std::abs(rec[f] - v[f]));
    CHECK(worst <= tol);
    CHECK(extract_keys(v, tol) == keys);
  }
  CHECK_THROWS_AS(extract_keys(std::vector<double>{0.0, NAN, 1.0}, 0.01), Error);
  CHECK_THROWS_AS(extract_keys(std::vector<double>{0.0}, 0.01), Error);
}

TEST_CASE("gaussian_smooth: identity, DC gain and analytic kernel") {
  Rng rng(5);
  const auto v = smooth_curve(rng, 64);
  CHECK(gaussian_smooth(v, 0.0) == v);
  for (double sigma : {0.5, 1.0, 2.0, 7.5}) {
    const auto c = gaussian_smooth(std::vector<double>(33, -1.25), sigma);
    for (double x : c) CHECK(std::abs(x + 1.25) <= 1e-9);
  }
  std::vector<double> impulse(41, 0.0);
  impulse[20] = 1.0;
  const auto out = gaussian_smooth(impulse, 2.0);
  const auto ref = oracle::gaussian_kernel(2.0);
  REQUIRE(ref.size() == 13);
  CHECK(out[20] == doctest::Approx(ref[6]).epsilon(1e-12));
  double sum = 0;
  for (double x : out) sum += x;
  CHECK(std::abs(sum - 1.0) <= 1e-9);

  const auto s = gaussian_smooth(v, 1.5);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  for (double x : s) CHECK((x >= *lo - 1e-12 && x <= *hi + 1e-12));
  CHECK_THROWS_AS(gaussian_smooth(v, -1.0), Error);
}

TEST_CASE("rate_filter snapping rule") {
  const std::vector<Key> five{{0, 0, 0, 0}, {1, 1, 0, 0}, {2, 2, 0, 0}, {3, 3, 0, 0}, {4, 4, 0, 0}};
  CHECK(rate_filter(five, 1) == five);
  auto two = rate_filter(five, 2);
  REQUIRE(two.size() == 3);
  CHECK(two[0].frame == 0);
  CHECK(two[1].frame == 2);
  CHECK(two[2].frame == 4);

  const std::vector<Key> sparse{{0, 0, 0, 0}, {3, 1, 0, 0}, {5, 2, 0, 0}, {7, 3, 0, 0}};
  const auto four = rate_filter(sparse, 4);
  REQUIRE(four.size() == 3);
  CHECK(four[0].frame == 0);
  CHECK(four[1].frame == 4);
  CHECK(four[1].value == 1.0);  // the key from frame 3 wins
  CHECK(four[2].frame == 7);
  CHECK_THROWS_AS(rate_filter(sparse, 3), Error);

  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Key> keys{{0, 0, 0, 0}};
    int f = 0;
    while (true) {
      f += 1 + static_cast<int>(rng.below(5));
      if (f > 60) break;
      keys.push_back({f, rng.uniform(), 0, 0});
    }
    for (int rate : {2, 4}) {
      const auto got = rate_filter(keys, rate);
      CHECK(got == oracle::rate_filter(keys, rate));
      CHECK(got.size() <= keys.size());
      for (std::size_t i = 0; i + 1 < got.size(); ++i) CHECK(got[i].frame % rate == 0);
      CHECK(got.back() == keys.back());
    }
  }
}

TEST_CASE("limit_tangents keeps every segment between its key values") {
  // Opposing and flat segments lose their tangents; compatible ones survive.
  const std::vector<Key> keys{{0, 0.0, 0, 5.0}, {10, 0.0, -1.0, 0.05}, {20, 1.0, 0.08, -0.3}, {30, 0.5, 0.04, 0}};
  const auto lim = limit_tangents(keys);
  CHECK(lim[0].out_tangent == 0.0);
  CHECK(lim[1].in_tangent == 0.0);
  CHECK(lim[1].out_tangent == doctest::Approx(0.05));
  CHECK(lim[2].in_tangent == doctest::Approx(0.08));
  CHECK(lim[2].out_tangent == doctest::Approx(-0.15));  // six times the secant, scaled to three
  CHECK(lim[3].in_tangent == 0.0);

  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Key> k{{0, rng.normal(), rng.normal(), rng.normal() * 3}};
    while (k.size() < 8) k.push_back({k.back().frame + 1 + static_cast<int>(rng.below(30)), rng.normal(),
                                      rng.normal() * 3, rng.normal() * 3});
    const auto out = limit_tangents(k);
    REQUIRE(out.size() == k.size());
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      CHECK(out[i].frame == k[i].frame);
      CHECK(out[i].value == k[i].value);
      const double lo = std::min(out[i].value, out[i + 1].value), hi = std::max(out[i].value, out[i + 1].value);
      for (double f = out[i].frame; f <= out[i + 1].frame; f += 0.25) {
        const double v = hermite_eval(out[i], out[i + 1], f);
        CHECK(v >= lo - 1e-12);
        CHECK(v <= hi + 1e-12);
      }
    }
  }
}
