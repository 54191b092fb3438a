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
#include <cstring>
#include <numbers>

#include <fftw3.h>

#include "rigvoice/audio.hpp"
#include "rigvoice/error.hpp"
#include "support/oracles.hpp"

using namespace rigvoice;

namespace {

AudioClip sine(double hz, double seconds, int rate, double amp = 1.0) {
  AudioClip a;
  a.sample_rate = rate;
  a.samples.resize(static_cast<std::size_t>(std::lround(seconds * rate)));
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    a.samples[i] = amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  return a;
}

// Canonical 44-byte RIFF header followed by interleaved PCM16 frames.
std::vector<std::uint8_t> raw_wav(int channels, int rate, int frames) {
  std::vector<std::uint8_t> b;
  auto u32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i))); };
  auto u16 = [&](std::uint16_t v) { b.push_back(v & 0xff); b.push_back(v >> 8); };
  auto tag = [&](const char* t) { b.insert(b.end(), t, t + 4); };
  const std::uint32_t data = static_cast<std::uint32_t>(frames * channels * 2);
  tag("RIFF"); u32(36 + data); tag("WAVE");
  tag("fmt "); u32(16); u16(1); u16(static_cast<std::uint16_t>(channels)); u32(rate);
  u32(rate * channels * 2); u16(static_cast<std::uint16_t>(channels * 2)); u16(16);
  tag("data"); u32(data);
  b.resize(b.size() + data, 0);
  return b;
}

int dominant_hz(const AudioClip& a) {
  const int n = static_cast<int>(a.samples.size());
  std::vector<double> in(a.samples);
  std::vector<fftw_complex> out(n / 2 + 1);
  fftw_plan p = fftw_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE);
  fftw_execute(p);
  fftw_destroy_plan(p);
  int best = 0;
  double best_mag = -1;
  for (int k = 0; k <= n / 2; ++k) {
    const double m = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    if (m > best_mag) {
      best_mag = m;
      best = k;
    }
  }
  return static_cast<int>(std::lround(static_cast<double>(best) * a.sample_rate / n));
}

}  // namespace

TEST_CASE("wav round trip and format checks") {
  auto a = sine(300, 0.25, 16000, 0.5);
  const auto bytes = encode_wav(a);
  const auto b = decode_wav(bytes);
  CHECK(b.sample_rate == 16000);
  REQUIRE(b.samples.size() == a.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(std::abs(a.samples[i] - b.samples[i]) <= 1.0 / 32768);
  CHECK(encode_wav(b) == bytes);

  const auto stereo = raw_wav(2, 16000, 100);
  try {
    decode_wav(stereo);
    FAIL("stereo accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("mono_required", 0) == 0);
  }
  CHECK(decode_wav(raw_wav(1, 8000, 10)).samples.size() == 10);
  const std::vector<std::uint8_t> junk{'n', 'o', 'p', 'e'};
  CHECK_THROWS_AS(decode_wav(junk), Error);
}

TEST_CASE("resample keeps duration and pitch") {
  const auto same = sine(440, 0.1, 16000);
  CHECK(resample(same, 16000).samples == same.samples);

  AudioClip silence;
  silence.sample_rate = 48000;
  silence.samples.assign(48000, 0.0);
  const auto s = resample(silence, 16000);
  CHECK(s.sample_rate == 16000);
  CHECK(s.samples.size() == 16000);
  for (double x : s.samples) CHECK(x == 0.0);

  const auto down = resample(sine(440, 1.0, 48000, 0.8), 16000);
  CHECK(std::abs(down.duration_seconds() - 1.0) <= 1.0 / 16000);
  CHECK(std::abs(dominant_hz(down) - 440) <= 1);  // one DFT bin is 1 Hz here

  AudioClip empty;
  CHECK_THROWS_AS(resample(empty, 16000), Error);
}

TEST_CASE("mel spectrogram of silence is the log floor") {
  AudioClip a;
  a.sample_rate = 16000;
  a.samples.assign(16000, 0.0);
  const auto spec = melspectrogram(a);
  CHECK(spec.mel_bins == 64);
  CHECK(spec.time_frames == 63);  // ceil(16000 / 256)
  CHECK(spec.log_floor == std::log(1e-6));
  for (double v : spec.data) CHECK(v == spec.log_floor);
}

TEST_CASE("mel spectrogram argmax follows the analytic filter bank") {
  const MelParams p;
  const auto spec = melspectrogram(sine(440, 1.0, 16000));
  const int want = oracle::mel_bin_of(440, p.mel_bins, p.f_min, p.f_max);
  for (int t = 2; t < spec.time_frames - 2; ++t) {
    int arg = 0;
    for (int m = 1; m < spec.mel_bins; ++m)
      if (spec.at(m, t) > spec.at(arg, t)) arg = m;
    CHECK(arg == want);
  }
  CHECK_THROWS_AS(melspectrogram(sine(440, 0.1, 8000)), Error);
}

TEST_CASE("mel spectrogram shifts by one column per hop of delay") {
  const MelParams p;
  auto a = sine(1000, 0.5, 16000, 0.3);
  for (std::size_t i = 0; i < a.samples.size(); ++i) a.samples[i] *= 1.0 + 0.5 * std::sin(i * 0.001);
  AudioClip delayed = a;
  delayed.samples.insert(delayed.samples.begin(), p.hop, 0.0);
  const auto s0 = melspectrogram(a), s1 = melspectrogram(delayed);
  CHECK(s1.time_frames == s0.time_frames + 1);
  for (int m = 0; m < s0.mel_bins; ++m) {
    CHECK(s1.at(m, 0) == s1.log_floor);
    for (int t = 0; t < s0.time_frames; ++t) CHECK(std::abs(s1.at(m, t + 1) - s0.at(m, t)) <= 1e-9);
  }
}

TEST_CASE("window_for_frame centering and padding") {
  CHECK(center_mel_frame(48, 24.0, 0.016) == 125);

  MelSpectrogram spec;
  spec.mel_bins = 4;
  spec.time_frames = 200;
  spec.hop_seconds = 0.016;
  spec.log_floor = std::log(1e-6);
  spec.data.assign(4 * 200, 2.5);
  const auto w0 = window_for_frame(spec, 0, 24.0, 33);
  CHECK(w0.mel_bins == 4);
  CHECK(w0.window_frames == 33);
  for (int m = 0; m < 4; ++m) {
    for (int c = 0; c < 16; ++c) CHECK(w0.at(m, c) == spec.log_floor);
    for (int c = 16; c < 33; ++c) CHECK(w0.at(m, c) == 2.5);
  }
  const auto mid = window_for_frame(spec, 40, 24.0, 33);
  for (double v : mid.data) CHECK(v == 2.5);
  CHECK_THROWS_AS(window_for_frame(spec, -1, 24.0, 33), Error);
  CHECK_THROWS_AS(window_for_frame(spec, 0, 24.0, 32), Error);

  // Consecutive frames share all but a bounded number of columns.
  for (int t = 0; t < 200; ++t) spec.data[t] = t;
  const int bound = static_cast<int>(std::ceil(1.0 / (24.0 * 0.016))) + 1;
  for (int f = 20; f < 60; ++f) {
    const auto a = window_for_frame(spec, f, 24.0, 33), b = window_for_frame(spec, f + 1, 24.0, 33);
    const int shift = static_cast<int>(b.at(0, 0) - a.at(0, 0));
    CHECK(shift >= 0);
    CHECK(shift <= bound);
  }
}
