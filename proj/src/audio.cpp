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

#include "rigvoice/audio.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numbers>

#include "rigvoice/error.hpp"

namespace rigvoice {

namespace {

std::uint32_t read_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }
  double power(int bin) const { return out_[bin][0] * out_[bin][0] + out_[bin][1] * out_[bin][1]; }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

}  // namespace

double MelParams::log_floor() const { return std::log(log_offset); }

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  const auto* p = bytes.data();
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    fail(ErrorCode::kFormat, "not a RIFF/WAVE file");
  int channels = 0, bits = 0, format = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t len = read_u32(p + pos + 4);
    const std::uint8_t* body = p + pos + 8;
    const std::size_t avail = n - (pos + 8);
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (len < 16 || avail < 16) fail(ErrorCode::kFormat, "truncated fmt chunk");
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = read_u32(body + 4);
      bits = read_u16(body + 14);
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      data = body;
      data_len = std::min<std::size_t>(len, avail);
    }
    pos += 8 + len + (len & 1);
  }
  if (format == 0) fail(ErrorCode::kFormat, "missing fmt chunk");
  if (channels != 1)
    fail(ErrorCode::kFormat, "mono_required: expected 1 channel, got " + std::to_string(channels));
  if (format != 1 || bits != 16) fail(ErrorCode::kFormat, "only 16-bit PCM WAV is supported");
  if (rate == 0) fail(ErrorCode::kFormat, "sample rate is zero");
  if (data == nullptr) fail(ErrorCode::kFormat, "missing data chunk");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(data_len / 2);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const auto s = static_cast<std::int16_t>(read_u16(data + 2 * i));
    clip.samples[i] = s / 32768.0;
  }
  return clip;
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * n);
  put_tag(out, "RIFF");
  put_u32(out, 36 + 2 * n);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, 2 * n);
  for (double x : clip.samples) {
    const double c = std::clamp(x, -1.0, 32767.0 / 32768.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32768.0))));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  const auto bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AudioClip resample(const AudioClip& audio, int target_rate) {
  require(target_rate > 0, "resample: target rate must be positive");
  require(audio.sample_rate > 0, "resample: source rate must be positive");
  require(!audio.samples.empty(), "resample: empty audio");
  if (audio.sample_rate == target_rate) return audio;

  const double ratio = static_cast<double>(target_rate) / audio.sample_rate;
  const double cutoff = std::min(1.0, ratio);  // fraction of the source Nyquist
  constexpr int kZeroCrossings = 16;
  const double half_width = kZeroCrossings / cutoff;  // in source samples
  const auto n_in = static_cast<long>(audio.samples.size());
  const auto n_out = static_cast<long>(std::llround(n_in * ratio));

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.assign(static_cast<std::size_t>(std::max<long>(n_out, 1)), 0.0);
  for (long j = 0; j < static_cast<long>(out.samples.size()); ++j) {
    const double x = j / ratio;
    const long lo = std::max<long>(0, static_cast<long>(std::ceil(x - half_width)));
    const long hi = std::min<long>(n_in - 1, static_cast<long>(std::floor(x + half_width)));
    double acc = 0;
    for (long i = lo; i <= hi; ++i) {
      const double d = x - i;
      const double arg = cutoff * d;
      const double sinc = arg == 0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
      const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half_width);
      acc += audio.samples[i] * cutoff * sinc * win;
    }
    out.samples[j] = acc;
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_band_edges(const MelParams& params) {
  const double lo = hz_to_mel(params.f_min);
  const double hi = hz_to_mel(params.f_max);
  std::vector<double> edges(params.mel_bins + 2);
  for (int i = 0; i < params.mel_bins + 2; ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * i / (params.mel_bins + 1));
  return edges;
}

MelPower mel_power(const AudioClip& audio, const MelParams& params) {
  require(audio.sample_rate == params.sample_rate,
          "melspectrogram: expected " + std::to_string(params.sample_rate) + " Hz audio, got " +
              std::to_string(audio.sample_rate));
  require(!audio.samples.empty(), "melspectrogram: empty audio");

  const int n_fft = params.n_fft;
  const int n_bins = n_fft / 2 + 1;
  const auto n = static_cast<long>(audio.samples.size());
  const int frames = static_cast<int>((n + params.hop - 1) / params.hop);

  std::vector<double> window(n_fft);
  for (int i = 0; i < n_fft; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n_fft);

  // Sparse filterbank: per mel band, the first FFT bin and its weights.
  const auto edges = mel_band_edges(params);
  std::vector<int> first_bin(params.mel_bins);
  std::vector<std::vector<double>> weights(params.mel_bins);
  for (int m = 0; m < params.mel_bins; ++m) {
    const double f0 = edges[m], f1 = edges[m + 1], f2 = edges[m + 2];
    first_bin[m] = -1;
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * params.sample_rate / n_fft;
      double w = 0;
      if (f > f0 && f <= f1) w = (f - f0) / (f1 - f0);
      else if (f > f1 && f < f2) w = (f2 - f) / (f2 - f1);
      if (w > 0) {
        if (first_bin[m] < 0) first_bin[m] = k;
        weights[m].resize(k - first_bin[m] + 1, 0.0);
        weights[m].back() = w;
      }
    }
    if (first_bin[m] < 0) first_bin[m] = 0;
  }

  MelPower power;
  power.mel_bins = params.mel_bins;
  power.time_frames = frames;
  power.data.assign(static_cast<std::size_t>(params.mel_bins) * frames, 0.0);

  RealFft fft(n_fft);
  double* in = fft.input();
  for (int t = 0; t < frames; ++t) {
    const long start = static_cast<long>(t) * params.hop - n_fft / 2;
    bool silent = true;
    for (int i = 0; i < n_fft; ++i) {
      const long s = start + i;
      const double x = (s >= 0 && s < n) ? audio.samples[s] : 0.0;
      in[i] = x * window[i];
      silent = silent && x == 0.0;
    }
    if (silent) continue;
    fft.execute();
    for (int m = 0; m < params.mel_bins; ++m) {
      double e = 0;
      for (std::size_t j = 0; j < weights[m].size(); ++j) e += weights[m][j] * fft.power(first_bin[m] + static_cast<int>(j));
      power.data[static_cast<std::size_t>(m) * frames + t] = e;
    }
  }
  return power;
}

MelSpectrogram melspectrogram(const AudioClip& audio, const MelParams& params) {
  const MelPower power = mel_power(audio, params);
  MelSpectrogram spec;
  spec.mel_bins = power.mel_bins;
  spec.time_frames = power.time_frames;
  spec.hop_seconds = params.hop_seconds();
  spec.log_floor = params.log_floor();
  spec.data.resize(power.data.size());
  for (std::size_t i = 0; i < power.data.size(); ++i)
    spec.data[i] = std::log(power.data[i] + params.log_offset);
  return spec;
}

int center_mel_frame(int anim_frame, double fps, double hop_seconds) {
  return static_cast<int>(std::lround(anim_frame / fps / hop_seconds));
}

MelWindow window_for_frame(const MelSpectrogram& spec, int anim_frame, double fps, int window_frames) {
  require(anim_frame >= 0, "window_for_frame: negative animation frame");
  require(window_frames >= 1 && window_frames % 2 == 1, "window_for_frame: window_frames must be odd");
  require(fps > 0, "window_for_frame: fps must be > 0");
  MelWindow w;
  w.mel_bins = spec.mel_bins;
  w.window_frames = window_frames;
  w.center_anim_frame = anim_frame;
  w.data.assign(static_cast<std::size_t>(spec.mel_bins) * window_frames, spec.log_floor);
  const int first = center_mel_frame(anim_frame, fps, spec.hop_seconds) - window_frames / 2;
  for (int j = 0; j < window_frames; ++j) {
    const int t = first + j;
    if (t < 0 || t >= spec.time_frames) continue;
    for (int m = 0; m < spec.mel_bins; ++m)
      w.data[static_cast<std::size_t>(m) * window_frames + j] = spec.at(m, t);
  }
  return w;
}

}  // namespace rigvoice
