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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rigvoice {

struct AudioClip {
  std::vector<double> samples;  // mono, [-1, 1]
  int sample_rate = 16000;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Mel front-end parameters. Stored in checkpoints so a model always knows
/// how its inputs were computed.
struct MelParams {
  int sample_rate = 16000;
  int n_fft = 512;
  int hop = 256;
  int mel_bins = 64;
  double f_min = 55.0;
  double f_max = 7600.0;
  double log_offset = 1e-6;

  double hop_seconds() const { return static_cast<double>(hop) / sample_rate; }
  double log_floor() const;

  bool operator==(const MelParams&) const = default;
};

/// Log-mel magnitudes, row-major [mel_bins x time_frames].
struct MelSpectrogram {
  int mel_bins = 0;
  int time_frames = 0;
  double hop_seconds = 0.0;
  double log_floor = 0.0;
  std::vector<double> data;

  double at(int bin, int frame) const { return data[static_cast<std::size_t>(bin) * time_frames + frame]; }
};

/// Fixed-shape slice [mel_bins x window_frames], row-major.
struct MelWindow {
  int mel_bins = 0;
  int window_frames = 0;
  int center_anim_frame = 0;
  std::vector<double> data;

  double at(int bin, int col) const { return data[static_cast<std::size_t>(bin) * window_frames + col]; }
};

// WAV I/O. Only mono PCM16 is accepted on read; stereo input is rejected
// with an Error whose message starts with "mono_required".
AudioClip read_wav(const std::filesystem::path& path);
AudioClip decode_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

/// Windowed-sinc resampler. Output length is round(n * target / source).
AudioClip resample(const AudioClip& audio, int target_rate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filter edges in Hz: mel_bins + 2 points equally spaced in mel.
std::vector<double> mel_band_edges(const MelParams& params);

/// Linear mel power, row-major [mel_bins x time_frames].
struct MelPower {
  int mel_bins = 0;
  int time_frames = 0;
  std::vector<double> data;
};

MelPower mel_power(const AudioClip& audio, const MelParams& params = {});

/// Center-padded STFT (zero padding, periodic Hann), power spectrum, HTK mel
/// filterbank, log(x + offset). Frame t is centered on sample t * hop, giving
/// ceil(n / hop) frames.
MelSpectrogram melspectrogram(const AudioClip& audio, const MelParams& params = {});

/// Slice centered on mel frame round(anim_frame / fps / hop_seconds).
/// Columns outside the spectrogram are log_floor.
MelWindow window_for_frame(const MelSpectrogram& spec, int anim_frame, double fps,
                           int window_frames);

int center_mel_frame(int anim_frame, double fps, double hop_seconds);

}  // namespace rigvoice
