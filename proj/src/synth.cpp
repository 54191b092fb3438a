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

#include "rigvoice/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "rigvoice/error.hpp"

namespace rigvoice {

namespace fs = std::filesystem;

const OracleController& SyntheticRig::controller(const std::string& name) const {
  for (const auto& c : controllers)
    if (c.name == name) return c;
  fail(ErrorCode::kNotFound, "synthetic rig has no controller '" + name + "'");
}

SyntheticRig default_synthetic_rig() {
  SyntheticRig rig;
  rig.bands = {{2, 14}, {14, 26}, {26, 38}, {38, 50}, {50, 62}};
  rig.controllers = {
      {"jaw_open", 0, 0.0, 1.0},     {"lip_wide", 1, 0.1, 0.8},    {"lip_pucker", 2, -0.1, 0.7},
      {"lip_corner", 3, 0.0, 0.6},   {"tongue_up", 2, 0.0, 0.9},   {"tongue_out", 4, 0.05, 0.7},
      {"tongue_curl", 3, 0.0, 0.8},  {"brow_raise", 1, 0.0, 0.6},  {"brow_furrow", 4, 0.1, 0.7},
      {"eye_squint", 0, 0.0, 0.5},   {"ear_wiggle", -1, 0.0, 0.0},
  };
  rig.configurations = {
      {"mouth", {"jaw_open", "lip_wide", "lip_pucker", "lip_corner"}, false},
      {"tongue", {"tongue_up", "tongue_out", "tongue_curl"}, false},
      {"upper", {"brow_raise", "brow_furrow", "eye_squint", "ear_wiggle"}, true},
  };
  rig.energy_scale = 0.3;
  return rig;
}

std::string designated_controller(const SyntheticRig& rig, const FaceConfiguration& config, int emotion) {
  if (emotion <= 0) return {};
  std::vector<std::string> active;
  for (const auto& name : config.controller_names)
    if (rig.controller(name).band >= 0) active.push_back(name);
  if (active.empty()) return {};
  return active[static_cast<std::size_t>(emotion - 1) % active.size()];
}

AudioClip synth_audio(const SyntheticRig& rig, Rng& rng, int frames, double fps, const MelParams& mel) {
  require(frames >= 2 && fps > 0, "synth_audio: bad framing");
  const int sr = mel.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(frames / fps * sr));
  const double duration = static_cast<double>(n) / sr;
  AudioClip clip;
  clip.sample_rate = sr;
  clip.samples.assign(n, 0.0);

  const auto edges = mel_band_edges(mel);
  constexpr int kPartials = 4;
  for (const auto& band : rig.bands) {
    const double f_lo = edges[band.first_bin + 1];
    const double f_hi = edges[band.last_bin];
    double t = 0;
    for (;;) {
      t += -std::log(1.0 - rng.uniform()) * 1.1;  // mean gap 1.1 s
      const double len = rng.uniform(0.15, 0.6);
      if (t >= duration) break;
      const double amp = rng.uniform(0.02, 0.08);
      double freq[kPartials], phase[kPartials];
      for (int p = 0; p < kPartials; ++p) {
        freq[p] = rng.uniform(f_lo, f_hi);
        phase[p] = rng.uniform(0, 2 * std::numbers::pi);
      }
      const auto s0 = static_cast<std::size_t>(t * sr);
      const auto s1 = std::min(n, static_cast<std::size_t>((t + len) * sr));
      for (std::size_t s = s0; s < s1; ++s) {
        const double u = static_cast<double>(s - s0) / (len * sr);
        const double env = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * u);
        double x = 0;
        for (int p = 0; p < kPartials; ++p)
          x += std::sin(2 * std::numbers::pi * freq[p] * static_cast<double>(s) / sr + phase[p]);
        clip.samples[s] += amp * env * x / kPartials;
      }
      t += len;
    }
  }
  return decode_wav(encode_wav(clip));
}

std::vector<std::vector<double>> band_energy(const SyntheticRig& rig, const AudioClip& audio, int frames,
                                             double fps, const MelParams& mel) {
  const MelPower power = mel_power(audio, mel);
  static constexpr double kWeights[5] = {1, 2, 3, 2, 1};
  std::vector<std::vector<double>> out(rig.bands.size(), std::vector<double>(frames, 0.0));
  for (std::size_t b = 0; b < rig.bands.size(); ++b) {
    const auto& band = rig.bands[b];
    const int width = band.last_bin - band.first_bin;
    for (int f = 0; f < frames; ++f) {
      const int center = center_mel_frame(f, fps, mel.hop_seconds());
      double acc = 0;
      for (int d = -2; d <= 2; ++d) {
        const int t = center + d;
        if (t < 0 || t >= power.time_frames) continue;
        double e = 0;
        for (int m = band.first_bin; m < band.last_bin; ++m)
          e += power.data[static_cast<std::size_t>(m) * power.time_frames + t];
        acc += kWeights[d + 2] * e / width;
      }
      out[b][f] = acc / 9.0;
    }
  }
  return out;
}

RigAnimationClip oracle_clip(const SyntheticRig& rig, const AudioClip& audio, std::span<const double> weights,
                             int label, int frames, double fps, const std::string& name, const MelParams& mel) {
  const auto energy = band_energy(rig, audio, frames, fps, mel);
  RigAnimationClip clip;
  clip.name = name;
  clip.fps = fps;
  clip.frame_count = frames;
  clip.emotion = label;

  for (const auto& config : rig.configurations) {
    std::vector<std::string> designated(weights.size());
    for (std::size_t e = 0; e < weights.size(); ++e)
      designated[e] = designated_controller(rig, config, static_cast<int>(e));
    for (const auto& cname : config.controller_names) {
      const auto& oc = rig.controller(cname);
      ControllerCurve curve;
      curve.name = cname;
      if (oc.band < 0) {
        curve.dense = std::vector<double>(frames, oc.rest);
        clip.controllers.push_back(std::move(curve));
        continue;
      }
      std::vector<double> v(frames);
      for (int f = 0; f < frames; ++f)
        v[f] = oc.rest + oc.gain * std::tanh(std::log1p(energy[oc.band][f] / rig.energy_scale));
      v = gaussian_smooth(v, rig.smoothing_sigma);
      double offset = 0;
      for (std::size_t e = 0; e < weights.size(); ++e)
        if (designated[e] == cname) offset += rig.emotion_offset * weights[e];
      for (double& x : v) x += offset;
      curve.keys = extract_keys(v, rig.key_tolerance);
      curve.dense = std::move(v);
      clip.controllers.push_back(std::move(curve));
    }
  }
  return clip;
}

SyntheticDataset generate_synthetic_dataset(const SynthOptions& options, const SyntheticRig& rig) {
  require(options.n_clips >= 1, "synth: need at least one clip");
  require(options.frames_per_clip >= 2, "synth: frames_per_clip must be >= 2");
  require(options.emotions_used >= 1 && options.emotions_used <= options.emotion_slots,
          "synth: emotions_used must be in [1, emotion_slots]");
  SyntheticDataset data;
  data.manifest.fps = options.fps;
  auto names = default_emotion_names();
  names.resize(options.emotion_slots);
  for (int i = kDefaultEmotionCount; i < options.emotion_slots; ++i) names[i] = "emotion_" + std::to_string(i);
  data.manifest.emotion_names = names;

  Rng rng(options.seed);
  for (int i = 0; i < options.n_clips; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "clip_%03d", i);
    const int label = i % options.emotions_used;
    std::vector<double> weights(options.emotion_slots, 0.0);
    weights[label] = 1.0;
    auto audio = synth_audio(rig, rng, options.frames_per_clip, options.fps, options.mel);
    auto clip = oracle_clip(rig, audio, weights, label, options.frames_per_clip, options.fps, stem, options.mel);
    clip.audio_ref = std::string(stem) + ".wav";
    data.manifest.clips.push_back({std::string(stem) + ".json", std::string(stem) + ".wav", label});
    data.stems.emplace_back(stem);
    data.clips.push_back(std::move(clip));
    data.audio.push_back(std::move(audio));
  }
  return data;
}

void write_synthetic_dataset(const SyntheticDataset& data, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < data.clips.size(); ++i) {
    save_clip(data.clips[i], out_dir / (data.stems[i] + ".json"));
    write_wav(out_dir / (data.stems[i] + ".wav"), data.audio[i]);
  }
  save_manifest(data.manifest, out_dir / "manifest.json");
}

}  // namespace rigvoice
