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

// Synthetic oracle dataset. Audio is a sum of band-limited bursts; every
// controller is a fixed smooth function of the short-time energy in one
// band, plus +0.5 * weight on one designated controller per emotion.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rigvoice/audio.hpp"
#include "rigvoice/curves.hpp"
#include "rigvoice/dataset.hpp"
#include "rigvoice/rng.hpp"

namespace rigvoice {

/// Energy bands as half-open ranges of mel bins.
struct EnergyBand {
  int first_bin = 0;
  int last_bin = 0;  // exclusive
};

struct OracleController {
  std::string name;
  int band = -1;       // -1: never keyed, constant (exercises pruning)
  double rest = 0.0;   // value under silence
  double gain = 1.0;
};

struct SyntheticRig {
  std::vector<EnergyBand> bands;
  std::vector<OracleController> controllers;
  std::vector<FaceConfiguration> configurations;
  double energy_scale = 1.0;      // E0 in rest + gain * tanh(log1p(E / E0))
  double smoothing_sigma = 1.0;   // frames
  double emotion_offset = 0.5;
  double key_tolerance = 0.01;

  const OracleController& controller(const std::string& name) const;
};

/// Ten energy-driven controllers in mouth/tongue/upper configurations plus
/// one never-keyed controller in the upper configuration.
SyntheticRig default_synthetic_rig();

/// Name of the controller in `config` that carries emotion `emotion`'s
/// offset: the ((emotion - 1) mod n)-th energy-driven controller. Emotion 0
/// is the reference and designates nothing (empty string).
std::string designated_controller(const SyntheticRig& rig, const FaceConfiguration& config, int emotion);

struct SynthOptions {
  std::uint64_t seed = 1;
  int n_clips = 12;
  int frames_per_clip = 240;
  int emotions_used = 3;   // clips cycle through labels [0, emotions_used)
  int emotion_slots = kDefaultEmotionCount;
  double fps = 24.0;
  MelParams mel;
};

/// Band-limited bursts, quantized to 16-bit so the oracle sees exactly what a
/// WAV reader returns.
AudioClip synth_audio(const SyntheticRig& rig, Rng& rng, int frames, double fps, const MelParams& mel);

/// Mean band power around each animation frame, triangular weights over
/// +-2 mel frames.
std::vector<std::vector<double>> band_energy(const SyntheticRig& rig, const AudioClip& audio, int frames,
                                             double fps, const MelParams& mel);

/// Oracle curves for audio under a condition vector (per-emotion weights).
/// Dense values for every controller; keys from extract_keys on keyed ones.
RigAnimationClip oracle_clip(const SyntheticRig& rig, const AudioClip& audio, std::span<const double> weights,
                             int label, int frames, double fps, const std::string& name, const MelParams& mel);

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<RigAnimationClip> clips;
  std::vector<AudioClip> audio;
  std::vector<std::string> stems;
};

SyntheticDataset generate_synthetic_dataset(const SynthOptions& options, const SyntheticRig& rig);

/// Writes <stem>.json / <stem>.wav per clip and manifest.json.
void write_synthetic_dataset(const SyntheticDataset& data, const std::filesystem::path& out_dir);

}  // namespace rigvoice
