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

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rigvoice/audio.hpp"
#include "rigvoice/checkpoint.hpp"
#include "rigvoice/curves.hpp"
#include "rigvoice/models.hpp"

namespace rigvoice {

struct InferenceSettings {
  std::vector<double> emotion_weights;  // one per emotion slot
  double key_threshold = 0.5;
  bool smooth_upper = false;
  double smooth_sigma = 2.0;
  int rate = 1;
  double tangent_filter_sigma = 0.0;
  /// Reject weights outside [0, 1] instead of clamping them.
  bool strict_weights = false;
};

/// Throws kInvalidArgument for a bad threshold, sigma or rate.
void validate_settings(const InferenceSettings& settings);
nlohmann::json settings_to_json(const InferenceSettings& settings);
/// Missing fields keep their defaults; unknown fields are rejected.
InferenceSettings settings_from_json(const nlohmann::json& j);

/// Clamps each weight to [0, 1]. No renormalization: several emotions may be
/// fully on at once. Throws on a length mismatch, on non-finite weights and,
/// when `strict` is set, with kDomain on any weight outside [0, 1].
std::vector<double> mix_emotions(std::span<const double> weights, int n_emotions, bool strict = false);

/// Threshold the key probabilities, then suppress greedily with radius 1:
/// marked frames are taken by descending probability (earlier frame on
/// ties) and kept unless a neighbour was already kept. Keys are forced at
/// both ends. Forced endpoint keys take finite-difference slopes from
/// `values`; every key's value is sampled from `values`.
std::vector<Key> decode_keys(std::span<const double> probabilities, std::span<const double> in_tangents,
                             std::span<const double> out_tangents, double threshold,
                             std::span<const double> values);

/// The three networks of one face configuration.
struct ModelTriple {
  CheckpointMeta meta;  // taken from the cvae checkpoint
  Cvae cvae;
  AudioModel audionet;
  AudioModel keynet;
  std::array<std::string, 3> dataset_fingerprints;  // cvae, audionet, keynet
  std::array<std::string, 3> file_sha256;
};

struct ModelSet {
  std::vector<ModelTriple> triples;  // ordered by configuration index
  std::vector<std::string> emotion_names;
  MelParams mel;
  double fps = 24.0;
  int window_frames = 33;

  int emotion_count() const { return static_cast<int>(emotion_names.size()); }
  /// True when all checkpoints carry the same dataset fingerprint.
  bool fingerprints_consistent() const;
  /// {"dataset": ..., "checkpoints": {"<config>/<kind>": sha256}}. "dataset"
  /// is null when the set is mixed.
  nlohmann::json fingerprints_json() const;
};

/// Loads every `<dir>/<config>/{cvae,audionet,keynet}.ckpt` triple. Checks
/// shapes and pairing; fingerprint agreement is checked at inference time.
ModelSet load_models(const std::filesystem::path& dir);

struct ConfigurationResult {
  std::string name;
  bool upper_face = false;
  std::vector<ControllerCurve> controllers;  // keys plus dense values, denormalized
  std::vector<std::vector<double>> key_probability;  // [controller][frame]
  NormalizationTable normalization;
};

struct InferenceResult {
  double fps = 24.0;
  int frame_count = 0;
  std::vector<ConfigurationResult> configurations;
  InferenceSettings settings;
  nlohmann::json checkpoint_fingerprints;
};

/// Runs every configuration over `audio`. Refuses a mixed-fingerprint model
/// set with kFingerprintMismatch unless `allow_mixed` is set.
InferenceResult infer(const ModelSet& models, const AudioClip& audio, const InferenceSettings& settings,
                      bool allow_mixed = false);

}  // namespace rigvoice
