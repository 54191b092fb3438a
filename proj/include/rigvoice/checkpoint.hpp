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

#include <json.hpp>

#include "rigvoice/audio.hpp"
#include "rigvoice/dataset.hpp"
#include "rigvoice/models.hpp"

namespace rigvoice {

// Container layout (little-endian):
//   "RIGVCKPT"            8 bytes
//   format version        u32
//   metadata length       u64, followed by UTF-8 JSON
//   parameter count       u64, followed by IEEE-754 binary64 values
constexpr std::uint32_t kCheckpointFormatVersion = 1;

enum class NetKind { kCvae, kAudioNet, kKeyNet };

const char* net_kind_name(NetKind kind);
NetKind net_kind_from_name(const std::string& name);

struct CheckpointMeta {
  NetKind kind = NetKind::kCvae;
  int configuration_index = 0;
  FaceConfiguration configuration;        // after pruning
  NormalizationTable normalization;
  MelParams mel;
  int window_frames = 33;
  double fps = 24.0;
  std::vector<std::string> emotion_names;
  int z_dim = 8;
  std::uint64_t seed = 0;
  std::string dataset_fingerprint;

  int conditions() const { return static_cast<int>(emotion_names.size()); }
};

struct Checkpoint {
  CheckpointMeta meta;
  nlohmann::json model;  // architecture + non-trainable state
  std::vector<double> params;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const CheckpointMeta& meta, const Cvae& model);
/// `pos_weight` is stored for KeyNet checkpoints only.
Checkpoint make_checkpoint(const CheckpointMeta& meta, const AudioModel& model,
                           const std::vector<double>& pos_weight = {});

Cvae cvae_from_checkpoint(const Checkpoint& ckpt);
AudioModel audio_model_from_checkpoint(const Checkpoint& ckpt);

nlohmann::json mel_params_to_json(const MelParams& m);
MelParams mel_params_from_json(const nlohmann::json& j);

}  // namespace rigvoice
