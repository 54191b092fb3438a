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

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rigvoice/audio.hpp"
#include "rigvoice/curves.hpp"

namespace rigvoice {

constexpr int kDefaultEmotionCount = 6;

std::vector<std::string> default_emotion_names();

struct ManifestEntry {
  std::string clip;   // paths as written in the manifest (relative to it)
  std::string audio;
  int emotion = 0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> clips;
  double fps = 24.0;
  std::vector<std::string> emotion_names = default_emotion_names();
  std::filesystem::path base_dir;  // where relative paths resolve; not serialized

  int emotion_count() const { return static_cast<int>(emotion_names.size()); }
  std::filesystem::path resolve(const std::string& p) const;
};

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j, std::filesystem::path base_dir);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

nlohmann::json clip_to_json(const RigAnimationClip& clip);
RigAnimationClip clip_from_json(const nlohmann::json& j);
RigAnimationClip load_clip(const std::filesystem::path& path);
void save_clip(const RigAnimationClip& clip, const std::filesystem::path& path);

struct FaceConfiguration {
  std::string name;
  std::vector<std::string> controller_names;
  bool upper_face = false;  // target of the smooth-upper-part setting

  bool operator==(const FaceConfiguration&) const = default;
};

nlohmann::json configuration_to_json(const FaceConfiguration& c);
FaceConfiguration configuration_from_json(const nlohmann::json& j);

/// Per-controller affine map of [min, max] onto [-1, 1].
class NormalizationTable {
 public:
  struct Range {
    double min = 0.0;
    double max = 1.0;

    bool operator==(const Range&) const = default;
  };

  NormalizationTable() = default;
  NormalizationTable(std::vector<std::string> names, std::vector<Range> ranges);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Range>& ranges() const { return ranges_; }

  double normalize(std::size_t i, double v) const;
  double denormalize(std::size_t i, double v_hat) const;
  /// Slopes scale without the offset.
  double normalize_slope(std::size_t i, double slope) const;
  double denormalize_slope(std::size_t i, double slope_hat) const;

  nlohmann::json to_json() const;
  static NormalizationTable from_json(const nlohmann::json& j);

  bool operator==(const NormalizationTable&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<Range> ranges_;
};

/// Keeps controllers that carry at least one key in some clip and whose
/// value range over all clips is non-degenerate. Order is preserved.
FaceConfiguration prune_controllers(std::span<const RigAnimationClip> clips, const FaceConfiguration& config);

NormalizationTable fit_normalization(std::span<const RigAnimationClip> clips, const FaceConfiguration& config);

/// Dense per-frame values of a controller, reconstructed from keys when the
/// clip only stores keys.
std::vector<double> controller_values(const RigAnimationClip& clip, const ControllerCurve& curve);

struct TrainingSample {
  std::shared_ptr<const MelWindow> mel_window;
  int clip = 0;
  int frame = 0;
  std::vector<double> controller_values;  // normalized
  std::vector<double> condition;          // one-hot, length N
  std::vector<double> key_flag;           // 0/1
  std::vector<double> in_tangent;         // normalized slope, 0 where no key
  std::vector<double> out_tangent;
};

/// Fallback tolerance (normalized units) for key targets when a clip has no
/// stored keys for a controller.
constexpr double kKeyFallbackTolerance = 0.01;

/// One window per (clip, frame); computed once and shared by every
/// configuration built from the same clips.
std::vector<std::vector<std::shared_ptr<const MelWindow>>> build_windows(
    std::span<const RigAnimationClip> clips, std::span<const MelSpectrogram> mels, int window_frames);

std::vector<TrainingSample> build_samples(
    std::span<const RigAnimationClip> clips, std::span<const AudioClip> audio,
    const std::vector<std::vector<std::shared_ptr<const MelWindow>>>& windows,
    const FaceConfiguration& config, const NormalizationTable& table, int n_emotions);

/// Clips, audio and features loaded from a manifest, resampled to the
/// canonical rate.
struct LoadedDataset {
  DatasetManifest manifest;
  std::vector<RigAnimationClip> clips;
  std::vector<AudioClip> audio;
  std::vector<MelSpectrogram> mels;
};

LoadedDataset load_dataset(const std::filesystem::path& manifest_path, const MelParams& mel = {});

/// Throws if audio duration and clip length disagree by more than one frame.
void check_duration(const RigAnimationClip& clip, const AudioClip& audio);

/// Content hash of the manifest plus every normalization table in use.
std::string dataset_fingerprint(const DatasetManifest& manifest, std::span<const NormalizationTable> tables);

/// Build a manifest from a directory of clip JSON files, each paired with a
/// WAV of the same stem.
DatasetManifest scan_scene_directory(const std::filesystem::path& dir);

}  // namespace rigvoice
