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

#include "rigvoice/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "rigvoice/error.hpp"
#include "rigvoice/hash.hpp"

namespace rigvoice {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::string> default_emotion_names() {
  return {"neutral", "happy", "angry", "surprised", "sad", "disgusted"};
}

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

void write_json_file(const json& j, const fs::path& path, int indent = 1) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(indent) << '\n';
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorCode::kFormat, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, where + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

fs::path DatasetManifest::resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

json manifest_to_json(const DatasetManifest& m) {
  json clips = json::array();
  for (const auto& c : m.clips) clips.push_back({{"clip", c.clip}, {"audio", c.audio}, {"emotion", c.emotion}});
  return {{"fps", m.fps}, {"emotion_names", m.emotion_names}, {"clips", clips}};
}

DatasetManifest manifest_from_json(const json& j, fs::path base_dir) {
  DatasetManifest m;
  m.base_dir = std::move(base_dir);
  m.fps = get_field<double>(j, "fps", "manifest");
  if (j.contains("emotion_names")) m.emotion_names = get_field<std::vector<std::string>>(j, "emotion_names", "manifest");
  require(m.fps > 0, "manifest: fps must be > 0", ErrorCode::kFormat);
  require(!m.emotion_names.empty(), "manifest: emotion_names is empty", ErrorCode::kFormat);
  for (const auto& c : get_field<json>(j, "clips", "manifest")) {
    ManifestEntry e{get_field<std::string>(c, "clip", "manifest clip"),
                    get_field<std::string>(c, "audio", "manifest clip"),
                    get_field<int>(c, "emotion", "manifest clip")};
    require(e.emotion >= 0 && e.emotion < m.emotion_count(),
            "manifest: emotion label " + std::to_string(e.emotion) + " out of range", ErrorCode::kFormat);
    m.clips.push_back(std::move(e));
  }
  require(!m.clips.empty(), "manifest: no clips", ErrorCode::kFormat);
  return m;
}

DatasetManifest load_manifest(const fs::path& path) {
  return manifest_from_json(read_json_file(path), path.parent_path());
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  write_json_file(manifest_to_json(m), path);
}

json clip_to_json(const RigAnimationClip& clip) {
  json controllers = json::array();
  for (const auto& c : clip.controllers) {
    json jc{{"name", c.name}};
    if (c.dense) jc["values"] = *c.dense;
    if (c.keys) {
      json keys = json::array();
      for (const auto& k : *c.keys)
        keys.push_back({{"frame", k.frame}, {"value", k.value}, {"in_tangent", k.in_tangent},
                        {"out_tangent", k.out_tangent}});
      jc["keys"] = std::move(keys);
    }
    controllers.push_back(std::move(jc));
  }
  return {{"name", clip.name},
          {"fps", clip.fps},
          {"frame_count", clip.frame_count},
          {"emotion", clip.emotion},
          {"controllers", std::move(controllers)}};
}

RigAnimationClip clip_from_json(const json& j) {
  RigAnimationClip clip;
  clip.name = get_field<std::string>(j, "name", "clip");
  const std::string where = "clip '" + clip.name + "'";
  clip.fps = get_field<double>(j, "fps", where);
  clip.frame_count = get_field<int>(j, "frame_count", where);
  clip.emotion = get_field<int>(j, "emotion", where);
  for (const auto& jc : get_field<json>(j, "controllers", where)) {
    ControllerCurve c;
    c.name = get_field<std::string>(jc, "name", where + " controller");
    if (jc.contains("values")) c.dense = get_field<std::vector<double>>(jc, "values", where);
    if (jc.contains("keys")) {
      std::vector<Key> keys;
      for (const auto& jk : jc.at("keys")) {
        keys.push_back({get_field<int>(jk, "frame", where + " key"), get_field<double>(jk, "value", where + " key"),
                        get_field<double>(jk, "in_tangent", where + " key"),
                        get_field<double>(jk, "out_tangent", where + " key")});
      }
      c.keys = std::move(keys);
    }
    clip.controllers.push_back(std::move(c));
  }
  return clip;
}

RigAnimationClip load_clip(const fs::path& path) { return clip_from_json(read_json_file(path)); }

void save_clip(const RigAnimationClip& clip, const fs::path& path) { write_json_file(clip_to_json(clip), path, -1); }

json configuration_to_json(const FaceConfiguration& c) {
  return {{"name", c.name}, {"controllers", c.controller_names}, {"upper_face", c.upper_face}};
}

FaceConfiguration configuration_from_json(const json& j) {
  FaceConfiguration c;
  c.name = get_field<std::string>(j, "name", "configuration");
  c.controller_names = get_field<std::vector<std::string>>(j, "controllers", "configuration '" + c.name + "'");
  c.upper_face = j.value("upper_face", c.name == "upper");
  require(!c.name.empty(), "configuration: empty name", ErrorCode::kFormat);
  require(!c.controller_names.empty(), "configuration '" + c.name + "': no controllers", ErrorCode::kFormat);
  return c;
}

// ----------------------------------------------------------- normalization

NormalizationTable::NormalizationTable(std::vector<std::string> names, std::vector<Range> ranges)
    : names_(std::move(names)), ranges_(std::move(ranges)) {
  require(names_.size() == ranges_.size(), "normalization table: names/ranges size mismatch");
  for (std::size_t i = 0; i < ranges_.size(); ++i)
    require(ranges_[i].max > ranges_[i].min,
            "normalization table: controller '" + names_[i] + "' has an empty range", ErrorCode::kInternal);
}

double NormalizationTable::normalize(std::size_t i, double v) const {
  const auto& r = ranges_.at(i);
  return 2.0 * (v - r.min) / (r.max - r.min) - 1.0;
}

double NormalizationTable::denormalize(std::size_t i, double v_hat) const {
  const auto& r = ranges_.at(i);
  return r.min + (v_hat + 1.0) * 0.5 * (r.max - r.min);
}

double NormalizationTable::normalize_slope(std::size_t i, double slope) const {
  const auto& r = ranges_.at(i);
  return 2.0 * slope / (r.max - r.min);
}

double NormalizationTable::denormalize_slope(std::size_t i, double slope_hat) const {
  const auto& r = ranges_.at(i);
  return slope_hat * 0.5 * (r.max - r.min);
}

json NormalizationTable::to_json() const {
  json out = json::array();
  for (std::size_t i = 0; i < names_.size(); ++i)
    out.push_back({{"name", names_[i]}, {"min", ranges_[i].min}, {"max", ranges_[i].max}});
  return out;
}

NormalizationTable NormalizationTable::from_json(const json& j) {
  std::vector<std::string> names;
  std::vector<Range> ranges;
  for (const auto& e : j) {
    names.push_back(get_field<std::string>(e, "name", "normalization"));
    ranges.push_back({get_field<double>(e, "min", "normalization"), get_field<double>(e, "max", "normalization")});
  }
  return NormalizationTable(std::move(names), std::move(ranges));
}

std::vector<double> controller_values(const RigAnimationClip& clip, const ControllerCurve& curve) {
  if (curve.dense) return *curve.dense;
  require(curve.keys && !curve.keys->empty(),
          "clip '" + clip.name + "': controller '" + curve.name + "' has no data");
  return reconstruct_dense(*curve.keys, clip.frame_count);
}

FaceConfiguration prune_controllers(std::span<const RigAnimationClip> clips, const FaceConfiguration& config) {
  require(!clips.empty(), "prune_controllers: no clips");
  FaceConfiguration out = config;
  out.controller_names.clear();
  for (const auto& name : config.controller_names) {
    bool keyed = false;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& clip : clips) {
      const auto* c = clip.find(name);
      if (c == nullptr) continue;
      keyed = keyed || (c->keys && !c->keys->empty());
      for (double v : controller_values(clip, *c)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (keyed && hi > lo) out.controller_names.push_back(name);
  }
  if (out.controller_names.empty())
    fail(ErrorCode::kConfiguration,
         "configuration '" + config.name + "': every controller was pruned (none keyed with a varying value)");
  return out;
}

NormalizationTable fit_normalization(std::span<const RigAnimationClip> clips, const FaceConfiguration& config) {
  std::vector<NormalizationTable::Range> ranges;
  for (const auto& name : config.controller_names) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& clip : clips) {
      const auto* c = clip.find(name);
      if (c == nullptr) continue;
      for (double v : controller_values(clip, *c)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!(hi > lo))
      fail(ErrorCode::kInternal, "fit_normalization: controller '" + name + "' has an empty range; prune first");
    ranges.push_back({lo, hi});
  }
  return NormalizationTable(config.controller_names, std::move(ranges));
}

void check_duration(const RigAnimationClip& clip, const AudioClip& audio) {
  const double audio_frames = audio.duration_seconds() * clip.fps;
  if (std::abs(audio_frames - clip.frame_count) > 1.0)
    fail(ErrorCode::kInvalidArgument,
         "clip '" + clip.name + "': audio covers " + std::to_string(audio_frames) + " frames but the clip has " +
             std::to_string(clip.frame_count));
}

std::vector<std::vector<std::shared_ptr<const MelWindow>>> build_windows(
    std::span<const RigAnimationClip> clips, std::span<const MelSpectrogram> mels, int window_frames) {
  require(clips.size() == mels.size(), "build_windows: clip/feature count mismatch");
  std::vector<std::vector<std::shared_ptr<const MelWindow>>> out(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    out[i].reserve(clips[i].frame_count);
    for (int f = 0; f < clips[i].frame_count; ++f)
      out[i].push_back(std::make_shared<const MelWindow>(window_for_frame(mels[i], f, clips[i].fps, window_frames)));
  }
  return out;
}

std::vector<TrainingSample> build_samples(
    std::span<const RigAnimationClip> clips, std::span<const AudioClip> audio,
    const std::vector<std::vector<std::shared_ptr<const MelWindow>>>& windows,
    const FaceConfiguration& config, const NormalizationTable& table, int n_emotions) {
  require(clips.size() == audio.size() && clips.size() == windows.size(), "build_samples: input size mismatch");
  require(table.names() == config.controller_names, "build_samples: normalization table does not match configuration");
  const std::size_t n_ctrl = config.controller_names.size();

  std::vector<TrainingSample> samples;
  for (std::size_t ci = 0; ci < clips.size(); ++ci) {
    const auto& clip = clips[ci];
    check_duration(clip, audio[ci]);
    require(static_cast<int>(windows[ci].size()) == clip.frame_count, "build_samples: window count mismatch");
    require(clip.emotion >= 0 && clip.emotion < n_emotions, "build_samples: emotion out of range");

    const auto n = static_cast<std::size_t>(clip.frame_count);
    std::vector<std::vector<double>> values(n_ctrl), flags(n_ctrl, std::vector<double>(n, 0.0)),
        tin(n_ctrl, std::vector<double>(n, 0.0)), tout(n_ctrl, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < n_ctrl; ++k) {
      const auto* curve = clip.find(config.controller_names[k]);
      require(curve != nullptr,
              "clip '" + clip.name + "' lacks controller '" + config.controller_names[k] + "'");
      const auto raw = controller_values(clip, *curve);
      values[k].resize(n);
      for (std::size_t f = 0; f < n; ++f) values[k][f] = table.normalize(k, raw[f]);
      if (curve->keys && !curve->keys->empty()) {
        for (const auto& key : *curve->keys) {
          flags[k][key.frame] = 1.0;
          tin[k][key.frame] = table.normalize_slope(k, key.in_tangent);
          tout[k][key.frame] = table.normalize_slope(k, key.out_tangent);
        }
      } else {
        for (const auto& key : extract_keys(values[k], kKeyFallbackTolerance)) {
          flags[k][key.frame] = 1.0;
          tin[k][key.frame] = key.in_tangent;
          tout[k][key.frame] = key.out_tangent;
        }
      }
    }
    for (std::size_t f = 0; f < n; ++f) {
      TrainingSample s;
      s.mel_window = windows[ci][f];
      s.clip = static_cast<int>(ci);
      s.frame = static_cast<int>(f);
      s.condition.assign(n_emotions, 0.0);
      s.condition[clip.emotion] = 1.0;
      for (std::size_t k = 0; k < n_ctrl; ++k) {
        s.controller_values.push_back(values[k][f]);
        s.key_flag.push_back(flags[k][f]);
        s.in_tangent.push_back(tin[k][f]);
        s.out_tangent.push_back(tout[k][f]);
      }
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

LoadedDataset load_dataset(const fs::path& manifest_path, const MelParams& mel) {
  LoadedDataset d;
  d.manifest = load_manifest(manifest_path);
  for (const auto& entry : d.manifest.clips) {
    auto clip = load_clip(d.manifest.resolve(entry.clip));
    require(clip.emotion == entry.emotion,
            "clip '" + clip.name + "': emotion differs from the manifest entry", ErrorCode::kFormat);
    require(std::abs(clip.fps - d.manifest.fps) < 1e-9,
            "clip '" + clip.name + "': fps differs from the manifest", ErrorCode::kFormat);
    validate_clip(clip, d.manifest.emotion_count());
    clip.audio_ref = entry.audio;
    auto audio = read_wav(d.manifest.resolve(entry.audio));
    if (audio.sample_rate != mel.sample_rate) audio = resample(audio, mel.sample_rate);
    check_duration(clip, audio);
    d.mels.push_back(melspectrogram(audio, mel));
    d.clips.push_back(std::move(clip));
    d.audio.push_back(std::move(audio));
  }
  return d;
}

std::string dataset_fingerprint(const DatasetManifest& manifest, std::span<const NormalizationTable> tables) {
  json tj = json::array();
  for (const auto& t : tables) tj.push_back(t.to_json());
  return sha256_hex(manifest_to_json(manifest).dump() + "\n" + tj.dump());
}

DatasetManifest scan_scene_directory(const fs::path& dir) {
  require(fs::is_directory(dir), "extract: '" + dir.string() + "' is not a directory");
  std::vector<fs::path> clip_files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") clip_files.push_back(e.path());
  std::sort(clip_files.begin(), clip_files.end());

  DatasetManifest m;
  m.base_dir = dir;
  bool have_fps = false;
  for (const auto& path : clip_files) {
    json j = read_json_file(path);
    if (!j.contains("controllers")) continue;  // not a clip (e.g. an existing manifest)
    const auto clip = clip_from_json(j);
    validate_clip(clip, m.emotion_count());
    auto wav = path;
    wav.replace_extension(".wav");
    require(fs::exists(wav), "extract: no audio '" + wav.filename().string() + "' for clip " + path.filename().string());
    if (!have_fps) {
      m.fps = clip.fps;
      have_fps = true;
    }
    require(std::abs(clip.fps - m.fps) < 1e-9, "extract: clips disagree on fps");
    m.clips.push_back({fs::absolute(path).string(), fs::absolute(wav).string(), clip.emotion});
  }
  require(!m.clips.empty(), "extract: no clip files found in " + dir.string());
  return m;
}

}  // namespace rigvoice
