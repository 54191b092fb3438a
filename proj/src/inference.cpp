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

#include "rigvoice/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include "rigvoice/error.hpp"
#include "rigvoice/hash.hpp"
#include "rigvoice/nn.hpp"

namespace rigvoice {

using nlohmann::json;
namespace fs = std::filesystem;

void validate_settings(const InferenceSettings& s) {
  require(s.key_threshold > 0 && s.key_threshold < 1, "key_threshold must be in (0, 1)");
  require(std::isfinite(s.smooth_sigma) && s.smooth_sigma >= 0, "smooth_sigma must be >= 0");
  require(std::isfinite(s.tangent_filter_sigma) && s.tangent_filter_sigma >= 0, "tangent_filter_sigma must be >= 0");
  require(s.rate == 1 || s.rate == 2 || s.rate == 4, "rate must be 1, 2 or 4");
}

json settings_to_json(const InferenceSettings& s) {
  return {{"emotion_weights", s.emotion_weights},       {"key_threshold", s.key_threshold},
          {"smooth_upper", s.smooth_upper},             {"smooth_sigma", s.smooth_sigma},
          {"rate", s.rate},                             {"tangent_filter_sigma", s.tangent_filter_sigma},
          {"strict_weights", s.strict_weights}};
}

InferenceSettings settings_from_json(const json& j) {
  require(j.is_object(), "settings: expected a JSON object");
  static const std::set<std::string> known = {"emotion_weights", "key_threshold", "smooth_upper",  "smooth_sigma",
                                              "rate",            "tangent_filter_sigma", "strict_weights"};
  for (const auto& [key, value] : j.items()) require(known.count(key) > 0, "settings: unknown field '" + key + "'");
  InferenceSettings s;
  try {
    s.emotion_weights = j.value("emotion_weights", s.emotion_weights);
    s.key_threshold = j.value("key_threshold", s.key_threshold);
    s.smooth_upper = j.value("smooth_upper", s.smooth_upper);
    s.smooth_sigma = j.value("smooth_sigma", s.smooth_sigma);
    s.rate = j.value("rate", s.rate);
    s.tangent_filter_sigma = j.value("tangent_filter_sigma", s.tangent_filter_sigma);
    s.strict_weights = j.value("strict_weights", s.strict_weights);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("settings: ") + e.what());
  }
  return s;
}

std::vector<double> mix_emotions(std::span<const double> weights, int n_emotions, bool strict) {
  require(static_cast<int>(weights.size()) == n_emotions,
          "expected " + std::to_string(n_emotions) + " emotion weights, got " + std::to_string(weights.size()));
  std::vector<double> c(weights.begin(), weights.end());
  for (std::size_t i = 0; i < c.size(); ++i) {
    require(std::isfinite(c[i]), "emotion weight " + std::to_string(i) + " is not finite");
    if (strict && (c[i] < 0 || c[i] > 1))
      fail(ErrorCode::kDomain, "emotion weight " + std::to_string(i) + " is outside [0, 1]");
    c[i] = std::clamp(c[i], 0.0, 1.0);
  }
  return c;
}

std::vector<Key> decode_keys(std::span<const double> p, std::span<const double> tin, std::span<const double> tout,
                             double threshold, std::span<const double> values) {
  const auto n = static_cast<int>(p.size());
  require(n >= 2, "decode_keys: need at least two frames");
  require(tin.size() == p.size() && tout.size() == p.size() && values.size() == p.size(),
          "decode_keys: length mismatch");

  // Greedy radius-1 suppression: visit marked frames by descending p (earlier
  // frame first on ties) and keep each one whose neighbours are not kept yet.
  std::vector<int> order;
  for (int f = 0; f < n; ++f)
    if (p[f] >= threshold) order.push_back(f);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
  std::vector<char> kept(n, 0);
  for (int f : order)
    if (!(f > 0 && kept[f - 1]) && !(f + 1 < n && kept[f + 1])) kept[f] = 1;

  std::vector<Key> keys;
  for (int f = 0; f < n; ++f) {
    if (kept[f]) {
      keys.push_back({f, values[f], tin[f], tout[f]});
    } else if (f == 0 || f == n - 1) {
      const double slope = finite_difference_slope(values, f);
      keys.push_back({f, values[f], slope, slope});
    }
  }
  return keys;
}

// ------------------------------------------------------------- model set

bool ModelSet::fingerprints_consistent() const {
  std::set<std::string> all;
  for (const auto& t : triples) all.insert(t.dataset_fingerprints.begin(), t.dataset_fingerprints.end());
  return all.size() <= 1;
}

json ModelSet::fingerprints_json() const {
  json checkpoints = json::object();
  static constexpr NetKind kinds[3] = {NetKind::kCvae, NetKind::kAudioNet, NetKind::kKeyNet};
  for (const auto& t : triples)
    for (int k = 0; k < 3; ++k)
      checkpoints[t.meta.configuration.name + "/" + net_kind_name(kinds[k])] = t.file_sha256[k];
  json dataset = nullptr;
  if (!triples.empty() && fingerprints_consistent()) dataset = triples.front().dataset_fingerprints[0];
  return {{"dataset", dataset}, {"checkpoints", checkpoints}};
}

namespace {

Checkpoint read_checkpoint(const fs::path& path, std::string& sha) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kNotFound, "missing checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  sha = sha256_hex(bytes);
  return parse_checkpoint(bytes);
}

void require_same_setup(const CheckpointMeta& a, const CheckpointMeta& b, const std::string& what) {
  require(a.configuration.name == b.configuration.name &&
              a.configuration.controller_names == b.configuration.controller_names,
          what + ": configuration differs from its cvae", ErrorCode::kFormat);
  require(a.normalization == b.normalization, what + ": normalization differs from its cvae", ErrorCode::kFormat);
  require(a.mel == b.mel && a.window_frames == b.window_frames && a.fps == b.fps,
          what + ": audio front-end differs from its cvae", ErrorCode::kFormat);
  require(a.emotion_names == b.emotion_names, what + ": emotion slots differ from its cvae", ErrorCode::kFormat);
}

}  // namespace

ModelSet load_models(const fs::path& dir) {
  require(fs::is_directory(dir), "checkpoint directory '" + dir.string() + "' does not exist", ErrorCode::kNotFound);
  std::vector<fs::path> config_dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / "cvae.ckpt")) config_dirs.push_back(e.path());
  std::sort(config_dirs.begin(), config_dirs.end());
  require(!config_dirs.empty(), "no checkpoints under '" + dir.string() + "'", ErrorCode::kNotFound);

  ModelSet set;
  for (const auto& cdir : config_dirs) {
    ModelTriple t;
    const auto cvae_ckpt = read_checkpoint(cdir / "cvae.ckpt", t.file_sha256[0]);
    const auto an_ckpt = read_checkpoint(cdir / "audionet.ckpt", t.file_sha256[1]);
    const auto kn_ckpt = read_checkpoint(cdir / "keynet.ckpt", t.file_sha256[2]);
    require(cvae_ckpt.meta.kind == NetKind::kCvae && an_ckpt.meta.kind == NetKind::kAudioNet &&
                kn_ckpt.meta.kind == NetKind::kKeyNet,
            cdir.string() + ": checkpoint kinds do not match their file names", ErrorCode::kFormat);
    require_same_setup(cvae_ckpt.meta, an_ckpt.meta, (cdir / "audionet.ckpt").string());
    require_same_setup(cvae_ckpt.meta, kn_ckpt.meta, (cdir / "keynet.ckpt").string());
    t.meta = cvae_ckpt.meta;
    t.cvae = cvae_from_checkpoint(cvae_ckpt);
    t.audionet = audio_model_from_checkpoint(an_ckpt);
    t.keynet = audio_model_from_checkpoint(kn_ckpt);
    t.dataset_fingerprints = {cvae_ckpt.meta.dataset_fingerprint, an_ckpt.meta.dataset_fingerprint,
                              kn_ckpt.meta.dataset_fingerprint};

    const int n_ctrl = static_cast<int>(t.meta.configuration.controller_names.size());
    require(t.cvae.shape().controllers == n_ctrl, cdir.string() + ": cvae width differs from its configuration",
            ErrorCode::kFormat);
    require(t.audionet.shape().outputs == t.cvae.shape().z_dim,
            cdir.string() + ": audionet output size differs from the cvae latent size", ErrorCode::kFormat);
    require(t.keynet.shape().outputs == 3 * n_ctrl, cdir.string() + ": keynet head does not match the controllers",
            ErrorCode::kFormat);
    require(t.cvae.shape().conditions == t.meta.conditions(), cdir.string() + ": cvae condition size mismatch",
            ErrorCode::kFormat);
    require(t.audionet.shape().mel_bins == t.meta.mel.mel_bins &&
                t.audionet.shape().window_frames == t.meta.window_frames &&
                t.keynet.shape().mel_bins == t.meta.mel.mel_bins &&
                t.keynet.shape().window_frames == t.meta.window_frames,
            cdir.string() + ": audio model input shape mismatch", ErrorCode::kFormat);

    if (set.triples.empty()) {
      set.emotion_names = t.meta.emotion_names;
      set.mel = t.meta.mel;
      set.fps = t.meta.fps;
      set.window_frames = t.meta.window_frames;
    } else {
      require(set.emotion_names == t.meta.emotion_names && set.mel == t.meta.mel && set.fps == t.meta.fps &&
                  set.window_frames == t.meta.window_frames,
              cdir.string() + ": configurations disagree on emotions, fps or audio front-end", ErrorCode::kFormat);
    }
    set.triples.push_back(std::move(t));
  }
  std::sort(set.triples.begin(), set.triples.end(), [](const ModelTriple& a, const ModelTriple& b) {
    return a.meta.configuration_index < b.meta.configuration_index;
  });
  return set;
}

// -------------------------------------------------------------- inference

InferenceResult infer(const ModelSet& models, const AudioClip& audio, const InferenceSettings& settings,
                      bool allow_mixed) {
  require(!models.triples.empty(), "infer: no models loaded");
  require(!audio.samples.empty(), "infer: audio is empty");
  if (!allow_mixed && !models.fingerprints_consistent())
    fail(ErrorCode::kFingerprintMismatch,
         "loaded checkpoints come from different datasets (fingerprint mismatch); refusing to mix them");
  validate_settings(settings);
  const auto condition = mix_emotions(settings.emotion_weights, models.emotion_count(), settings.strict_weights);

  const AudioClip canonical =
      audio.sample_rate == models.mel.sample_rate ? audio : resample(audio, models.mel.sample_rate);
  const int frame_count = static_cast<int>(std::lround(canonical.duration_seconds() * models.fps));
  require(frame_count >= 2, "infer: audio is shorter than two animation frames");
  const MelSpectrogram spec = melspectrogram(canonical, models.mel);

  InferenceResult result;
  result.fps = models.fps;
  result.frame_count = frame_count;
  result.settings = settings;
  result.settings.emotion_weights = condition;
  result.checkpoint_fingerprints = models.fingerprints_json();

  const nn::Vec c = Eigen::Map<const nn::Vec>(condition.data(), static_cast<Eigen::Index>(condition.size()));
  std::vector<MelWindow> windows;
  windows.reserve(frame_count);
  for (int f = 0; f < frame_count; ++f) windows.push_back(window_for_frame(spec, f, models.fps, models.window_frames));

  for (const auto& t : models.triples) {
    const auto& names = t.meta.configuration.controller_names;
    const auto n_ctrl = names.size();
    const auto& table = t.meta.normalization;
    std::vector<std::vector<double>> dense(n_ctrl, std::vector<double>(frame_count)), prob = dense, tin = dense,
                                                                                    tout = dense;
    for (int f = 0; f < frame_count; ++f) {
      const nn::Vec z = t.audionet.forward(windows[f].data);
      const nn::Vec x_hat = t.cvae.decode(z, c);
      const nn::Vec k = t.keynet.forward(windows[f].data);
      for (std::size_t i = 0; i < n_ctrl; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        dense[i][f] = table.denormalize(i, x_hat[ii]);
        prob[i][f] = nn::sigmoid(k[ii]);
        tin[i][f] = table.denormalize_slope(i, k[ii + static_cast<Eigen::Index>(n_ctrl)]);
        tout[i][f] = table.denormalize_slope(i, k[ii + 2 * static_cast<Eigen::Index>(n_ctrl)]);
      }
    }

    ConfigurationResult cr;
    cr.name = t.meta.configuration.name;
    cr.upper_face = t.meta.configuration.upper_face;
    cr.normalization = table;
    for (std::size_t i = 0; i < n_ctrl; ++i) {
      if (settings.smooth_upper && cr.upper_face) dense[i] = gaussian_smooth(dense[i], settings.smooth_sigma);
      if (settings.tangent_filter_sigma > 0) {
        tin[i] = gaussian_smooth(tin[i], settings.tangent_filter_sigma);
        tout[i] = gaussian_smooth(tout[i], settings.tangent_filter_sigma);
      }
      auto keys = rate_filter(decode_keys(prob[i], tin[i], tout[i], settings.key_threshold, dense[i]), settings.rate);
      // Snapped keys move, so their values are re-read from the dense curve.
      for (auto& key : keys) key.value = dense[i][key.frame];
      keys = limit_tangents(keys);
      ControllerCurve curve;
      curve.name = names[i];
      curve.keys = std::move(keys);
      curve.dense = std::move(dense[i]);
      cr.controllers.push_back(std::move(curve));
      cr.key_probability.push_back(std::move(prob[i]));
    }
    result.configurations.push_back(std::move(cr));
  }
  return result;
}

}  // namespace rigvoice
