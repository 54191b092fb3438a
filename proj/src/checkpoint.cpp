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

#include "rigvoice/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "rigvoice/error.hpp"

namespace rigvoice {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'R', 'I', 'G', 'V', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T take(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) fail(ErrorCode::kFormat, "checkpoint: truncated");
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

json meta_to_json(const CheckpointMeta& m) {
  return {{"format_version", kCheckpointFormatVersion},
          {"kind", net_kind_name(m.kind)},
          {"configuration_index", m.configuration_index},
          {"configuration", configuration_to_json(m.configuration)},
          {"normalization", m.normalization.to_json()},
          {"mel", mel_params_to_json(m.mel)},
          {"window_frames", m.window_frames},
          {"fps", m.fps},
          {"emotion_names", m.emotion_names},
          {"conditions", m.conditions()},
          {"z_dim", m.z_dim},
          {"seed", m.seed},
          {"dataset_fingerprint", m.dataset_fingerprint}};
}

CheckpointMeta meta_from_json(const json& j) {
  try {
    CheckpointMeta m;
    m.kind = net_kind_from_name(j.at("kind").get<std::string>());
    m.configuration_index = j.at("configuration_index").get<int>();
    m.configuration = configuration_from_json(j.at("configuration"));
    m.normalization = NormalizationTable::from_json(j.at("normalization"));
    m.mel = mel_params_from_json(j.at("mel"));
    m.window_frames = j.at("window_frames").get<int>();
    m.fps = j.at("fps").get<double>();
    m.emotion_names = j.at("emotion_names").get<std::vector<std::string>>();
    m.z_dim = j.at("z_dim").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint metadata: ") + e.what());
  }
}

}  // namespace

const char* net_kind_name(NetKind kind) {
  switch (kind) {
    case NetKind::kCvae: return "cvae";
    case NetKind::kAudioNet: return "audionet";
    case NetKind::kKeyNet: return "keynet";
  }
  return "unknown";
}

NetKind net_kind_from_name(const std::string& name) {
  if (name == "cvae") return NetKind::kCvae;
  if (name == "audionet") return NetKind::kAudioNet;
  if (name == "keynet") return NetKind::kKeyNet;
  fail(ErrorCode::kFormat, "unknown network kind '" + name + "'");
}

json mel_params_to_json(const MelParams& m) {
  return {{"sample_rate", m.sample_rate}, {"n_fft", m.n_fft},   {"hop", m.hop},
          {"mel_bins", m.mel_bins},       {"f_min", m.f_min},   {"f_max", m.f_max},
          {"log_offset", m.log_offset}};
}

MelParams mel_params_from_json(const json& j) {
  MelParams m;
  m.sample_rate = j.at("sample_rate").get<int>();
  m.n_fft = j.at("n_fft").get<int>();
  m.hop = j.at("hop").get<int>();
  m.mel_bins = j.at("mel_bins").get<int>();
  m.f_min = j.at("f_min").get<double>();
  m.f_max = j.at("f_max").get<double>();
  m.log_offset = j.at("log_offset").get<double>();
  return m;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  json meta = meta_to_json(ckpt.meta);
  meta["model"] = ckpt.model;
  const std::string text = meta.dump();
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put<std::uint32_t>(out, kCheckpointFormatVersion);
  put<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  put<std::uint64_t>(out, ckpt.params.size());
  const auto* raw = reinterpret_cast<const std::uint8_t*>(ckpt.params.data());
  out.insert(out.end(), raw, raw + ckpt.params.size() * sizeof(double));
  return out;
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    fail(ErrorCode::kFormat, "checkpoint: bad magic");
  std::size_t pos = 8;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kCheckpointFormatVersion)
    fail(ErrorCode::kFormat, "checkpoint: format version " + std::to_string(version) + " is not supported (expected " +
                                 std::to_string(kCheckpointFormatVersion) + ")");
  const auto meta_len = take<std::uint64_t>(bytes, pos);
  if (meta_len > bytes.size() - pos) fail(ErrorCode::kFormat, "checkpoint: truncated metadata");
  json meta;
  try {
    meta = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                       bytes.begin() + static_cast<std::ptrdiff_t>(pos + meta_len));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint: metadata is not JSON: ") + e.what());
  }
  pos += meta_len;
  if (meta.value("format_version", 0u) != kCheckpointFormatVersion)
    fail(ErrorCode::kFormat, "checkpoint: metadata format version mismatch");
  const auto n = take<std::uint64_t>(bytes, pos);
  if (n > (bytes.size() - pos) / sizeof(double) || pos + n * sizeof(double) != bytes.size())
    fail(ErrorCode::kFormat, "checkpoint: parameter block size mismatch");

  Checkpoint ckpt;
  ckpt.meta = meta_from_json(meta);
  ckpt.model = meta.value("model", json::object());
  ckpt.params.resize(n);
  std::memcpy(ckpt.params.data(), bytes.data() + pos, n * sizeof(double));
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

Checkpoint make_checkpoint(const CheckpointMeta& meta, const Cvae& model) {
  require(meta.kind == NetKind::kCvae, "make_checkpoint: metadata kind is not cvae", ErrorCode::kInternal);
  const auto& s = model.shape();
  Checkpoint c;
  c.meta = meta;
  c.model = {{"controllers", s.controllers}, {"conditions", s.conditions}, {"z_dim", s.z_dim}, {"hidden", s.hidden}};
  c.params = model.params();
  return c;
}

Checkpoint make_checkpoint(const CheckpointMeta& meta, const AudioModel& model,
                           const std::vector<double>& pos_weight) {
  require(meta.kind != NetKind::kCvae, "make_checkpoint: metadata kind is cvae", ErrorCode::kInternal);
  const auto& s = model.shape();
  Checkpoint c;
  c.meta = meta;
  c.model = {{"mel_bins", s.mel_bins},       {"window_frames", s.window_frames}, {"conv_channels", s.conv_channels},
             {"conv_kernel", s.conv_kernel}, {"gru_hidden", s.gru_hidden},       {"dense_hidden", s.dense_hidden},
             {"outputs", s.outputs},         {"input_mean", model.input_mean()}, {"input_std", model.input_std()}};
  if (meta.kind == NetKind::kKeyNet) c.model["pos_weight"] = pos_weight;
  c.params = model.params();
  return c;
}

Cvae cvae_from_checkpoint(const Checkpoint& ckpt) {
  require(ckpt.meta.kind == NetKind::kCvae, "checkpoint is not a cvae", ErrorCode::kFormat);
  try {
    CvaeShape s;
    s.controllers = ckpt.model.at("controllers").get<int>();
    s.conditions = ckpt.model.at("conditions").get<int>();
    s.z_dim = ckpt.model.at("z_dim").get<int>();
    s.hidden = ckpt.model.at("hidden").get<std::vector<int>>();
    Cvae m(s);
    require(m.params().size() == ckpt.params.size(), "cvae checkpoint: parameter count mismatch", ErrorCode::kFormat);
    m.params() = ckpt.params;
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("cvae checkpoint: ") + e.what());
  }
}

AudioModel audio_model_from_checkpoint(const Checkpoint& ckpt) {
  require(ckpt.meta.kind != NetKind::kCvae, "checkpoint is not an audio model", ErrorCode::kFormat);
  try {
    AudioShape s;
    s.mel_bins = ckpt.model.at("mel_bins").get<int>();
    s.window_frames = ckpt.model.at("window_frames").get<int>();
    s.conv_channels = ckpt.model.at("conv_channels").get<int>();
    s.conv_kernel = ckpt.model.at("conv_kernel").get<int>();
    s.gru_hidden = ckpt.model.at("gru_hidden").get<int>();
    s.dense_hidden = ckpt.model.at("dense_hidden").get<int>();
    s.outputs = ckpt.model.at("outputs").get<int>();
    AudioModel m(s);
    require(m.params().size() == ckpt.params.size(), "audio checkpoint: parameter count mismatch", ErrorCode::kFormat);
    m.params() = ckpt.params;
    m.set_input_stats(ckpt.model.at("input_mean").get<std::vector<double>>(),
                      ckpt.model.at("input_std").get<std::vector<double>>());
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("audio checkpoint: ") + e.what());
  }
}

}  // namespace rigvoice
