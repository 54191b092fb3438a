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

#include "rigvoice/rigkeys.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "rigvoice/error.hpp"
#include "rigvoice_schema.hpp"

namespace rigvoice {

using nlohmann::json;

int preview_stride(int frame_count) {
  return std::max(1, (frame_count + kMaxPreviewPoints - 1) / kMaxPreviewPoints);
}

json rigkeys_to_json(const InferenceResult& result, bool with_preview) {
  const int stride = preview_stride(result.frame_count);
  json configs = json::array();
  for (const auto& cr : result.configurations) {
    json controllers = json::array();
    for (const auto& curve : cr.controllers) {
      json keys = json::array();
      for (const auto& k : curve.keys.value())
        keys.push_back({{"frame", k.frame}, {"value", k.value}, {"in_tangent", k.in_tangent},
                        {"out_tangent", k.out_tangent}});
      json c = {{"name", curve.name}, {"keys", std::move(keys)}};
      if (with_preview && curve.dense) {
        json preview = json::array();
        for (std::size_t f = 0; f < curve.dense->size(); f += stride) preview.push_back((*curve.dense)[f]);
        c["dense_preview"] = std::move(preview);
      }
      controllers.push_back(std::move(c));
    }
    configs.push_back({{"name", cr.name}, {"controllers", std::move(controllers)}});
  }
  json doc = {{"fps", result.fps},
              {"frame_count", result.frame_count},
              {"configurations", std::move(configs)},
              {"settings_echo", settings_to_json(result.settings)},
              {"checkpoint_fingerprints", result.checkpoint_fingerprints}};
  if (with_preview) doc["preview_stride"] = stride;
  return doc;
}

RigKeysDocument rigkeys_from_json(const json& j) {
  RigKeysDocument doc;
  try {
    doc.fps = j.at("fps").get<double>();
    doc.frame_count = j.at("frame_count").get<int>();
    for (const auto& c : j.at("configurations")) {
      const auto config = c.at("name").get<std::string>();
      for (const auto& ctrl : c.at("controllers")) {
        RigKeysChannel ch{config, ctrl.at("name").get<std::string>(), {}};
        for (const auto& k : ctrl.at("keys"))
          ch.keys.push_back({k.at("frame").get<int>(), k.at("value").get<double>(), k.at("in_tangent").get<double>(),
                             k.at("out_tangent").get<double>()});
        doc.channels.push_back(std::move(ch));
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("rigkeys: ") + e.what());
  }
  return doc;
}

RigKeysDocument load_rigkeys(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return rigkeys_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

void write_rigkeys(const InferenceResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << rigkeys_to_json(result).dump(1) << '\n';
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::string rigkeys_to_text(const RigKeysDocument& doc) {
  std::string out = "# rigkeys-text 1\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "# fps=%.17g frame_count=%d\n", doc.fps, doc.frame_count);
  out += buf;
  for (const auto& ch : doc.channels) {
    out += ch.configuration + "/" + ch.controller + "\t";
    for (std::size_t i = 0; i < ch.keys.size(); ++i) {
      const auto& k = ch.keys[i];
      std::snprintf(buf, sizeof buf, "%s%d,%.17g,%.17g,%.17g", i ? ";" : "", k.frame, k.value, k.in_tangent,
                    k.out_tangent);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

const std::string& rigkeys_schema() {
  static const std::string schema = detail::kRigkeysSchema;
  return schema;
}

}  // namespace rigvoice
