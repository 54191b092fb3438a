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
#include <string>
#include <vector>

#include <json.hpp>

#include "rigvoice/inference.hpp"

namespace rigvoice {

/// Upper bound on dense preview points per controller.
constexpr int kMaxPreviewPoints = 2000;

/// Frame stride that keeps a preview of `frame_count` frames within
/// kMaxPreviewPoints samples.
int preview_stride(int frame_count);

/// The "rigkeys" document:
///   {fps, frame_count, configurations: [{name, controllers: [{name, keys}]}],
///    settings_echo, checkpoint_fingerprints}
/// With `with_preview`, each controller also carries "dense_preview" (values
/// at frames 0, s, 2s, ...) and the top level carries "preview_stride".
nlohmann::json rigkeys_to_json(const InferenceResult& result, bool with_preview = false);

/// Keys-only view of a rigkeys document, as read back by exporters.
struct RigKeysChannel {
  std::string configuration;
  std::string controller;
  std::vector<Key> keys;
};

struct RigKeysDocument {
  double fps = 24.0;
  int frame_count = 0;
  std::vector<RigKeysChannel> channels;
};

RigKeysDocument rigkeys_from_json(const nlohmann::json& j);
RigKeysDocument load_rigkeys(const std::filesystem::path& path);
void write_rigkeys(const InferenceResult& result, const std::filesystem::path& path);

/// Plain-text channel-per-line export (see docs/formats.md).
std::string rigkeys_to_text(const RigKeysDocument& doc);

/// JSON Schema (draft 2020-12) for the rigkeys document and /infer bodies.
const std::string& rigkeys_schema();

}  // namespace rigvoice
