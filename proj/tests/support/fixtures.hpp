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
#include <random>
#include <string>

#include <unistd.h>

#include "rigvoice/synth.hpp"
#include "rigvoice/trainer.hpp"

namespace fixture {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("rigvoice_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  fs::path path_;
};

/// Small networks and few epochs: enough to exercise every code path fast.
inline rigvoice::TrainPlan tiny_plan() {
  auto plan = rigvoice::TrainPlan::default_plan();
  plan.epochs = 2;
  plan.batch_size = 32;
  plan.z_dim = 4;
  plan.cvae_hidden = {16, 8};
  plan.conv_channels = 4;
  plan.gru_hidden = 8;
  plan.dense_hidden = 8;
  plan.window_frames = 9;
  plan.validation_split = 0.25;
  return plan;
}

inline rigvoice::SynthOptions tiny_synth(std::uint64_t seed = 7) {
  rigvoice::SynthOptions o;
  o.seed = seed;
  o.n_clips = 4;
  o.frames_per_clip = 72;
  o.emotions_used = 2;
  return o;
}

/// Synthesizes a tiny dataset under `dir`/data and trains `plan` into
/// `dir`/ckpts. Returns the manifest path.
inline fs::path train_tiny(const fs::path& dir, const rigvoice::TrainPlan& plan = tiny_plan(),
                           std::uint64_t seed = 7) {
  const auto rig = rigvoice::default_synthetic_rig();
  rigvoice::write_synthetic_dataset(rigvoice::generate_synthetic_dataset(tiny_synth(seed), rig), dir / "data");
  const fs::path manifest = dir / "data" / "manifest.json";
  rigvoice::train(plan, rigvoice::load_dataset(manifest), dir / "ckpts");
  return manifest;
}

}  // namespace fixture
