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

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "rigvoice/rigvoice.h"

// Exercises the shared library and the CLI built on top of it; nothing here
// links the C++ core directly.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Scratch {
 public:
  Scratch() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("rigvoice_capi_" + std::to_string(::getpid()) + "_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string operator/(const std::string& leaf) const { return (path_ / leaf).string(); }

 private:
  fs::path path_;
};

// Shrinks the default plan so a full run takes a second or two.
void write_tiny_plan(const std::string& path, double learning_rate = 1e-3) {
  REQUIRE(rv_write_default_plan(path.c_str()) == RV_OK);
  std::ifstream in(path);
  json plan = json::parse(in);
  in.close();
  plan["epochs"] = 2;
  plan["batch_size"] = 32;
  plan["z_dim"] = 4;
  plan["cvae_hidden"] = {16, 8};
  plan["conv_channels"] = 4;
  plan["gru_hidden"] = 8;
  plan["dense_hidden"] = 8;
  plan["window_frames"] = 9;
  plan["validation_split"] = 0.25;
  plan["learning_rate"] = learning_rate;
  std::ofstream(path) << plan.dump(2);
}

void write_tiny_data(const std::string& dir) {
  rv_synth_options o;
  rv_synth_options_init(&o);
  o.n_clips = 4;
  o.frames_per_clip = 72;
  o.emotions_used = 2;
  REQUIRE(rv_synth(dir.c_str(), &o) == RV_OK);
}

// Trained once and shared by every case below.
const Scratch& trained() {
  static Scratch dir;
  static const bool done = [] {
    write_tiny_data(dir / "data");
    write_tiny_plan(dir / "plan.json");
    return rv_train((dir / "plan.json").c_str(), (dir / "data/manifest.json").c_str(), (dir / "ckpts").c_str(),
                    nullptr, nullptr) == RV_OK;
  }();
  REQUIRE(done);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RIGVOICE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("status names and thread-local errors") {
  CHECK(std::string(rv_version()).size() > 0);
  CHECK(std::string(rv_status_name(RV_OK)) == "ok");
  CHECK(std::string(rv_status_name(RV_ERR_FINGERPRINT_MISMATCH)) == "fingerprint_mismatch");

  rv_models* m = nullptr;
  CHECK(rv_models_load("/nonexistent/ckpts", &m) != RV_OK);
  CHECK(m == nullptr);
  CHECK(std::string(rv_last_error()).size() > 0);
  CHECK(rv_synth(nullptr, nullptr) == RV_ERR_INVALID_ARGUMENT);
  CHECK(rv_write_default_plan(nullptr) == RV_ERR_INVALID_ARGUMENT);

  // Freeing null handles is a no-op.
  rv_models_free(nullptr);
  rv_result_free(nullptr);
  rv_string_free(nullptr);
}

TEST_CASE("train, infer and export through the C API") {
  const auto& dir = trained();
  rv_models* models = nullptr;
  REQUIRE(rv_models_load((dir / "ckpts").c_str(), &models) == RV_OK);
  CHECK(std::string(rv_last_error()).empty());
  REQUIRE(rv_models_emotion_count(models) == 6);

  const double weights[6] = {0, 1, 0, 0, 0, 0};
  rv_infer_options opts;
  rv_infer_options_init(&opts);
  opts.emotion_weights = weights;
  opts.n_weights = 6;
  rv_result* r = nullptr;
  REQUIRE(rv_infer_wav(models, (dir / "data/clip_000.wav").c_str(), &opts, &r) == RV_OK);
  CHECK(rv_result_frame_count(r) == 72);

  char* text = nullptr;
  REQUIRE(rv_result_json(r, 1, &text) == RV_OK);
  const auto doc = json::parse(text);
  rv_string_free(text);
  CHECK(doc.at("frame_count") == 72);
  CHECK(doc.contains("preview_stride"));

  REQUIRE(rv_result_write(r, (dir / "out.json").c_str()) == RV_OK);
  REQUIRE(rv_export_text((dir / "out.json").c_str(), (dir / "out.txt").c_str()) == RV_OK);
  std::ifstream in(dir / "out.txt");
  std::string first;
  std::getline(in, first);
  CHECK(first == "# rigkeys-text 1");

  // Wrong weight count and a bad rate are argument errors, not crashes.
  rv_result* bad = nullptr;
  opts.n_weights = 2;
  CHECK(rv_infer_wav(models, (dir / "data/clip_000.wav").c_str(), &opts, &bad) != RV_OK);
  CHECK(bad == nullptr);
  opts.n_weights = 6;
  opts.rate = 3;
  CHECK(rv_infer_wav(models, (dir / "data/clip_000.wav").c_str(), &opts, &bad) != RV_OK);
  opts.rate = 1;
  CHECK(rv_infer_wav(models, (dir / "missing.wav").c_str(), &opts, &bad) == RV_ERR_IO);

  rv_result_free(r);
  rv_models_free(models);
}

TEST_CASE("event callback sees every line") {
  Scratch dir;
  write_tiny_data(dir / "data");
  write_tiny_plan(dir / "plan.json");
  std::vector<std::string> lines;
  const auto sink = [](const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); };
  REQUIRE(rv_train((dir / "plan.json").c_str(), (dir / "data/manifest.json").c_str(), (dir / "ckpts").c_str(), sink,
                   &lines) == RV_OK);
  int finalized = 0;
  for (const auto& l : lines) finalized += l.rfind("event=finalized ", 0) == 0;
  CHECK(finalized == 9);
}

TEST_CASE("CLI exit codes") {
  const auto& dir = trained();
  const std::string ckpts = dir / "ckpts", wav = dir / "data/clip_000.wav";

  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("infer --audio " + wav + " --ckpts " + ckpts + " --weights 0,0,1,0,0,0 --out " +
                (dir / "cli.json")) == 0);
  CHECK(fs::exists(dir / "cli.json"));
  CHECK(run_cli("export --in " + (dir / "cli.json") + " --out " + (dir / "cli.txt")) == 0);

  // Malformed or out-of-range input is a validation failure.
  CHECK(run_cli("infer --audio " + wav + " --ckpts " + ckpts + " --weights 0,x,1 --out " + (dir / "x.json")) == 2);
  CHECK(run_cli("infer --audio " + wav + " --ckpts " + ckpts + " --weights 0,2,0,0,0,0 --strict --out " +
                (dir / "x.json")) == 2);
  CHECK(run_cli("infer --audio " + wav + " --ckpts " + (dir / "nowhere") + " --weights 1,0,0,0,0,0 --out " +
                (dir / "x.json")) == 2);
  CHECK(run_cli("synth --out " + (dir / "s") + " --emotions 9") == 2);

  // A runaway learning rate diverges: exit code 1.
  write_tiny_plan(dir / "hot.json", 1e300);
  CHECK(run_cli("train --plan " + (dir / "hot.json") + " --data " + (dir / "data/manifest.json") + " --out " +
                (dir / "hot")) == 1);
}

TEST_CASE("CLI covers the full offline workflow") {
  Scratch dir;
  CHECK(run_cli("synth --out " + (dir / "data") + " --clips 4 --frames 72 --emotions 2 --seed 3") == 0);
  CHECK(fs::exists(dir / "data/manifest.json"));
  CHECK(run_cli("extract --scene-json " + (dir / "data") + " --manifest " + (dir / "again.json")) == 0);
  std::ifstream a(dir / "again.json");
  CHECK(json::parse(a).at("clips").size() == 4);
  write_tiny_plan(dir / "plan.json");
  CHECK(run_cli("train --plan " + (dir / "plan.json") + " --data " + (dir / "again.json") + " --out " +
                (dir / "ckpts")) == 0);
  CHECK(run_cli("infer --audio " + (dir / "data/clip_001.wav") + " --ckpts " + (dir / "ckpts") +
                " --weights 1,0,0,0,0,0 --rate 2 --smooth-upper --out " + (dir / "k.json")) == 0);
}
