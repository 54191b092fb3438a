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

#include <cstring>

#include "rigvoice/checkpoint.hpp"
#include "rigvoice/error.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace rigvoice;

namespace {

CheckpointMeta sample_meta(NetKind kind) {
  CheckpointMeta m;
  m.kind = kind;
  m.configuration_index = 1;
  m.configuration = {"tongue", {"a", "b"}, false};
  m.normalization = NormalizationTable({"a", "b"}, {{-1.0, 0.25}, {0.0, 3.0}});
  m.window_frames = 9;
  m.emotion_names = default_emotion_names();
  m.z_dim = 3;
  m.seed = 77;
  m.dataset_fingerprint = std::string(64, 'a');
  return m;
}

}  // namespace

TEST_CASE("cvae checkpoint round trip is bit exact") {
  Rng rng(3);
  Cvae model(CvaeShape{2, 6, 3, {8, 5}});
  model.init(rng);
  model.params()[0] = 0.1 + 0.2;  // a value with no short decimal form
  const auto meta = sample_meta(NetKind::kCvae);
  const auto bytes = serialize_checkpoint(make_checkpoint(meta, model));
  const auto back = parse_checkpoint(bytes);
  CHECK(back.params == model.params());
  CHECK(back.meta.kind == NetKind::kCvae);
  CHECK(back.meta.configuration == meta.configuration);
  CHECK(back.meta.normalization == meta.normalization);
  CHECK(back.meta.seed == 77);
  CHECK(back.meta.dataset_fingerprint == meta.dataset_fingerprint);
  CHECK(serialize_checkpoint(back) == bytes);

  const auto restored = cvae_from_checkpoint(back);
  nn::Vec x(2), c = nn::Vec::Zero(6);
  x << 0.3, -0.2;
  c[4] = 1;
  CHECK(restored.forward(x, c, LatentMode::kMean).x_hat == model.forward(x, c, LatentMode::kMean).x_hat);
}

TEST_CASE("audio model checkpoint keeps input statistics and class weights") {
  Rng rng(5);
  const auto model = gradcheck::small_audio_model(rng, 6);
  const std::vector<double> pw{2.5, 7.0};
  fixture::TempDir dir("ckpt");
  save_checkpoint(make_checkpoint(sample_meta(NetKind::kKeyNet), model, pw), dir / "keynet.ckpt");
  const auto back = load_checkpoint(dir / "keynet.ckpt");
  const auto restored = audio_model_from_checkpoint(back);
  CHECK(restored.params() == model.params());
  const auto w = gradcheck::random_window(rng, model.shape());
  CHECK(restored.forward(w) == model.forward(w));
  CHECK(back.model.at("pos_weight").get<std::vector<double>>() == pw);
}

TEST_CASE("corrupt or foreign checkpoints are rejected") {
  Rng rng(1);
  Cvae model(CvaeShape{2, 6, 3, {4}});
  model.init(rng);
  const auto good = serialize_checkpoint(make_checkpoint(sample_meta(NetKind::kCvae), model));

  auto expect_format = [](std::vector<std::uint8_t> bytes) {
    try {
      parse_checkpoint(bytes);
      FAIL("accepted a bad checkpoint");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kFormat);
    }
  };
  auto wrong_version = good;
  wrong_version[8] = 2;
  expect_format(wrong_version);
  auto wrong_magic = good;
  wrong_magic[0] = 'X';
  expect_format(wrong_magic);
  expect_format({good.begin(), good.begin() + static_cast<long>(good.size()) - 3});
  auto trailing = good;
  trailing.push_back(0);
  expect_format(trailing);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt"), Error);
  CHECK(net_kind_from_name(net_kind_name(NetKind::kAudioNet)) == NetKind::kAudioNet);
  CHECK_THROWS_AS(net_kind_from_name("transformer"), Error);
}
