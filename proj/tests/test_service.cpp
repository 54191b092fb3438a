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

#include <cstdlib>
#include <thread>

#include "rigvoice/error.hpp"
#include "rigvoice/service.hpp"
#include "rigvoice/synth.hpp"
#include "support/fixtures.hpp"

// After the Eigen-based headers: resolv.h, pulled in here, defines _res.
#include <httplib.h>

using namespace rigvoice;
using nlohmann::json;

namespace {

const fixture::TempDir& trained() {
  static fixture::TempDir dir("service_models");
  static const bool done = (fixture::train_tiny(dir.path()), true);
  (void)done;
  return dir;
}

std::vector<std::uint8_t> wav_of(double seconds, int rate = 16000) {
  AudioClip a;
  a.sample_rate = rate;
  a.samples.resize(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < a.samples.size(); ++i) a.samples[i] = 0.2 * std::sin(0.05 * static_cast<double>(i));
  return encode_wav(a);
}

std::string error_of(const HttpReply& r) { return json::parse(r.body).at("error").get<std::string>(); }

json infer_request(const std::string& id, std::vector<double> weights = {0, 1, 0, 0, 0, 0}) {
  return {{"audio_id", id}, {"emotion_weights", weights}, {"settings", {{"rate", 1}, {"key_threshold", 0.5}}}};
}

std::string upload(const InferenceService& s, double seconds = 1.0) {
  const auto r = s.post_audio(wav_of(seconds));
  REQUIRE(r.status == 200);
  return json::parse(r.body).at("audio_id").get<std::string>();
}

}  // namespace

TEST_CASE("audio upload validation") {
  InferenceService s(load_models(trained() / "ckpts"), {});
  const auto ok = s.post_audio(wav_of(0.5, 22050));
  CHECK(ok.status == 200);
  const auto body = json::parse(ok.body);
  CHECK(body.at("audio_id").get<std::string>().size() == 64);
  CHECK(body.at("sample_rate") == 22050);
  CHECK(body.at("duration_seconds").get<double>() == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(s.post_audio(wav_of(0.5, 22050)).body == ok.body);  // same bytes, same id

  AudioClip stereo_src;
  stereo_src.samples.assign(100, 0.0);
  auto stereo = encode_wav(stereo_src);
  stereo[22] = 2;  // channel count
  const auto st = s.post_audio(stereo);
  CHECK(st.status == 400);
  CHECK(error_of(st) == "mono_required");

  const std::vector<std::uint8_t> junk{'R', 'I', 'F', 'F'};
  CHECK(error_of(s.post_audio(junk)) == "bad_wav");

  ServiceOptions short_limit;
  short_limit.max_audio_seconds = 1.0;
  InferenceService limited(load_models(trained() / "ckpts"), short_limit);
  const auto big = limited.post_audio(wav_of(1.5));
  CHECK(big.status == 413);
  CHECK(error_of(big) == "too_long");
}

TEST_CASE("infer request validation and error statuses") {
  InferenceService s(load_models(trained() / "ckpts"), {});
  const std::string id = upload(s);

  CHECK(s.post_infer("not json").status == 400);
  CHECK(s.post_infer("[1,2]").status == 400);
  auto extra = infer_request(id);
  extra["colour"] = "red";
  CHECK(error_of(s.post_infer(extra.dump())) == "bad_request");
  CHECK(s.post_infer(infer_request(id, {1, 0}).dump()).status == 400);
  auto bad_rate = infer_request(id);
  bad_rate["settings"]["rate"] = 3;
  CHECK(s.post_infer(bad_rate.dump()).status == 400);

  const auto missing = s.post_infer(infer_request(std::string(64, '0')).dump());
  CHECK(missing.status == 404);
  CHECK(error_of(missing) == "unknown_audio_id");

  // Out-of-range weights clamp by default and are refused in strict mode.
  const auto clamped = s.post_infer(infer_request(id, {0, 1.5, 0, 0, 0, 0}).dump());
  REQUIRE(clamped.status == 200);
  CHECK(json::parse(clamped.body).at("settings_echo").at("emotion_weights")[1] == 1.0);
  auto strict = infer_request(id, {0, 1.5, 0, 0, 0, 0});
  strict["strict"] = true;
  const auto refused = s.post_infer(strict.dump());
  CHECK(refused.status == 422);
  CHECK(error_of(refused) == "weight_out_of_range");
}

TEST_CASE("identical requests give identical bodies") {
  InferenceService s(load_models(trained() / "ckpts"), {});
  const std::string id = upload(s, 2.0);
  const auto a = s.post_infer(infer_request(id).dump());
  REQUIRE(a.status == 200);
  const auto body = json::parse(a.body);
  CHECK(body.at("frame_count") == 48);
  CHECK(body.at("preview_stride") == 1);
  CHECK(s.post_infer(infer_request(id).dump()).body == a.body);

  // A fresh service (empty cache) reproduces the same bytes.
  InferenceService fresh(load_models(trained() / "ckpts"), {});
  upload(fresh, 2.0);
  CHECK(fresh.post_infer(infer_request(id).dump()).body == a.body);

  const auto health = json::parse(s.get_health().body);
  CHECK(health.at("status") == "ok");
  CHECK(health.at("configurations").size() == 3);
  CHECK(health.at("fingerprints_consistent") == true);
  CHECK(json::parse(s.get_schema().body).at("$schema") == "https://json-schema.org/draft/2020-12/schema");
}

TEST_CASE("mixed fingerprints give 409") {
  fixture::TempDir other("service_other");
  fixture::train_tiny(other.path(), fixture::tiny_plan(), 123);
  fixture::TempDir mixed("service_mixed");
  namespace fs = std::filesystem;
  fs::copy(trained() / "ckpts", mixed / "ckpts", fs::copy_options::recursive);
  fs::copy(other / "ckpts" / "upper", mixed / "ckpts" / "upper",
           fs::copy_options::recursive | fs::copy_options::overwrite_existing);

  InferenceService strict(load_models(mixed / "ckpts"), {});
  const auto r = strict.post_infer(infer_request(upload(strict)).dump());
  CHECK(r.status == 409);
  CHECK(error_of(r) == "fingerprint_mismatch");
  CHECK(json::parse(strict.get_health().body).at("fingerprints_consistent") == false);

  ServiceOptions allow;
  allow.allow_mixed = true;
  InferenceService lenient(load_models(mixed / "ckpts"), allow);
  const auto ok = lenient.post_infer(infer_request(upload(lenient)).dump());
  CHECK(ok.status == 200);
  CHECK(json::parse(ok.body).at("checkpoint_fingerprints").at("dataset").is_null());
}

TEST_CASE("HTTP transport with CORS") {
  ServiceOptions opts;
  opts.allow_origin = "http://localhost:5173";
  InferenceService s(load_models(trained() / "ckpts"), opts);
  HttpServer server(s);
  const int port = server.bind("127.0.0.1", 0);
  CHECK(port > 0);
  std::thread runner([&] { server.run(); });

  httplib::Client client("127.0.0.1", port);
  const auto wav = wav_of(1.0);
  auto up = client.Post("/audio", std::string(wav.begin(), wav.end()), "audio/wav");
  REQUIRE(up);
  CHECK(up->status == 200);
  CHECK(up->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
  const auto id = json::parse(up->body).at("audio_id").get<std::string>();

  auto inf = client.Post("/infer", infer_request(id).dump(), "application/json");
  REQUIRE(inf);
  CHECK(inf->status == 200);
  CHECK(inf->get_header_value("Content-Type") == "application/json");

  auto pre = client.Options("/infer");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  auto nf = client.Post("/infer", infer_request("nope").dump(), "application/json");
  REQUIRE(nf);
  CHECK(nf->status == 404);
  auto nowhere = client.Get("/nowhere");
  REQUIRE(nowhere);
  CHECK(nowhere->status == 404);
  CHECK(json::parse(nowhere->body).at("error") == "not_found");

  server.stop();
  runner.join();
}

TEST_CASE("PORT from the environment wins") {
  ::unsetenv("PORT");
  CHECK(resolve_port(8080) == 8080);
  ::setenv("PORT", "9137", 1);
  CHECK(resolve_port(8080) == 9137);
  ::setenv("PORT", "http", 1);
  CHECK_THROWS_AS(resolve_port(8080), Error);
  ::setenv("PORT", "70000", 1);
  CHECK_THROWS_AS(resolve_port(8080), Error);
  ::unsetenv("PORT");
}
