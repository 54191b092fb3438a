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

#include "rigvoice/service.hpp"

#include <cstdlib>
#include <map>
#include <mutex>
#include <shared_mutex>

#include <httplib.h>

#include "rigvoice/error.hpp"
#include "rigvoice/hash.hpp"
#include "rigvoice/rigkeys.hpp"

namespace rigvoice {

using nlohmann::json;

namespace {

HttpReply error_reply(int status, const std::string& reason, const std::string& message) {
  return {status, json{{"error", reason}, {"message", message}}.dump()};
}

constexpr std::size_t kMaxUploadBytes = 64u << 20;

}  // namespace

struct InferenceService::State {
  ModelSet models;
  ServiceOptions options;
  mutable std::shared_mutex audio_mutex;
  mutable std::map<std::string, std::shared_ptr<const AudioClip>> audio;
  mutable std::mutex cache_mutex;
  mutable std::map<std::string, std::string> cache;
};

InferenceService::InferenceService(ModelSet models, ServiceOptions options)
    : state_(std::make_unique<State>()) {
  state_->models = std::move(models);
  state_->options = std::move(options);
}

InferenceService::~InferenceService() = default;

const ServiceOptions& InferenceService::options() const { return state_->options; }

HttpReply InferenceService::post_audio(std::span<const std::uint8_t> wav) const {
  AudioClip clip;
  try {
    clip = decode_wav(wav);
  } catch (const Error& e) {
    const std::string msg = e.what();
    if (msg.rfind("mono_required", 0) == 0) return error_reply(400, "mono_required", msg);
    return error_reply(400, "bad_wav", msg);
  }
  if (clip.samples.empty()) return error_reply(400, "bad_wav", "WAV file has no samples");
  if (clip.duration_seconds() > state_->options.max_audio_seconds)
    return error_reply(413, "too_long",
                       "audio is " + std::to_string(clip.duration_seconds()) + " s; the limit is " +
                           std::to_string(state_->options.max_audio_seconds) + " s");

  const std::string id = sha256_hex(wav);
  const double duration = clip.duration_seconds();
  const int rate = clip.sample_rate;
  {
    std::shared_lock lock(state_->audio_mutex);
    if (state_->audio.count(id))
      return {200, json{{"audio_id", id}, {"duration_seconds", duration}, {"sample_rate", rate}}.dump()};
  }
  const int canonical = state_->models.mel.sample_rate;
  auto stored = std::make_shared<const AudioClip>(clip.sample_rate == canonical ? std::move(clip)
                                                                                : resample(clip, canonical));
  {
    std::unique_lock lock(state_->audio_mutex);
    state_->audio.emplace(id, std::move(stored));
  }
  return {200, json{{"audio_id", id}, {"duration_seconds", duration}, {"sample_rate", rate}}.dump()};
}

HttpReply InferenceService::post_infer(const std::string& request_json) const {
  json req;
  try {
    req = json::parse(request_json);
  } catch (const json::parse_error& e) {
    return error_reply(400, "bad_request", std::string("body is not JSON: ") + e.what());
  }
  if (!req.is_object()) return error_reply(400, "bad_request", "body must be a JSON object");

  InferenceSettings settings;
  std::string audio_id;
  try {
    for (const auto& [key, value] : req.items())
      require(key == "audio_id" || key == "emotion_weights" || key == "settings" || key == "strict",
              "unknown field '" + key + "'");
    require(req.contains("audio_id") && req["audio_id"].is_string(), "audio_id (string) is required");
    require(req.contains("emotion_weights") && req["emotion_weights"].is_array(),
            "emotion_weights (array) is required");
    audio_id = req["audio_id"].get<std::string>();
    json s = req.value("settings", json::object());
    require(s.is_object(), "settings must be an object");
    require(!s.contains("emotion_weights"), "emotion_weights belongs at the top level");
    settings = settings_from_json(s);
    for (const auto& w : req["emotion_weights"]) {
      require(w.is_number(), "emotion_weights must be numbers");
      settings.emotion_weights.push_back(w.get<double>());
    }
    settings.strict_weights = req.value("strict", s.value("strict_weights", state_->options.strict_weights));
    validate_settings(settings);
    const int n = state_->models.emotion_count();
    require(static_cast<int>(settings.emotion_weights.size()) == n,
            "expected " + std::to_string(n) + " emotion weights, got " +
                std::to_string(settings.emotion_weights.size()));
  } catch (const Error& e) {
    return error_reply(400, "bad_request", e.what());
  } catch (const json::exception& e) {
    return error_reply(400, "bad_request", e.what());
  }

  std::shared_ptr<const AudioClip> audio;
  {
    std::shared_lock lock(state_->audio_mutex);
    auto it = state_->audio.find(audio_id);
    if (it == state_->audio.end()) return error_reply(404, "unknown_audio_id", "no audio with id '" + audio_id + "'");
    audio = it->second;
  }
  if (!state_->options.allow_mixed && !state_->models.fingerprints_consistent())
    return error_reply(409, "fingerprint_mismatch", "loaded checkpoints come from different datasets");

  const std::string cache_key = audio_id + "\n" + settings_to_json(settings).dump();
  {
    std::lock_guard lock(state_->cache_mutex);
    auto it = state_->cache.find(cache_key);
    if (it != state_->cache.end()) return {200, it->second};
  }

  std::string body;
  try {
    body = rigkeys_to_json(infer(state_->models, *audio, settings, state_->options.allow_mixed), true).dump();
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::kDomain: return error_reply(422, "weight_out_of_range", e.what());
      case ErrorCode::kFingerprintMismatch: return error_reply(409, "fingerprint_mismatch", e.what());
      case ErrorCode::kInvalidArgument: return error_reply(400, "bad_request", e.what());
      default: return error_reply(500, "internal", e.what());
    }
  }
  {
    std::lock_guard lock(state_->cache_mutex);
    if (state_->cache.size() >= state_->options.cache_entries) state_->cache.clear();
    state_->cache.emplace(cache_key, body);
  }
  return {200, body};
}

HttpReply InferenceService::get_health() const {
  const auto& m = state_->models;
  json configs = json::array();
  for (const auto& t : m.triples)
    configs.push_back({{"name", t.meta.configuration.name},
                       {"controllers", t.meta.configuration.controller_names},
                       {"upper_face", t.meta.configuration.upper_face}});
  return {200, json{{"status", "ok"},
                    {"configurations", configs},
                    {"emotion_names", m.emotion_names},
                    {"fps", m.fps},
                    {"fingerprints_consistent", m.fingerprints_consistent()},
                    {"checkpoint_fingerprints", m.fingerprints_json()}}
                   .dump()};
}

HttpReply InferenceService::get_schema() const { return {200, rigkeys_schema()}; }

// ------------------------------------------------------------------ HTTP

struct HttpServer::Impl {
  explicit Impl(InferenceService& s) : service(s) {}
  InferenceService& service;
  httplib::Server server;
};

HttpServer::HttpServer(InferenceService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  const std::string origin = service.options().allow_origin;
  srv.set_payload_max_length(kMaxUploadBytes);

  auto send = [origin](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
    if (!origin.empty()) res.set_header("Access-Control-Allow-Origin", origin);
  };

  srv.Post("/audio", [&service, send](const httplib::Request& req, httplib::Response& res) {
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(req.body.data());
    send(res, service.post_audio({bytes, req.body.size()}));
  });
  srv.Post("/infer", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.post_infer(req.body));
  });
  srv.Get("/health", [&service, send](const httplib::Request&, httplib::Response& res) {
    send(res, service.get_health());
  });
  srv.Get("/schema", [&service, send](const httplib::Request&, httplib::Response& res) {
    send(res, service.get_schema());
  });
  if (!origin.empty()) {
    srv.Options(R"(/.*)", [origin](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
  }
  // Unrouted paths and methods get the same JSON error shape as everything else.
  srv.set_error_handler([send](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const int status = res.status;
    send(res, error_reply(status, status == 404 ? "not_found" : "bad_request", req.method + " " + req.path));
    return httplib::Server::HandlerResponse::Handled;
  });
  srv.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
    }
    send(res, error_reply(500, "internal", msg));
  });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) fail(ErrorCode::kIo, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port))
    fail(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

int resolve_port(int cli_port) {
  if (const char* env = std::getenv("PORT"); env && *env) {
    char* end = nullptr;
    const long p = std::strtol(env, &end, 10);
    require(*end == '\0' && p > 0 && p < 65536, std::string("PORT is not a valid port: ") + env);
    return static_cast<int>(p);
  }
  return cli_port;
}

}  // namespace rigvoice
