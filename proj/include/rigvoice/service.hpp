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

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "rigvoice/inference.hpp"

namespace rigvoice {

struct ServiceOptions {
  double max_audio_seconds = 60.0;
  std::string allow_origin;  // empty disables CORS headers
  bool allow_mixed = false;  // serve mixed-fingerprint model sets
  bool strict_weights = false;  // default for requests that do not say
  std::size_t cache_entries = 256;
};

/// Status plus JSON body for one request.
struct HttpReply {
  int status = 200;
  std::string body;
};

/// Request handling for the inference service, independent of transport.
/// Thread-safe: handlers may run concurrently.
class InferenceService {
 public:
  InferenceService(ModelSet models, ServiceOptions options);
  ~InferenceService();
  InferenceService(const InferenceService&) = delete;
  InferenceService& operator=(const InferenceService&) = delete;

  HttpReply post_audio(std::span<const std::uint8_t> wav) const;
  HttpReply post_infer(const std::string& request_json) const;
  HttpReply get_health() const;
  HttpReply get_schema() const;

  const ServiceOptions& options() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// HTTP front end over InferenceService.
class HttpServer {
 public:
  explicit HttpServer(InferenceService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// PORT from the environment wins over the command-line port.
int resolve_port(int cli_port);

}  // namespace rigvoice
