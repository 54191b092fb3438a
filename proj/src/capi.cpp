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

#include "rigvoice/rigvoice.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "rigvoice/dataset.hpp"
#include "rigvoice/error.hpp"
#include "rigvoice/inference.hpp"
#include "rigvoice/rigkeys.hpp"
#include "rigvoice/service.hpp"
#include "rigvoice/synth.hpp"
#include "rigvoice/trainer.hpp"

struct rv_models {
  rigvoice::ModelSet set;
};

struct rv_result {
  rigvoice::InferenceResult result;
};

namespace {

thread_local std::string g_last_error;

rv_status to_status(rigvoice::ErrorCode code) {
  using rigvoice::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return RV_ERR_INVALID_ARGUMENT;
    case ErrorCode::kDomain: return RV_ERR_DOMAIN;
    case ErrorCode::kIo: return RV_ERR_IO;
    case ErrorCode::kFormat: return RV_ERR_FORMAT;
    case ErrorCode::kFingerprintMismatch: return RV_ERR_FINGERPRINT_MISMATCH;
    case ErrorCode::kNotFound: return RV_ERR_NOT_FOUND;
    case ErrorCode::kDivergence: return RV_ERR_DIVERGENCE;
    case ErrorCode::kConfiguration: return RV_ERR_CONFIGURATION;
    case ErrorCode::kInternal: return RV_ERR_INTERNAL;
  }
  return RV_ERR_INTERNAL;
}

// Runs `fn`, translating exceptions into a status and the thread's last error.
template <typename Fn>
rv_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return RV_OK;
  } catch (const rigvoice::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return RV_ERR_INTERNAL;
}

void require_arg(const void* p, const char* name) {
  rigvoice::require(p != nullptr, std::string(name) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* rv_version(void) { return "0.1.0"; }

const char* rv_status_name(rv_status status) {
  switch (status) {
    case RV_OK: return "ok";
    case RV_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case RV_ERR_DOMAIN: return "domain";
    case RV_ERR_IO: return "io";
    case RV_ERR_FORMAT: return "format";
    case RV_ERR_FINGERPRINT_MISMATCH: return "fingerprint_mismatch";
    case RV_ERR_NOT_FOUND: return "not_found";
    case RV_ERR_DIVERGENCE: return "divergence";
    case RV_ERR_CONFIGURATION: return "configuration";
    case RV_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* rv_last_error(void) { return g_last_error.c_str(); }

void rv_string_free(char* s) { std::free(s); }

void rv_synth_options_init(rv_synth_options* o) {
  if (!o) return;
  const rigvoice::SynthOptions d;
  o->seed = d.seed;
  o->n_clips = d.n_clips;
  o->frames_per_clip = d.frames_per_clip;
  o->emotions_used = d.emotions_used;
}

rv_status rv_synth(const char* out_dir, const rv_synth_options* options) {
  return guarded([&] {
    require_arg(out_dir, "out_dir");
    rigvoice::SynthOptions o;
    if (options) {
      o.seed = options->seed;
      o.n_clips = options->n_clips;
      o.frames_per_clip = options->frames_per_clip;
      o.emotions_used = options->emotions_used;
    }
    const auto rig = rigvoice::default_synthetic_rig();
    rigvoice::write_synthetic_dataset(rigvoice::generate_synthetic_dataset(o, rig), out_dir);
  });
}

rv_status rv_extract(const char* scene_dir, const char* manifest_out) {
  return guarded([&] {
    require_arg(scene_dir, "scene_dir");
    require_arg(manifest_out, "manifest_out");
    rigvoice::save_manifest(rigvoice::scan_scene_directory(scene_dir), manifest_out);
  });
}

rv_status rv_write_default_plan(const char* path) {
  return guarded([&] {
    require_arg(path, "path");
    rigvoice::save_plan(rigvoice::TrainPlan::default_plan(), path);
  });
}

rv_status rv_train(const char* plan_path, const char* manifest_path, const char* out_dir, rv_event_fn on_event,
                   void* user) {
  return guarded([&] {
    require_arg(plan_path, "plan_path");
    require_arg(manifest_path, "manifest_path");
    require_arg(out_dir, "out_dir");
    const auto plan = rigvoice::load_plan(plan_path);
    auto data = rigvoice::load_dataset(manifest_path);
    rigvoice::EventLog::Sink sink;
    if (on_event) sink = [on_event, user](const std::string& line) { on_event(line.c_str(), user); };
    rigvoice::train(plan, std::move(data), out_dir, sink);
  });
}

rv_status rv_models_load(const char* ckpt_dir, rv_models** out) {
  return guarded([&] {
    require_arg(ckpt_dir, "ckpt_dir");
    require_arg(out, "out");
    *out = nullptr;
    auto m = std::make_unique<rv_models>();
    m->set = rigvoice::load_models(ckpt_dir);
    *out = m.release();
  });
}

void rv_models_free(rv_models* models) { delete models; }

int rv_models_emotion_count(const rv_models* models) { return models ? models->set.emotion_count() : 0; }

void rv_infer_options_init(rv_infer_options* o) {
  if (!o) return;
  const rigvoice::InferenceSettings d;
  o->emotion_weights = nullptr;
  o->n_weights = 0;
  o->key_threshold = d.key_threshold;
  o->smooth_upper = d.smooth_upper;
  o->smooth_sigma = d.smooth_sigma;
  o->rate = d.rate;
  o->tangent_filter_sigma = d.tangent_filter_sigma;
  o->strict_weights = d.strict_weights;
  o->allow_mixed = 0;
}

rv_status rv_infer_wav(const rv_models* models, const char* wav_path, const rv_infer_options* options,
                       rv_result** out) {
  return guarded([&] {
    require_arg(models, "models");
    require_arg(wav_path, "wav_path");
    require_arg(options, "options");
    require_arg(out, "out");
    *out = nullptr;
    rigvoice::require(options->n_weights == 0 || options->emotion_weights != nullptr,
                      "emotion_weights must not be NULL");
    rigvoice::InferenceSettings s;
    s.emotion_weights.assign(options->emotion_weights, options->emotion_weights + options->n_weights);
    s.key_threshold = options->key_threshold;
    s.smooth_upper = options->smooth_upper != 0;
    s.smooth_sigma = options->smooth_sigma;
    s.rate = options->rate;
    s.tangent_filter_sigma = options->tangent_filter_sigma;
    s.strict_weights = options->strict_weights != 0;
    auto r = std::make_unique<rv_result>();
    r->result = rigvoice::infer(models->set, rigvoice::read_wav(wav_path), s, options->allow_mixed != 0);
    *out = r.release();
  });
}

void rv_result_free(rv_result* result) { delete result; }

int rv_result_frame_count(const rv_result* result) { return result ? result->result.frame_count : 0; }

rv_status rv_result_json(const rv_result* result, int with_preview, char** out) {
  return guarded([&] {
    require_arg(result, "result");
    require_arg(out, "out");
    *out = copy_string(rigvoice::rigkeys_to_json(result->result, with_preview != 0).dump(1));
  });
}

rv_status rv_result_write(const rv_result* result, const char* path) {
  return guarded([&] {
    require_arg(result, "result");
    require_arg(path, "path");
    rigvoice::write_rigkeys(result->result, path);
  });
}

rv_status rv_export_text(const char* rigkeys_path, const char* out_path) {
  return guarded([&] {
    require_arg(rigkeys_path, "rigkeys_path");
    require_arg(out_path, "out_path");
    const auto text = rigvoice::rigkeys_to_text(rigvoice::load_rigkeys(rigkeys_path));
    std::ofstream out(out_path);
    if (!out) rigvoice::fail(rigvoice::ErrorCode::kIo, std::string("cannot write ") + out_path);
    out << text;
  });
}

void rv_serve_options_init(rv_serve_options* o) {
  if (!o) return;
  const rigvoice::ServiceOptions d;
  o->host = "127.0.0.1";
  o->port = 8080;
  o->allow_origin = nullptr;
  o->allow_mixed = d.allow_mixed;
  o->strict_weights = d.strict_weights;
  o->max_audio_seconds = d.max_audio_seconds;
}

rv_status rv_serve(const char* ckpt_dir, const rv_serve_options* options) {
  return guarded([&] {
    require_arg(ckpt_dir, "ckpt_dir");
    require_arg(options, "options");
    rigvoice::ServiceOptions so;
    so.allow_origin = options->allow_origin ? options->allow_origin : "";
    so.allow_mixed = options->allow_mixed != 0;
    so.strict_weights = options->strict_weights != 0;
    so.max_audio_seconds = options->max_audio_seconds;
    rigvoice::require(so.max_audio_seconds > 0, "max_audio_seconds must be > 0");
    rigvoice::InferenceService service(rigvoice::load_models(ckpt_dir), so);
    rigvoice::HttpServer server(service);
    const std::string host = options->host ? options->host : "127.0.0.1";
    const int port = server.bind(host, rigvoice::resolve_port(options->port));
    std::fprintf(stderr, "serving on http://%s:%d\n", host.c_str(), port);
    server.run();
  });
}

}  // extern "C"
