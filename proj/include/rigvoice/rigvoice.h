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

#ifndef RIGVOICE_RIGVOICE_H_
#define RIGVOICE_RIGVOICE_H_

/* C interface to the rigvoice library. All functions return an rv_status;
 * on failure rv_last_error() describes the most recent error on the
 * calling thread. Strings returned through char** are owned by the caller
 * and released with rv_string_free. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RV_API __declspec(dllexport)
#else
#define RV_API __attribute__((visibility("default")))
#endif

typedef enum rv_status {
  RV_OK = 0,
  RV_ERR_INVALID_ARGUMENT = 1,
  RV_ERR_DOMAIN = 2,
  RV_ERR_IO = 3,
  RV_ERR_FORMAT = 4,
  RV_ERR_FINGERPRINT_MISMATCH = 5,
  RV_ERR_NOT_FOUND = 6,
  RV_ERR_DIVERGENCE = 7,
  RV_ERR_CONFIGURATION = 8,
  RV_ERR_INTERNAL = 9
} rv_status;

typedef struct rv_models rv_models;
typedef struct rv_result rv_result;

RV_API const char* rv_version(void);
RV_API const char* rv_status_name(rv_status status);
/* Message of the last failure on this thread; empty after success. */
RV_API const char* rv_last_error(void);
RV_API void rv_string_free(char* s);

/* Synthetic dataset: clip_XXX.json, clip_XXX.wav and manifest.json. */
typedef struct rv_synth_options {
  uint64_t seed;
  int n_clips;
  int frames_per_clip;
  int emotions_used;
} rv_synth_options;

RV_API void rv_synth_options_init(rv_synth_options* options);
RV_API rv_status rv_synth(const char* out_dir, const rv_synth_options* options);

/* Pairs clip JSON files with same-stem WAV files and writes a manifest. */
RV_API rv_status rv_extract(const char* scene_dir, const char* manifest_out);

/* Writes the default three-configuration training plan. */
RV_API rv_status rv_write_default_plan(const char* path);

/* Trains every configuration of the plan. Each progress line is passed to
 * `on_event` (may be NULL) as it happens. */
typedef void (*rv_event_fn)(const char* line, void* user);
RV_API rv_status rv_train(const char* plan_path, const char* manifest_path, const char* out_dir,
                          rv_event_fn on_event, void* user);

RV_API rv_status rv_models_load(const char* ckpt_dir, rv_models** out);
RV_API void rv_models_free(rv_models* models);
RV_API int rv_models_emotion_count(const rv_models* models);

typedef struct rv_infer_options {
  const double* emotion_weights; /* rv_models_emotion_count() entries */
  size_t n_weights;
  double key_threshold;
  int smooth_upper;
  double smooth_sigma;
  int rate;
  double tangent_filter_sigma;
  int strict_weights;
  int allow_mixed;
} rv_infer_options;

RV_API void rv_infer_options_init(rv_infer_options* options);
RV_API rv_status rv_infer_wav(const rv_models* models, const char* wav_path, const rv_infer_options* options,
                              rv_result** out);
RV_API void rv_result_free(rv_result* result);
RV_API int rv_result_frame_count(const rv_result* result);
/* rigkeys JSON; `with_preview` adds dense preview arrays. */
RV_API rv_status rv_result_json(const rv_result* result, int with_preview, char** out);
RV_API rv_status rv_result_write(const rv_result* result, const char* path);

/* Converts a rigkeys JSON file into the plain-text channel format. */
RV_API rv_status rv_export_text(const char* rigkeys_path, const char* out_path);

typedef struct rv_serve_options {
  const char* host;
  int port; /* overridden by the PORT environment variable */
  const char* allow_origin; /* NULL or empty disables CORS */
  int allow_mixed;
  int strict_weights;
  double max_audio_seconds;
} rv_serve_options;

RV_API void rv_serve_options_init(rv_serve_options* options);
/* Blocks while serving. */
RV_API rv_status rv_serve(const char* ckpt_dir, const rv_serve_options* options);

#ifdef __cplusplus
}
#endif

#endif /* RIGVOICE_RIGVOICE_H_ */
