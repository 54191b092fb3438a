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

// Command-line front end. Talks to the library only through rigvoice.h.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rigvoice/rigvoice.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitValidation = 2;

int exit_code(rv_status s) {
  switch (s) {
    case RV_OK: return kExitOk;
    case RV_ERR_DIVERGENCE:
    case RV_ERR_INTERNAL: return kExitInternal;
    default: return kExitValidation;
  }
}

int report(rv_status s) {
  if (s != RV_OK) std::fprintf(stderr, "error (%s): %s\n", rv_status_name(s), rv_last_error());
  return exit_code(s);
}

// "0,0,1,0,0,0" -> {0,0,1,0,0,0}; false on any malformed entry.
bool parse_weights(const std::string& text, std::vector<double>& out) {
  out.clear();
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (item.empty()) return false;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(item.c_str(), &end);
    if (errno != 0 || *end != '\0') return false;
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return !out.empty();
}

void print_event(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rigvoice: keyframe facial-rig animation from audio"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rv_version());

  int result = kExitOk;

  auto* synth = app.add_subcommand("synth", "Write a synthetic training dataset");
  rv_synth_options synth_opts;
  rv_synth_options_init(&synth_opts);
  std::string synth_out;
  synth->add_option("--seed", synth_opts.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--clips", synth_opts.n_clips, "Number of clips")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--frames", synth_opts.frames_per_clip, "Frames per clip")->capture_default_str()->check(CLI::Range(2, 1 << 20));
  synth->add_option("--emotions", synth_opts.emotions_used, "Emotion labels in use")->capture_default_str()->check(CLI::Range(1, 6));
  synth->callback([&] { result = report(rv_synth(synth_out.c_str(), &synth_opts)); });

  auto* extract = app.add_subcommand("extract", "Pair clip JSON files with WAV files into a manifest");
  std::string scene_dir, manifest_out;
  extract->add_option("--scene-json", scene_dir, "Directory of clip JSON and WAV files")->required();
  extract->add_option("--manifest", manifest_out, "Manifest to write")->required();
  extract->callback([&] { result = report(rv_extract(scene_dir.c_str(), manifest_out.c_str())); });

  auto* plan = app.add_subcommand("plan", "Write the default training plan");
  std::string plan_out;
  plan->add_option("--out", plan_out, "Plan file to write")->required();
  plan->callback([&] { result = report(rv_write_default_plan(plan_out.c_str())); });

  auto* train = app.add_subcommand("train", "Train every configuration of a plan");
  std::string plan_path, data_path, train_out;
  train->add_option("--plan", plan_path, "Plan JSON")->required();
  train->add_option("--data", data_path, "Dataset manifest JSON")->required();
  train->add_option("--out", train_out, "Checkpoint directory")->required();
  train->callback([&] {
    result = report(rv_train(plan_path.c_str(), data_path.c_str(), train_out.c_str(), print_event, nullptr));
  });

  auto* infer = app.add_subcommand("infer", "Generate rig keys for an audio file");
  std::string audio_path, ckpt_dir, weights_text, infer_out;
  rv_infer_options infer_opts;
  rv_infer_options_init(&infer_opts);
  bool smooth_upper = false, strict = false, allow_mixed = false, preview = false;
  infer->add_option("--audio", audio_path, "Mono PCM16 WAV")->required();
  infer->add_option("--ckpts", ckpt_dir, "Checkpoint directory")->required();
  infer->add_option("--weights", weights_text, "Comma-separated emotion weights, e.g. 0,0,1,0,0,0")->required();
  infer->add_option("--out", infer_out, "rigkeys JSON to write")->required();
  infer->add_option("--threshold", infer_opts.key_threshold, "Key probability threshold")->capture_default_str();
  infer->add_flag("--smooth-upper", smooth_upper, "Gaussian-smooth the upper-face configuration");
  infer->add_option("--smooth-sigma", infer_opts.smooth_sigma, "Smoothing sigma in frames")->capture_default_str();
  infer->add_option("--rate", infer_opts.rate, "Key rate: 1, 2 or 4")->capture_default_str();
  infer->add_option("--tangent-sigma", infer_opts.tangent_filter_sigma, "Tangent filter sigma (0 = off)")
      ->capture_default_str();
  infer->add_flag("--strict", strict, "Reject weights outside [0, 1] instead of clamping");
  infer->add_flag("--allow-mixed", allow_mixed, "Accept checkpoints from different datasets");
  infer->add_flag("--preview", preview, "Include dense preview arrays");
  infer->callback([&] {
    std::vector<double> weights;
    if (!parse_weights(weights_text, weights)) {
      std::fprintf(stderr, "error (invalid_argument): --weights must be comma-separated numbers\n");
      result = kExitValidation;
      return;
    }
    infer_opts.emotion_weights = weights.data();
    infer_opts.n_weights = weights.size();
    infer_opts.smooth_upper = smooth_upper;
    infer_opts.strict_weights = strict;
    infer_opts.allow_mixed = allow_mixed;
    rv_models* models = nullptr;
    rv_status s = rv_models_load(ckpt_dir.c_str(), &models);
    if (s != RV_OK) {
      result = report(s);
      return;
    }
    rv_result* r = nullptr;
    char* json = nullptr;
    s = rv_infer_wav(models, audio_path.c_str(), &infer_opts, &r);
    if (s == RV_OK) s = rv_result_json(r, preview, &json);
    result = report(s);
    if (s == RV_OK) {
      std::FILE* f = std::fopen(infer_out.c_str(), "wb");
      const bool written = f && std::fputs(json, f) >= 0 && std::fputc('\n', f) != EOF;
      if ((f && std::fclose(f) != 0) || !written) {
        std::fprintf(stderr, "error (io): cannot write %s\n", infer_out.c_str());
        result = kExitValidation;
      }
    }
    rv_string_free(json);
    rv_result_free(r);
    rv_models_free(models);
  });

  auto* exp = app.add_subcommand("export", "Convert rigkeys JSON to the plain-text channel format");
  std::string export_in, export_out;
  exp->add_option("--in", export_in, "rigkeys JSON")->required();
  exp->add_option("--out", export_out, "Text file to write")->required();
  exp->callback([&] { result = report(rv_export_text(export_in.c_str(), export_out.c_str())); });

  auto* serve = app.add_subcommand("serve", "Run the HTTP inference service");
  rv_serve_options serve_opts;
  rv_serve_options_init(&serve_opts);
  std::string serve_ckpts, host = serve_opts.host, origin;
  bool serve_mixed = false, serve_strict = false;
  serve->add_option("--ckpts", serve_ckpts, "Checkpoint directory")->required();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", serve_opts.port, "Port (PORT env var wins)")->capture_default_str();
  serve->add_option("--allow-origin", origin, "Origin allowed by CORS");
  serve->add_option("--max-seconds", serve_opts.max_audio_seconds, "Upload duration limit")->capture_default_str();
  serve->add_flag("--allow-mixed", serve_mixed, "Serve checkpoints from different datasets");
  serve->add_flag("--strict", serve_strict, "Reject out-of-range weights by default");
  serve->callback([&] {
    serve_opts.host = host.c_str();
    serve_opts.allow_origin = origin.c_str();
    serve_opts.allow_mixed = serve_mixed;
    serve_opts.strict_weights = serve_strict;
    result = report(rv_serve(serve_ckpts.c_str(), &serve_opts));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::fputs(app.help().c_str(), stderr);
    return kExitValidation;
  }
  return result;
}
