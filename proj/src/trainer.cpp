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

#include "rigvoice/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <set>
#include <thread>

#include "rigvoice/error.hpp"
#include "rigvoice/synth.hpp"

namespace rigvoice {

using nlohmann::json;
namespace fs = std::filesystem;

// ------------------------------------------------------------------ plan

TrainPlan TrainPlan::default_plan() {
  TrainPlan plan;
  plan.configurations = default_synthetic_rig().configurations;
  return plan;
}

json plan_to_json(const TrainPlan& p) {
  json configs = json::array();
  for (const auto& c : p.configurations) configs.push_back(configuration_to_json(c));
  return {{"configurations", configs},
          {"epochs", p.epochs},
          {"batch_size", p.batch_size},
          {"learning_rate", p.learning_rate},
          {"seed", p.seed},
          {"validation_split", p.validation_split},
          {"patience", p.patience},
          {"min_delta", p.min_delta},
          {"deterministic", p.deterministic},
          {"parallel_keynet", p.parallel_keynet},
          {"z_dim", p.z_dim},
          {"cvae_hidden", p.cvae_hidden},
          {"beta", p.beta},
          {"keynet_lambda", p.keynet_lambda},
          {"window_frames", p.window_frames},
          {"conv_channels", p.conv_channels},
          {"gru_hidden", p.gru_hidden},
          {"dense_hidden", p.dense_hidden}};
}

TrainPlan plan_from_json(const json& j) {
  require(j.is_object(), "plan: expected a JSON object", ErrorCode::kFormat);
  const json defaults = plan_to_json(TrainPlan{});
  for (const auto& [key, value] : j.items())
    require(defaults.contains(key), "plan: unknown field '" + key + "'", ErrorCode::kFormat);

  TrainPlan p;
  try {
    require(j.contains("configurations"), "plan: missing field 'configurations'", ErrorCode::kFormat);
    for (const auto& c : j.at("configurations")) p.configurations.push_back(configuration_from_json(c));
    p.epochs = j.value("epochs", p.epochs);
    p.batch_size = j.value("batch_size", p.batch_size);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.seed = j.value("seed", p.seed);
    p.validation_split = j.value("validation_split", p.validation_split);
    p.patience = j.value("patience", p.patience);
    p.min_delta = j.value("min_delta", p.min_delta);
    p.deterministic = j.value("deterministic", p.deterministic);
    p.parallel_keynet = j.value("parallel_keynet", p.parallel_keynet);
    p.z_dim = j.value("z_dim", p.z_dim);
    p.cvae_hidden = j.value("cvae_hidden", p.cvae_hidden);
    p.beta = j.value("beta", p.beta);
    p.keynet_lambda = j.value("keynet_lambda", p.keynet_lambda);
    p.window_frames = j.value("window_frames", p.window_frames);
    p.conv_channels = j.value("conv_channels", p.conv_channels);
    p.gru_hidden = j.value("gru_hidden", p.gru_hidden);
    p.dense_hidden = j.value("dense_hidden", p.dense_hidden);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("plan: ") + e.what());
  }

  require(!p.configurations.empty(), "plan: no configurations");
  std::set<std::string> names, controllers;
  for (const auto& c : p.configurations) {
    require(names.insert(c.name).second, "plan: duplicate configuration '" + c.name + "'");
    for (const auto& ctrl : c.controller_names)
      require(controllers.insert(ctrl).second, "plan: controller '" + ctrl + "' appears in two configurations");
  }
  require(p.epochs >= 1, "plan: epochs must be >= 1");
  require(p.batch_size >= 1, "plan: batch_size must be >= 1");
  require(p.learning_rate > 0, "plan: learning_rate must be > 0");
  require(p.validation_split > 0 && p.validation_split < 1, "plan: validation_split must be in (0, 1)");
  require(p.patience >= 1, "plan: patience must be >= 1");
  require(p.z_dim >= 1, "plan: z_dim must be >= 1");
  require(p.beta >= 0, "plan: beta must be >= 0");
  require(p.window_frames >= 1 && p.window_frames % 2 == 1, "plan: window_frames must be odd");
  require(p.conv_channels >= 1 && p.gru_hidden >= 1 && p.dense_hidden >= 1, "plan: layer sizes must be >= 1");
  return p;
}

TrainPlan load_plan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return plan_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

void save_plan(const TrainPlan& plan, const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << plan_to_json(plan).dump(2) << '\n';
}

// ------------------------------------------------------- early stopping

bool EarlyStopper::update(double val_loss) {
  ++epoch_;
  improved_ = epoch_ == 1 || val_loss < best_ - min_delta_;
  if (improved_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
    bad_epochs_ = 0;
    return false;
  }
  return ++bad_epochs_ >= patience_;
}

// ------------------------------------------------------------- event log

void EventLog::emit(const std::string& event, const std::string& config, const std::string& net, int epoch,
                    double loss) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "event=%s config=%s net=%s epoch=%d loss=%.9g", event.c_str(), config.c_str(),
                net.c_str(), epoch, loss);
  std::lock_guard lock(mutex_);
  lines_.emplace_back(buf);
  if (sink_) sink_(lines_.back());
}

std::vector<std::string> EventLog::lines() const {
  std::lock_guard lock(mutex_);
  return lines_;
}

json TrainReport::to_json() const {
  json nets = json::array();
  for (const auto& n : networks)
    nets.push_back({{"configuration", n.configuration},
                    {"network", net_kind_name(n.kind)},
                    {"train_losses", n.train_losses},
                    {"val_losses", n.val_losses},
                    {"best_epoch", n.best_epoch},
                    {"stopped_early", n.stopped_early},
                    {"wall_seconds", n.wall_seconds},
                    {"checkpoint", n.checkpoint}});
  return {{"dataset_fingerprint", dataset_fingerprint}, {"networks", nets}};
}

// ------------------------------------------------------- data preparation

PreparedDataset prepare_dataset(LoadedDataset data, const TrainPlan& plan) {
  const int n_clips = static_cast<int>(data.clips.size());
  require(n_clips >= 2, "training needs at least two clips (one is held out for validation)");

  PreparedDataset p;
  std::vector<int> order(n_clips);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(plan.seed);
  rng.shuffle(order.begin(), order.end());
  const int n_val = std::clamp(static_cast<int>(std::lround(plan.validation_split * n_clips)), 1, n_clips - 1);
  p.val_clips.assign(order.begin(), order.begin() + n_val);
  p.train_clips.assign(order.begin() + n_val, order.end());
  std::sort(p.val_clips.begin(), p.val_clips.end());
  std::sort(p.train_clips.begin(), p.train_clips.end());

  // Pruning and ranges come from the training clips only.
  std::vector<RigAnimationClip> train_clips;
  for (int i : p.train_clips) train_clips.push_back(data.clips[i]);
  for (const auto& config : plan.configurations) {
    auto pruned = prune_controllers(train_clips, config);
    p.tables.push_back(fit_normalization(train_clips, pruned));
    p.configurations.push_back(std::move(pruned));
  }

  const int bins = data.mels.front().mel_bins;
  std::vector<double> sum(bins, 0.0), sum2(bins, 0.0);
  double count = 0;
  for (int i : p.train_clips) {
    const auto& mel = data.mels[i];
    for (int m = 0; m < bins; ++m)
      for (int t = 0; t < mel.time_frames; ++t) {
        const double v = mel.at(m, t);
        sum[m] += v;
        sum2[m] += v * v;
      }
    count += mel.time_frames;
  }
  p.input_mean.resize(bins);
  p.input_std.resize(bins);
  for (int m = 0; m < bins; ++m) {
    p.input_mean[m] = sum[m] / count;
    p.input_std[m] = std::sqrt(std::max(sum2[m] / count - p.input_mean[m] * p.input_mean[m], 0.0) + 1e-6);
  }

  p.windows = build_windows(data.clips, data.mels, plan.window_frames);
  p.fingerprint = dataset_fingerprint(data.manifest, p.tables);
  p.data = std::move(data);
  return p;
}

// ------------------------------------------------------------ train loop

RunResult run_training(std::vector<double>& params, std::size_t n_train,
                       const std::function<double(std::size_t, std::vector<double>&)>& sample_loss,
                       const std::function<double()>& val_loss, const TrainPlan& plan, std::uint64_t seed,
                       EventLog& log, const std::string& config, const std::string& net) {
  require(n_train > 0, "run_training: no training samples");
  Rng rng(seed);
  nn::Adam adam(params.size(), plan.learning_rate);
  EarlyStopper stopper(plan.patience, plan.min_delta);
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grads(params.size());
  std::vector<double> best = params;
  RunResult result;

  for (int epoch = 1; epoch <= plan.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double total = 0;
    for (std::size_t start = 0; start < n_train; start += plan.batch_size) {
      const std::size_t end = std::min(n_train, start + static_cast<std::size_t>(plan.batch_size));
      std::fill(grads.begin(), grads.end(), 0.0);
      double batch = 0;
      for (std::size_t i = start; i < end; ++i) batch += sample_loss(order[i], grads);
      if (!std::isfinite(batch))
        fail(ErrorCode::kDivergence,
             net + " for configuration '" + config + "' diverged: non-finite loss at epoch " + std::to_string(epoch));
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grads) g *= inv;
      adam.step(params, grads);
      total += batch;
    }
    const double train_loss = total / static_cast<double>(n_train);
    const double val = val_loss();
    if (!std::isfinite(val))
      fail(ErrorCode::kDivergence, net + " for configuration '" + config +
                                       "' diverged: non-finite validation loss at epoch " + std::to_string(epoch));
    result.train_losses.push_back(train_loss);
    result.val_losses.push_back(val);
    log.emit("epoch", config, net, epoch, train_loss);
    log.emit("val", config, net, epoch, val);
    const bool stop = stopper.update(val);
    if (stopper.improved_last()) best = params;
    if (stop) {
      result.stopped_early = true;
      log.emit("early_stop", config, net, epoch, stopper.best_loss());
      break;
    }
  }
  params = std::move(best);
  result.best_epoch = stopper.best_epoch();
  return result;
}

namespace {

std::uint64_t network_seed(std::uint64_t seed, std::size_t config_index, NetKind kind) {
  // splitmix64 finalizer over a packed key
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (config_index * 4 + static_cast<std::uint64_t>(kind) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

nn::Vec as_vec(const std::vector<double>& v) { return Eigen::Map<const nn::Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::vector<NetworkReport> train_configuration(const TrainPlan& plan, const PreparedDataset& data,
                                               std::size_t config_index, const fs::path& out_dir, EventLog& log) {
  require(config_index < data.configurations.size(), "train_configuration: bad configuration index");
  const auto& config = data.configurations[config_index];
  const auto& table = data.tables[config_index];
  const int n_ctrl = static_cast<int>(config.controller_names.size());
  const int n_cond = data.data.manifest.emotion_count();

  const auto samples = build_samples(data.data.clips, data.data.audio, data.windows, config, table, n_cond);
  std::vector<const TrainingSample*> train, val;
  {
    const std::set<int> val_set(data.val_clips.begin(), data.val_clips.end());
    for (const auto& s : samples) (val_set.count(s.clip) ? val : train).push_back(&s);
  }

  const fs::path dir = out_dir / config.name;
  fs::create_directories(dir);

  CheckpointMeta base;
  base.configuration_index = static_cast<int>(config_index);
  base.configuration = config;
  base.normalization = table;
  base.mel = MelParams{};
  base.mel.mel_bins = data.data.mels.front().mel_bins;
  base.window_frames = plan.window_frames;
  base.fps = data.data.manifest.fps;
  base.emotion_names = data.data.manifest.emotion_names;
  base.z_dim = plan.z_dim;
  base.seed = plan.seed;
  base.dataset_fingerprint = data.fingerprint;

  AudioShape audio_shape;
  audio_shape.mel_bins = base.mel.mel_bins;
  audio_shape.window_frames = plan.window_frames;
  audio_shape.conv_channels = plan.conv_channels;
  audio_shape.gru_hidden = plan.gru_hidden;
  audio_shape.dense_hidden = plan.dense_hidden;

  NetworkReport cvae_report, audionet_report, keynet_report;

  auto run_chain = [&] {
    // C-VAE
    const auto t0 = Clock::now();
    const std::string cvae_name = net_kind_name(NetKind::kCvae);
    log.emit("start", config.name, cvae_name, 0, 0.0);
    const std::uint64_t cvae_seed = network_seed(plan.seed, config_index, NetKind::kCvae);
    Rng init_rng(cvae_seed);
    Cvae cvae(CvaeShape{n_ctrl, n_cond, plan.z_dim, plan.cvae_hidden});
    cvae.init(init_rng);
    Rng eps_rng(cvae_seed ^ 0x5bd1e995ULL);
    auto cvae_sample = [&](std::size_t i, std::vector<double>& g) {
      const auto x = as_vec(train[i]->controller_values);
      const auto pass = cvae.forward(x, as_vec(train[i]->condition), LatentMode::kSample, &eps_rng);
      return cvae.backward(pass, x, plan.beta, g);
    };
    auto cvae_val = [&] {
      double acc = 0;
      for (const auto* s : val) {
        const auto x = as_vec(s->controller_values);
        const auto pass = cvae.forward(x, as_vec(s->condition), LatentMode::kMean);
        acc += cvae_loss(x, pass.x_hat, pass.mu, pass.logvar, plan.beta);
      }
      return acc / static_cast<double>(val.size());
    };
    RunResult r;
    try {
      r = run_training(cvae.params(), train.size(), cvae_sample, cvae_val, plan, cvae_seed + 1, log, config.name,
                       cvae_name);
    } catch (const Error& e) {
      log.emit("aborted", config.name, net_kind_name(NetKind::kAudioNet), 0, std::nan(""));
      fail(e.code(), std::string("audionet for configuration '") + config.name +
                         "' was not trained because its cvae failed: " + e.what());
    }
    CheckpointMeta meta = base;
    meta.kind = NetKind::kCvae;
    cvae_report = {config.name, NetKind::kCvae, r.train_losses, r.val_losses, r.best_epoch, r.stopped_early, 0.0,
                   (dir / "cvae.ckpt").string()};
    save_checkpoint(make_checkpoint(meta, cvae), dir / "cvae.ckpt");
    cvae_report.wall_seconds = seconds_since(t0);
    log.emit("finalized", config.name, cvae_name, r.best_epoch, r.val_losses[r.best_epoch - 1]);

    // AudioNet regresses the frozen encoder's posterior mean.
    const auto t1 = Clock::now();
    const std::string an_name = net_kind_name(NetKind::kAudioNet);
    log.emit("start", config.name, an_name, 0, 0.0);
    auto targets = [&](const std::vector<const TrainingSample*>& set) {
      std::vector<nn::Vec> z;
      z.reserve(set.size());
      for (const auto* s : set) z.push_back(cvae.encode_mean(as_vec(s->controller_values), as_vec(s->condition)));
      return z;
    };
    const auto z_train = targets(train);
    const auto z_val = targets(val);
    const std::uint64_t an_seed = network_seed(plan.seed, config_index, NetKind::kAudioNet);
    Rng an_rng(an_seed);
    AudioShape shape = audio_shape;
    shape.outputs = plan.z_dim;
    AudioModel audionet(shape);
    audionet.init(an_rng);
    audionet.set_input_stats(data.input_mean, data.input_std);
    auto an_sample = [&](std::size_t i, std::vector<double>& g) {
      AudioModel::Pass pass;
      const auto out = audionet.forward(train[i]->mel_window->data, pass);
      nn::Vec d;
      const double loss = audionet_loss(out, z_train[i], &d);
      audionet.backward(pass, d, g);
      return loss;
    };
    auto an_val = [&] {
      double acc = 0;
      for (std::size_t i = 0; i < val.size(); ++i) acc += audionet_loss(audionet.forward(val[i]->mel_window->data), z_val[i]);
      return acc / static_cast<double>(val.size());
    };
    r = run_training(audionet.params(), train.size(), an_sample, an_val, plan, an_seed + 1, log, config.name, an_name);
    meta.kind = NetKind::kAudioNet;
    audionet_report = {config.name, NetKind::kAudioNet, r.train_losses, r.val_losses, r.best_epoch, r.stopped_early,
                       0.0, (dir / "audionet.ckpt").string()};
    save_checkpoint(make_checkpoint(meta, audionet), dir / "audionet.ckpt");
    audionet_report.wall_seconds = seconds_since(t1);
    log.emit("finalized", config.name, an_name, r.best_epoch, r.val_losses[r.best_epoch - 1]);
  };

  auto run_keynet = [&] {
    const auto t0 = Clock::now();
    const std::string name = net_kind_name(NetKind::kKeyNet);
    log.emit("start", config.name, name, 0, 0.0);
    std::vector<double> counts(n_ctrl, 0.0);
    for (const auto* s : train)
      for (int k = 0; k < n_ctrl; ++k) counts[k] += s->key_flag[k];
    const auto pos_weight = positive_class_weights(counts, static_cast<double>(train.size()));

    const std::uint64_t seed = network_seed(plan.seed, config_index, NetKind::kKeyNet);
    Rng rng(seed);
    AudioShape shape = audio_shape;
    shape.outputs = 3 * n_ctrl;
    AudioModel keynet(shape);
    keynet.init(rng);
    keynet.set_input_stats(data.input_mean, data.input_std);
    auto targets_of = [](const TrainingSample* s) {
      return KeyTargets{s->key_flag, s->in_tangent, s->out_tangent};
    };
    auto sample = [&](std::size_t i, std::vector<double>& g) {
      AudioModel::Pass pass;
      const auto out = keynet.forward(train[i]->mel_window->data, pass);
      nn::Vec d;
      const double loss = keynet_loss(out, targets_of(train[i]), pos_weight, plan.keynet_lambda, &d);
      keynet.backward(pass, d, g);
      return loss;
    };
    auto val_fn = [&] {
      double acc = 0;
      for (const auto* s : val)
        acc += keynet_loss(keynet.forward(s->mel_window->data), targets_of(s), pos_weight, plan.keynet_lambda);
      return acc / static_cast<double>(val.size());
    };
    const auto r = run_training(keynet.params(), train.size(), sample, val_fn, plan, seed + 1, log, config.name, name);
    CheckpointMeta meta = base;
    meta.kind = NetKind::kKeyNet;
    keynet_report = {config.name, NetKind::kKeyNet, r.train_losses, r.val_losses, r.best_epoch, r.stopped_early, 0.0,
                     (dir / "keynet.ckpt").string()};
    save_checkpoint(make_checkpoint(meta, keynet, pos_weight), dir / "keynet.ckpt");
    keynet_report.wall_seconds = seconds_since(t0);
    log.emit("finalized", config.name, name, r.best_epoch, r.val_losses[r.best_epoch - 1]);
  };

  if (plan.parallel_keynet) {
    std::exception_ptr keynet_error;
    std::thread worker([&] {
      try {
        run_keynet();
      } catch (...) {
        keynet_error = std::current_exception();
      }
    });
    std::exception_ptr chain_error;
    try {
      run_chain();
    } catch (...) {
      chain_error = std::current_exception();
    }
    worker.join();
    if (chain_error) std::rethrow_exception(chain_error);
    if (keynet_error) std::rethrow_exception(keynet_error);
  } else {
    run_chain();
    run_keynet();
  }
  return {cvae_report, audionet_report, keynet_report};
}

TrainReport train(const TrainPlan& plan, LoadedDataset data, const fs::path& out_dir, EventLog::Sink sink) {
  fs::create_directories(out_dir);
  EventLog log(std::move(sink));
  const PreparedDataset prepared = prepare_dataset(std::move(data), plan);
  TrainReport report;
  report.dataset_fingerprint = prepared.fingerprint;
  auto write_outputs = [&] {
    report.events = log.lines();
    std::ofstream events(out_dir / "events.log");
    for (const auto& line : report.events) events << line << '\n';
    std::ofstream rep(out_dir / "report.json");
    rep << report.to_json().dump(1) << '\n';
  };
  save_plan(plan, out_dir / "plan.json");
  try {
    for (std::size_t i = 0; i < prepared.configurations.size(); ++i) {
      auto nets = train_configuration(plan, prepared, i, out_dir, log);
      report.networks.insert(report.networks.end(), nets.begin(), nets.end());
    }
  } catch (...) {
    write_outputs();
    throw;
  }
  write_outputs();
  return report;
}

}  // namespace rigvoice
