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
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rigvoice/checkpoint.hpp"
#include "rigvoice/dataset.hpp"
#include "rigvoice/models.hpp"

namespace rigvoice {

struct TrainPlan {
  std::vector<FaceConfiguration> configurations;
  int epochs = 200;             // upper bound per network
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  double validation_split = 0.1;  // fraction of whole clips
  int patience = 10;
  double min_delta = 1e-5;
  bool deterministic = true;
  bool parallel_keynet = true;

  // Architecture. Defaults are the production sizes; tests shrink them.
  int z_dim = 8;
  std::vector<int> cvae_hidden{128, 64};
  double beta = 0.05;
  double keynet_lambda = 1.0;
  int window_frames = 33;
  int conv_channels = 16;
  int gru_hidden = 64;
  int dense_hidden = 64;

  /// Three configurations (mouth, tongue, upper) over the synthetic rig.
  static TrainPlan default_plan();
};

nlohmann::json plan_to_json(const TrainPlan& plan);
TrainPlan plan_from_json(const nlohmann::json& j);
TrainPlan load_plan(const std::filesystem::path& path);
void save_plan(const TrainPlan& plan, const std::filesystem::path& path);

/// Stops once the validation loss has failed to improve on the best value by
/// at least `min_delta` for `patience` consecutive epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience = 10, double min_delta = 1e-5) : patience_(patience), min_delta_(min_delta) {}

  /// Feed one epoch's validation loss; returns true when training should stop.
  bool update(double val_loss);
  bool improved_last() const { return improved_; }
  int best_epoch() const { return best_epoch_; }  // 1-based
  double best_loss() const { return best_; }
  int epochs_seen() const { return epoch_; }

 private:
  int patience_;
  double min_delta_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int bad_epochs_ = 0;
  bool improved_ = false;
  double best_ = 0.0;
};

/// Thread-safe progress log. Each line reads
///   event=<name> config=<name> net=<kind> epoch=<i> loss=<float>
class EventLog {
 public:
  using Sink = std::function<void(const std::string&)>;

  explicit EventLog(Sink sink = {}) : sink_(std::move(sink)) {}
  void emit(const std::string& event, const std::string& config, const std::string& net, int epoch, double loss);
  std::vector<std::string> lines() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> lines_;
  Sink sink_;
};

struct NetworkReport {
  std::string configuration;
  NetKind kind = NetKind::kCvae;
  std::vector<double> train_losses;
  std::vector<double> val_losses;
  int best_epoch = 0;
  bool stopped_early = false;
  double wall_seconds = 0.0;
  std::string checkpoint;
};

struct TrainReport {
  std::string dataset_fingerprint;
  std::vector<NetworkReport> networks;
  std::vector<std::string> events;

  nlohmann::json to_json() const;
};

/// Everything the per-network loops need, built once from the loaded data.
struct PreparedDataset {
  LoadedDataset data;
  std::vector<FaceConfiguration> configurations;  // pruned, plan order
  std::vector<NormalizationTable> tables;
  std::vector<std::vector<std::shared_ptr<const MelWindow>>> windows;
  std::vector<int> train_clips;
  std::vector<int> val_clips;
  std::vector<double> input_mean;  // per mel bin over training clips
  std::vector<double> input_std;
  std::string fingerprint;
};

/// Split is by whole clips, seeded by the plan.
PreparedDataset prepare_dataset(LoadedDataset data, const TrainPlan& plan);

/// One optimization run: minibatch Adam over `n_train` samples with early
/// stopping on `val_loss`. `sample_loss(i, grads)` returns the loss of
/// training sample i and accumulates its gradient. Leaves the best-validation
/// parameters in `params`. Throws Error(kDivergence) on a non-finite loss.
struct RunResult {
  std::vector<double> train_losses;
  std::vector<double> val_losses;
  int best_epoch = 0;
  bool stopped_early = false;
};

RunResult run_training(std::vector<double>& params, std::size_t n_train,
                       const std::function<double(std::size_t, std::vector<double>&)>& sample_loss,
                       const std::function<double()>& val_loss, const TrainPlan& plan, std::uint64_t seed,
                       EventLog& log, const std::string& config, const std::string& net);

/// Trains C-VAE, then AudioNet against the frozen C-VAE, with KeyNet
/// independent (on its own thread when plan.parallel_keynet is set).
/// Checkpoints go to out_dir/<config>/<kind>.ckpt.
std::vector<NetworkReport> train_configuration(const TrainPlan& plan, const PreparedDataset& data,
                                               std::size_t config_index, const std::filesystem::path& out_dir,
                                               EventLog& log);

/// Full run over every configuration in the plan. Writes report.json and
/// events.log next to the checkpoints.
TrainReport train(const TrainPlan& plan, LoadedDataset data, const std::filesystem::path& out_dir,
                  EventLog::Sink sink = {});

}  // namespace rigvoice
