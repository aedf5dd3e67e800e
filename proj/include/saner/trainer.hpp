// Copyright 2026 The SANER Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Batch assembly, the optimization loop and inference for the debiasing
// layer.

#ifndef SANER_TRAINER_HPP_
#define SANER_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "saner/debias_net.hpp"
#include "saner/embedding_store.hpp"
#include "saner/objective.hpp"

namespace saner {

enum class OptimizerKind { kAdam, kSgd };

// Defaults: 5 epochs, batch 128, learning rate 5e-6, loss weights
// 1.0 / 0.1 / 0.0001, hidden width 128.
struct TrainConfig {
  int epochs = 5;
  int batch_size = 128;
  double learning_rate = 5e-6;
  LossWeights weights;
  ContrastiveText contrastive_text = ContrastiveText::kDebiased;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.0;
  double grad_clip = 0.0;  // global L2 norm; 0 disables
  int hidden_dim = kDefaultHiddenDim;
  std::uint64_t seed = 0;
  double subset_fraction = 1.0;
  int checkpoint_every = 1;  // epochs between checkpoint callbacks

  void validate() const;
};

// Flat "key = value" lines, '#' comments. Unknown keys are an error.
TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);
std::string format_config(const TrainConfig& config);

struct TrainingSample {
  std::string sample_id;
  Eigen::VectorXd orig;
  Eigen::VectorXd neut;
  std::vector<Eigen::VectorXd> groups;  // AssembledSamples::groups order
  Eigen::VectorXd image;
};

struct AssembleOptions {
  // Attribute groups; empty means "every group seen in the text dataset".
  std::vector<std::string> groups;
  double subset_fraction = 1.0;
  std::uint64_t seed = 0;
};

struct AssembledSamples {
  std::vector<TrainingSample> samples;
  std::vector<std::string> groups;
  std::size_t dropped = 0;     // incomplete samples
  std::size_t subsampled = 0;  // complete samples left out by subset_fraction
};

// Joins ORIG/NEUT/GROUP variants with the image whose id equals the sample
// id. Incomplete samples are dropped and counted.
AssembledSamples assemble_samples(const EmbeddingDataset& text,
                                  const EmbeddingDataset& images,
                                  const AssembleOptions& options = {});

struct StepRecord {
  long step = 0;
  int epoch = 0;
  double deb = 0.0;
  double recon = 0.0;
  double cont = 0.0;
  double total = 0.0;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_seconds;
};

// "step<TAB>deb<TAB>recon<TAB>cont<TAB>total" per step.
std::string format_history(const TrainHistory& history);

struct TrainResult {
  DebiasParams params;
  TrainHistory history;
};

using EpochCallback = std::function<void(int epoch, const DebiasParams&)>;

// Runs epochs x ceil(n / batch_size) optimizer steps. Throws NumericError if
// a loss becomes non-finite.
TrainResult train(const TrainConfig& config,
                  std::span<const TrainingSample> samples,
                  const EpochCallback& on_epoch = {});

// Loss terms over all samples as a single batch.
LossBreakdown evaluate_losses(const DebiasParams& params,
                              const TrainConfig& config,
                              std::span<const TrainingSample> samples);

struct ObjectiveGradient {
  LossBreakdown loss;
  ParamGrads grads;
};

// Total loss over all samples as a single batch, with its gradient with
// respect to the layer parameters.
ObjectiveGradient objective_gradient(const DebiasParams& params,
                                     const TrainConfig& config,
                                     std::span<const TrainingSample> samples);

// Replaces every text vector with the layer output. Ids, meta and labels
// are kept.
EmbeddingDataset apply_debias(const DebiasParams& params,
                              const EmbeddingDataset& text);

}  // namespace saner

#endif  // SANER_TRAINER_HPP_
