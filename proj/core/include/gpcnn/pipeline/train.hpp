/* Copyright 2026 The gpcnn Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GPCNN_PIPELINE_TRAIN_HPP_
#define GPCNN_PIPELINE_TRAIN_HPP_

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpcnn/losses.hpp"
#include "gpcnn/numerics/grad_check.hpp"
#include "gpcnn/pipeline/model.hpp"
#include "gpcnn/pipeline/synth.hpp"

namespace gpcnn {

/// Supplies the guided points of sample `index` given its detached heatmaps.
using GuideSource = std::function<SampleBatch(std::size_t index, const Tensor& heatmaps)>;

/// Draws N guided points per visible keypoint and, unless the variant is vc,
/// shuffles each list before graphs are assembled.
GuideSource random_guides(const Model& model, std::span<const SynthSample* const> samples,
                          Rng& rng);

struct BatchLoss {
  Var total;
  Var stage1;  // unweighted mean over the batch
  Var stage2;
  LossReport report;
};

/// Full training objective over a batch of samples: stage-1 heatmap loss,
/// N pose graphs per sample through the GPR layer and head (train-mode batch
/// norm over every node row in the batch), stage-2 losses.
BatchLoss batch_loss(Tape& tape, Model& model, std::span<const SynthSample* const> samples,
                     const GuideSource& guides, bool update_running = true);

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double stage1_loss = 0.0;
  double stage2_loss = 0.0;
  double stage1_error = 0.0;  // held-out mean pixel error
  double stage2_error = 0.0;
  double stage1_ap = 0.0;
  double stage2_ap = 0.0;

  nlohmann::json to_json() const;
};

struct TrainOptions {
  std::filesystem::path metrics_log;  // one JSON object per epoch, appended
  std::filesystem::path checkpoint;   // rewritten after every epoch
  std::function<void(const EpochMetrics&)> on_epoch;
  int max_batches = -1;               // per epoch; negative runs them all
  bool evaluate_heldout = true;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  std::vector<double> batch_losses;
};

/// Adam over shuffled mini-batches for config().epochs epochs. A non-finite
/// loss or gradient aborts with ErrorCode::kNonFinite before the parameters
/// change; the last written checkpoint is left in place.
TrainResult train(Model& model, const Dataset& train_set, const Dataset& heldout,
                  const TrainOptions& options = {});

/// The objective is only piecewise smooth: at initialization many ReLU units
/// and clamped heat responses sit near their kinks, and a 1e-5 step straddles
/// one for a noticeable fraction of seeds.
inline constexpr double kModelGradCheckStep = 1e-7;

/// Central-difference check of the full training objective for a freshly
/// initialized model: `batch` synthetic samples, guided points drawn once and
/// then held fixed, batch-norm running statistics left untouched.
GradCheckResult check_model_gradients(const RunConfig& config, std::uint64_t seed,
                                      const GradCheckOptions& options = {.step = kModelGradCheckStep},
                                      int batch = 2);

}  // namespace gpcnn

#endif  // GPCNN_PIPELINE_TRAIN_HPP_
