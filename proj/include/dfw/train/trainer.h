// Copyright 2026  The dfwhisper Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dfw/audio/audio.h"
#include "dfw/data/dataset.h"
#include "dfw/models/detector.h"
#include "dfw/whisper/frontend.h"

namespace dfw::train {

/// Process-wide default seed; every stochastic stream (init, shuffling,
/// oversampling, dropout, splits) is derived from it by name.
void set_global_seed(uint64_t seed);
uint64_t global_seed();

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-4;
  int64_t batch_size = 8;
  int64_t epochs = 10;
  uint64_t seed = 0;
  /// Score at or above which a sample is classified as spoof.
  double accuracy_threshold = 0.5;
  bool oversample = true;
  /// Stop after the first epoch whose training accuracy reaches this value.
  std::optional<double> stop_at_train_acc;
  /// Keep frozen front-end outputs instead of re-running the encoder each step.
  bool cache_frozen_features = true;

  void validate() const;
};

struct FinetuneConfig {
  int64_t epochs = 5;
  /// Applied to every parameter (encoder and detector head).
  double lr = 1e-6;
  bool unfreeze_encoder = true;

  void validate() const;
};

/// One utterance after preprocessing and the non-trainable front-end work.
/// `features` holds the final detector input when the front-end is frozen;
/// `mel`/`cepstral` hold the stage outputs for runs through the encoder.
/// Everything is stored as float32, the cache precision.
struct Example {
  std::string utt_id;
  Label label = Label::kBonafide;
  int64_t rows = 0, frames = 0;
  std::vector<float> features;
  int64_t mel_rows = 0, cep_rows = 0;
  std::vector<float> mel, cepstral;
};

struct ExampleOptions {
  audio::PreprocessConfig preprocess;
  std::string cache_dir;  // preprocessed-clip cache; empty disables
  bool features = true;
  bool stages = false;
};

Example make_example(const data::UtteranceRecord& record, const whisper::Frontend& frontend,
                     const ExampleOptions& opts);
std::vector<Example> make_examples(const std::vector<data::UtteranceRecord>& records,
                                   const whisper::Frontend& frontend, const ExampleOptions& opts);

/// (B, rows, T) detector input of the given examples.
nn::Tensor batch_features(const std::vector<const Example*>& batch);
/// Front-end output for a batch, running the encoder on stored stages.
nn::Tensor batch_through_frontend(const whisper::Frontend& frontend,
                                  const std::vector<const Example*>& batch);

struct EpochStats {
  int64_t epoch = 0;  // 1-based
  double train_loss = 0, train_acc = 0, val_loss = 0, val_acc = 0;
  std::string checkpoint;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

/// Where fit/finetune write per-epoch checkpoints and the history CSV.
/// `meta` supplies arch/frontend/config-hash; epoch, val_acc and seed are
/// filled in per epoch.
struct RunOutput {
  std::string checkpoint_dir;
  std::string checkpoint_prefix = "epoch";
  std::string history_csv;
  models::CheckpointMeta meta;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Binary cross-entropy training with AdamW, per-epoch validation and
/// checkpoints. Frozen encoder parameters never receive gradients.
/// NonFiniteLoss aborts the run.
TrainHistory fit(models::Detector& model, const whisper::Frontend& frontend,
                 const std::vector<Example>& train, const std::vector<Example>& val,
                 const TrainConfig& cfg, const RunOutput* out = nullptr,
                 const EpochCallback& on_epoch = {});

/// Continues training with the encoder unfrozen (examples need stages).
/// NotWhisperFrontend when the front-end has no encoder.
TrainHistory finetune(models::Detector& model, const whisper::Frontend& frontend,
                      const std::vector<Example>& train, const std::vector<Example>& val,
                      const FinetuneConfig& ft, const TrainConfig& base,
                      const RunOutput* out = nullptr, const EpochCallback& on_epoch = {});

/// Highest validation accuracy, earliest epoch on ties. EmptyHistory.
EpochStats select_best(const TrainHistory& history);

void write_history_csv(const std::string& path, const TrainHistory& history);

struct EvalStats {
  double loss = 0, accuracy = 0;
  std::vector<double> scores;
};
/// Evaluation-mode loss/accuracy/scores over examples.
EvalStats evaluate_examples(models::Detector& model, const whisper::Frontend& frontend,
                            const std::vector<Example>& examples, int64_t batch_size,
                            double threshold);

}  // namespace dfw::train
