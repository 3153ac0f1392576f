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

#include <functional>
#include <optional>
#include <string>

#include "dfw/cli/config.h"
#include "dfw/eval/eval.h"
#include "dfw/train/trainer.h"
#include "dfw/whisper/frontend.h"

namespace dfw::cli {

/// Output layout under RunConfig::output_dir.
struct RunLayout {
  std::string root;
  std::string snapshot() const { return root + "/config.snapshot"; }
  std::string checkpoints() const { return root + "/checkpoints"; }
  std::string history() const { return root + "/history.csv"; }
  std::string finetune_history() const { return root + "/finetune_history.csv"; }
  std::string scores() const { return root + "/scores"; }
  std::string reports() const { return root + "/reports"; }
  std::string figures() const { return root + "/figures"; }
  /// DFW_CACHE_DIR when set, otherwise <root>/cache.
  std::string cache() const;
};

/// Progress lines (one per epoch / stage); silent when unset.
using LogFn = std::function<void(const std::string&)>;

/// Writes n_per_class clips per label plus manifest.csv; returns its path.
std::string cmd_synth(int64_t n_per_class, uint64_t seed, const std::string& out_dir);

/// Random-init tiny.en-shaped encoder in ggml format; returns its SHA-256.
std::string cmd_init_encoder(const std::string& out_path, uint64_t seed, bool f16 = false);

struct TrainResult {
  train::TrainHistory history;
  train::EpochStats best;
  std::string best_checkpoint;
};

/// Split, train, per-epoch checkpoints and history; best epoch copied to
/// checkpoints/best.ckpt (finetuned_best.ckpt for cmd_finetune).
TrainResult cmd_train(const RunConfig& cfg, const LogFn& log = {});
/// NotWhisperFrontend for cepstral-only runs; IncompatibleCheckpoint when
/// the checkpoint's architecture or front-end differs from the config.
TrainResult cmd_finetune(const RunConfig& cfg, const std::string& checkpoint, const LogFn& log = {});

struct EvalResult {
  eval::EvalReport report;
  std::string scores_path, report_path;
  size_t n_errors = 0;
};
/// Scores every record of `dataset` (default: the config's eval dataset),
/// writes scores/, reports/ and an error log for unscorable records.
EvalResult cmd_eval(const RunConfig& cfg, const std::string& checkpoint,
                    std::optional<data::DatasetKind> dataset = std::nullopt, const LogFn& log = {});

struct SaliencyResult {
  std::string heatmap, trace;
};
/// Feature and waveform saliency of one utterance, toward its true label.
SaliencyResult cmd_saliency(const RunConfig& cfg, const std::string& checkpoint, const std::string& utt_id,
                            std::optional<data::DatasetKind> dataset = std::nullopt, const LogFn& log = {});

// ---- shared helpers --------------------------------------------------------

std::vector<data::UtteranceRecord> load_records(const RunConfig& cfg, data::DatasetKind kind, bool for_eval);
/// Front-end of the config; Whisper encoders come from the configured
/// checkpoint, overridden by `encoder_state` when non-empty.
whisper::Frontend make_frontend(const RunConfig& cfg, const models::TensorMap& encoder_state = {});
/// IncompatibleCheckpoint unless arch, front-end and input size agree.
void check_compatible(const models::CheckpointMeta& meta, const RunConfig& cfg, int64_t feature_dim);

}  // namespace dfw::cli
