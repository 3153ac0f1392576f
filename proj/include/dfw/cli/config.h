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
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "dfw/audio/audio.h"
#include "dfw/data/dataset.h"
#include "dfw/features/cepstral.h"
#include "dfw/models/detector.h"
#include "dfw/train/trainer.h"
#include "dfw/whisper/encoder.h"

namespace dfw::cli {

struct DatasetPaths {
  std::string asvspoof_keys, asvspoof_audio_dir, asvspoof_ext = ".flac";
  std::string inthewild_meta, inthewild_audio_dir;
  /// Manifests written by `dfw synth`: training pool and held-out set.
  std::string synthetic_manifest, synthetic_eval_manifest;
};

struct EncoderSource {
  /// ggml checkpoint; required by Whisper front-ends.
  std::string checkpoint;
  std::string sha256;
  int64_t expected_params = whisper::kTinyEnEncoderParams;
};

/// Everything a run depends on. The top-level seed drives the split, model
/// initialisation, shuffling and dropout.
struct RunConfig {
  models::Arch model = models::Arch::kMesoNet;
  features::FrontendTag frontend = features::FrontendTag::kMfcc;
  data::DatasetKind train_dataset = data::DatasetKind::kSynthetic;
  data::DatasetKind eval_dataset = data::DatasetKind::kSynthetic;
  DatasetPaths datasets;
  int64_t n_train = 100000, n_val = 25000;
  audio::PreprocessConfig preprocess;
  /// Cepstral settings; `kind` follows the front-end tag.
  features::CepstralConfig cepstral;
  EncoderSource encoder;
  train::TrainConfig train;
  std::optional<train::FinetuneConfig> finetune;
  int64_t meso_pool = 1024;
  double lcnn_dropout = 0.7, meso_dropout = 0.5;
  int64_t eval_batch_size = 8;
  std::string output_dir;
  uint64_t seed = 0;

  /// ConfigInvalid on bad values; with `check_paths`, also when a path the
  /// run needs does not exist.
  void validate(bool check_paths = true) const;
  models::ModelSpec model_spec(int64_t input_dim) const;
  data::SplitSpec split_spec() const { return {n_train, n_val, seed}; }
  train::TrainConfig train_config() const;
};

/// Unknown keys and wrong types raise ConfigInvalid. Relative paths are
/// resolved against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::string& path);
/// Pretty-printed JSON, keys sorted; the form stored as config.snapshot.
std::string dump_config(const RunConfig& cfg);
/// SHA-256 (hex) of the compact canonical JSON.
std::string config_hash(const RunConfig& cfg);

}  // namespace dfw::cli
