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

#include <memory>
#include <vector>

#include "dfw/audio/audio.h"
#include "dfw/features/cepstral.h"
#include "dfw/features/feature_map.h"
#include "dfw/whisper/encoder.h"

namespace dfw::whisper {

/// The five detector front-ends behind one interface. Whisper features are
/// always replicated along time so every variant yields N / 160 frames.
struct FrontendConfig {
  features::FrontendTag tag = features::FrontendTag::kMfcc;
  /// Used by the cepstral part; `kind` follows the tag.
  features::CepstralConfig cepstral;
};

/// Parts that never carry trainable state: log-mel and cepstral maps.
struct FrontendStage {
  nn::Tensor mel;       // (n_mels, T) or undefined
  nn::Tensor cepstral;  // (3C, T) or undefined
};

class Frontend {
 public:
  /// BadConfig when the tag needs an encoder and none is given.
  Frontend(FrontendConfig cfg, std::shared_ptr<Encoder> encoder = nullptr);

  features::FrontendTag tag() const { return cfg_.tag; }
  bool has_encoder() const { return encoder_ != nullptr; }
  const std::shared_ptr<Encoder>& encoder() const { return encoder_; }
  /// Feature rows delivered to the detector.
  int64_t feature_dim() const;

  /// Differentiable w.r.t. the waveform when grad mode is on.
  FrontendStage stage(const nn::Tensor& wave) const;
  /// Runs the encoder (if any) over a batch of stages: (B, rows, T).
  /// Differentiable w.r.t. encoder parameters when they require grad.
  nn::Tensor finish(const std::vector<FrontendStage>& batch) const;
  /// wave (N) -> (rows, T), fully differentiable.
  nn::Tensor forward(const nn::Tensor& wave) const;
  /// Gradient-free feature map of a preprocessed clip.
  features::FeatureMap extract(const audio::AudioClip& clip) const;

 private:
  FrontendConfig cfg_;
  std::shared_ptr<Encoder> encoder_;
  std::unique_ptr<features::CepstralFrontend> cepstral_;
  std::unique_ptr<LogMel> log_mel_;
};

}  // namespace dfw::whisper
