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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dfw/audio/audio.h"
#include "dfw/features/feature_map.h"
#include "dfw/nn/layers.h"
#include "dfw/nn/module.h"

namespace dfw::whisper {

/// Learnable parameters of the tiny.en encoder (the positional table is a
/// fixed buffer and not counted).
inline constexpr int64_t kTinyEnEncoderParams = 7632384;

struct EncoderConfig {
  int64_t n_mels = 80;
  int64_t n_ctx = 1500;
  int64_t width = 384;
  int64_t n_heads = 6;
  int64_t n_layers = 4;
  std::string variant = "tiny.en";

  void validate() const;
};

class AttentionBlock;

/// Convolutional stem + pre-activation residual attention blocks + final
/// layer norm. Accepts any even mel length up to 2 * n_ctx; the positional
/// table is truncated to the produced frame count.
class Encoder : public nn::Module {
 public:
  explicit Encoder(EncoderConfig cfg);
  ~Encoder() override;

  const EncoderConfig& config() const { return cfg_; }
  /// mel (B, n_mels, T) -> (B, width, T / 2), feature-first.
  nn::Tensor forward(const nn::Tensor& mel) const;

  bool trainable() const { return trainable_; }
  /// Toggles gradient participation of every parameter; values untouched.
  void set_trainable(bool flag);

  nn::Tensor positional_embedding;

 private:
  EncoderConfig cfg_;
  bool trainable_ = false;
  std::shared_ptr<nn::Conv1d> conv1_, conv2_;
  std::vector<std::shared_ptr<AttentionBlock>> blocks_;
  std::shared_ptr<nn::LayerNorm> ln_post_;
};

/// Sinusoidal table (length x channels): [sin | cos] with log-spaced scales.
nn::Tensor sinusoids(int64_t length, int64_t channels, double max_timescale = 10000.0);

/// Deterministic stand-in weights keyed by tensor name (LayerNorm gains
/// 1 + U(-0.1, 0.1), matrices U(+-1/sqrt(fan_in)), vectors U(-0.1, 0.1)).
std::shared_ptr<Encoder> init_random_encoder(const EncoderConfig& cfg, uint64_t seed);

struct LoadOptions {
  /// Lower-case hex SHA-256 of the file; empty skips the check.
  std::string sha256;
  /// Parameter count the checkpoint must reproduce; 0 skips the check.
  int64_t expected_params = kTinyEnEncoderParams;
};

/// Reads a ggml-format Whisper checkpoint (as published for whisper.cpp);
/// decoder tensors are ignored. The result starts frozen.
std::shared_ptr<Encoder> load_encoder(const std::string& path, const LoadOptions& opts = {});
/// Writes the encoder subset in the same format (f32, or f16 for matrices).
void write_encoder_checkpoint(const std::string& path, const Encoder& enc, bool f16 = false);
std::string sha256_file(const std::string& path);

// ---- front-end operations over (rows x frames) maps ----------------------

/// Slaney-normalised mel filterbank (n_mels x n_fft/2+1) on the Slaney scale.
nn::Tensor mel_filters(int64_t n_mels = 80, int64_t n_fft = 400, int sample_rate = 16000);

/// Differentiable Whisper log-mel: wave (N) -> (n_mels, N / 160).
class LogMel {
 public:
  explicit LogMel(int64_t n_mels = 80);
  nn::Tensor forward(const nn::Tensor& wave) const;

 private:
  std::vector<double> window_;
  nn::Tensor filters_;
};

features::FeatureMap log_mel(const audio::AudioClip& clip);
/// (width x T/2) map of one mel map.
features::FeatureMap encode(const Encoder& enc, const features::FeatureMap& mel);
/// Tiles the time axis twice; ShapeMismatch unless frames == expected_frames.
features::FeatureMap replicate_time(const features::FeatureMap& feat, int64_t expected_frames = 1500);
/// Whisper block first; FrameMismatch when frame counts differ.
features::FeatureMap concat_frontends(const features::FeatureMap& whisper_feat,
                                      const features::FeatureMap& cepstral_feat);
void set_trainable(Encoder& enc, bool flag);

}  // namespace dfw::whisper
