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
#include <vector>

#include "dfw/audio/audio.h"
#include "dfw/features/feature_map.h"
#include "dfw/nn/tensor.h"

namespace dfw::features {

enum class CepstralKind { kMfcc, kLfcc };

struct CepstralConfig {
  CepstralKind kind = CepstralKind::kMfcc;
  int64_t n_coeffs = 128;
  int64_t window = 400;
  int64_t hop = 160;
  int64_t n_fft = 512;
  int64_t n_filters = 128;
  int sample_rate = 16000;
  double log_eps = 1e-10;
  /// Degenerate mode: the filterbank is the identity over the n_fft/2+1 bins
  /// (requires n_filters == n_fft/2 + 1). Used to show that MFCC and LFCC
  /// differ only in filter placement.
  bool identity_filterbank = false;

  void validate() const;
  int64_t bins() const { return n_fft / 2 + 1; }
  FrontendTag tag() const { return kind == CepstralKind::kMfcc ? FrontendTag::kMfcc : FrontendTag::kLfcc; }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);
/// Periodic Hann of length `window`, zero-padded to n_fft and centred.
std::vector<double> padded_hann(int64_t window, int64_t n_fft);
/// Frames emitted for n samples: center padding gives n / hop + 1, the last is
/// dropped.
int64_t frame_count(int64_t n_samples, int64_t hop);
/// Filter edge frequencies (n_filters + 2 points, Hz).
std::vector<double> filter_edges(const CepstralConfig& cfg);
/// (n_filters, bins) triangular weights.
nn::Tensor filterbank_matrix(const CepstralConfig& cfg);
/// (n_coeffs, n) orthonormal DCT-II rows.
nn::Tensor dct_matrix(int64_t n_coeffs, int64_t n);

/// Stateless pipeline with cached window/filterbank/DCT. Tensor methods are
/// differentiable and work time-major internally; FeatureMap results are
/// (rows x frames).
class CepstralFrontend {
 public:
  explicit CepstralFrontend(CepstralConfig cfg);
  const CepstralConfig& config() const { return cfg_; }

  /// wave (N) -> (frames, bins)
  nn::Tensor power_frames(const nn::Tensor& wave) const;
  /// wave (N) -> (3 * n_coeffs, frames)
  nn::Tensor forward(const nn::Tensor& wave) const;
  FeatureMap compute(const audio::AudioClip& clip) const;

  int64_t feature_dim() const { return 3 * cfg_.n_coeffs; }

 private:
  CepstralConfig cfg_;
  std::vector<double> window_;
  nn::Tensor fbank_, dct_;
};

// Step-wise API over (rows x frames) maps.
FeatureMap power_spectrogram(const audio::AudioClip& clip, const CepstralConfig& cfg);
FeatureMap apply_filterbank(const FeatureMap& spec, const CepstralConfig& cfg);
FeatureMap cepstral_transform(const FeatureMap& fbank, const CepstralConfig& cfg);
/// [static; delta; double-delta]. TooShort when fewer than 5 frames.
FeatureMap add_deltas(const FeatureMap& feat);
FeatureMap compute_frontend(const audio::AudioClip& clip, const CepstralConfig& cfg);

/// Wraps clip samples as a 1-D tensor.
nn::Tensor wave_tensor(const audio::AudioClip& clip);

}  // namespace dfw::features
