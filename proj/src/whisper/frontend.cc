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

#include <cmath>

#include "dfw/common/error.h"
#include "dfw/features/cepstral.h"
#include "dfw/nn/ops.h"
#include "dfw/whisper/encoder.h"

namespace dfw::whisper {

using features::FeatureMap;
using features::FrontendTag;
using nn::Tensor;

namespace {

constexpr int64_t kNfft = 400;
constexpr int64_t kHop = 160;

// Slaney scale: linear below 1 kHz, logarithmic above.
constexpr double kSpacing = 200.0 / 3.0;
constexpr double kBreakHz = 1000.0;
constexpr double kBreakMel = kBreakHz / kSpacing;
const double kLogStep = std::log(6.4) / 27.0;

double slaney_mel(double hz) {
  return hz >= kBreakHz ? kBreakMel + std::log(hz / kBreakHz) / kLogStep : hz / kSpacing;
}

double slaney_hz(double mel) {
  return mel >= kBreakMel ? kBreakHz * std::exp(kLogStep * (mel - kBreakMel)) : kSpacing * mel;
}

}  // namespace

Tensor mel_filters(int64_t n_mels, int64_t n_fft, int sample_rate) {
  if (n_mels <= 0 || n_fft <= 0 || sample_rate <= 0)
    fail(ErrorKind::kBadConfig, "mel filters: sizes must be positive");
  const int64_t bins = n_fft / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  std::vector<double> pts(static_cast<size_t>(n_mels + 2));
  const double top = slaney_mel(nyquist);
  for (size_t i = 0; i < pts.size(); ++i)
    pts[i] = slaney_hz(top * static_cast<double>(i) / static_cast<double>(pts.size() - 1));
  Tensor w({n_mels, bins}, 0.0);
  auto d = w.data();
  for (int64_t m = 0; m < n_mels; ++m) {
    const double lo = pts[m], mid = pts[m + 1], hi = pts[m + 2];
    const double norm = 2.0 / (hi - lo);
    for (int64_t k = 0; k < bins; ++k) {
      const double f = nyquist * static_cast<double>(k) / static_cast<double>(bins - 1);
      const double v = std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid));
      d[m * bins + k] = std::max(0.0, v) * norm;
    }
  }
  return w;
}

LogMel::LogMel(int64_t n_mels) : window_(features::padded_hann(kNfft, kNfft)), filters_(mel_filters(n_mels)) {}

Tensor LogMel::forward(const Tensor& wave) const {
  const int64_t n = wave.numel();
  const int64_t frames = n / kHop;
  if (n <= kNfft / 2 || frames < 1) fail(ErrorKind::kTooShort, "clip too short for a log-mel frame");
  Tensor padded = nn::reflect_pad(nn::reshape(wave, {1, n}), kNfft / 2, kNfft / 2);
  Tensor power = nn::reshape(nn::power_spectrum(nn::frame(padded, kNfft, kHop, frames), window_),
                             {frames, kNfft / 2 + 1});
  Tensor logs = nn::log10_floor(nn::linear(power, filters_, Tensor()), 1e-10);
  Tensor scaled = nn::scale(nn::add_scalar(nn::clamp_below_global_max(logs, 8.0), 4.0), 0.25);
  return nn::permute(scaled, {1, 0});
}

FeatureMap log_mel(const audio::AudioClip& clip) {
  if (clip.channels != 1 || clip.rate != audio::kSampleRate)
    fail(ErrorKind::kBadConfig, "log-mel needs mono 16 kHz audio");
  nn::NoGradGuard guard;
  return {LogMel().forward(features::wave_tensor(clip)), FrontendTag::kWhisper, clip.utt_id};
}

FeatureMap encode(const Encoder& enc, const FeatureMap& mel) {
  const int64_t rows = mel.rows(), frames = mel.frames();
  Tensor out = enc.forward(nn::reshape(mel.values, {1, rows, frames}));
  return {nn::reshape(out, {out.size(1), out.size(2)}), FrontendTag::kWhisper, mel.utt_id};
}

FeatureMap replicate_time(const FeatureMap& feat, int64_t expected_frames) {
  if (feat.frames() != expected_frames)
    fail(ErrorKind::kShapeMismatch, "replicate_time: " + std::to_string(feat.frames()) +
                                        " frames, expected " + std::to_string(expected_frames));
  return {nn::tile_axis(feat.values, 1, 2 * feat.frames()), feat.tag, feat.utt_id};
}

FeatureMap concat_frontends(const FeatureMap& whisper_feat, const FeatureMap& cepstral_feat) {
  if (whisper_feat.frames() != cepstral_feat.frames())
    fail(ErrorKind::kFrameMismatch, "front-end frame counts differ: " +
                                        std::to_string(whisper_feat.frames()) + " vs " +
                                        std::to_string(cepstral_feat.frames()));
  FrontendTag tag = cepstral_feat.tag == FrontendTag::kLfcc ? FrontendTag::kWhisperLfcc
                                                            : FrontendTag::kWhisperMfcc;
  return {nn::concat({whisper_feat.values, cepstral_feat.values}, 0), tag, whisper_feat.utt_id};
}

}  // namespace dfw::whisper
