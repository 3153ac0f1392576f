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

#include "dfw/features/cepstral.h"

#include <cmath>

#include "dfw/common/error.h"
#include "dfw/nn/ops.h"

namespace dfw::features {

using nn::Tensor;

void CepstralConfig::validate() const {
  if (window <= 0 || hop <= 0 || n_fft <= 0 || n_filters <= 0 || n_coeffs <= 0 || sample_rate <= 0)
    fail(ErrorKind::kBadConfig, "cepstral config: sizes must be positive");
  if (window > n_fft) fail(ErrorKind::kBadConfig, "cepstral config: window > n_fft");
  if (hop > window) fail(ErrorKind::kBadConfig, "cepstral config: hop > window");
  if (n_coeffs > n_filters) fail(ErrorKind::kBadConfig, "cepstral config: n_coeffs > n_filters");
  if (identity_filterbank && n_filters != bins())
    fail(ErrorKind::kBadConfig, "identity filterbank needs n_filters == n_fft / 2 + 1");
  if (!(log_eps > 0)) fail(ErrorKind::kBadConfig, "cepstral config: log_eps must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> padded_hann(int64_t window, int64_t n_fft) {
  std::vector<double> w(static_cast<size_t>(n_fft), 0.0);
  const int64_t offset = (n_fft - window) / 2;
  for (int64_t k = 0; k < window; ++k)
    w[offset + k] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(k) / window);
  return w;
}

int64_t frame_count(int64_t n_samples, int64_t hop) { return n_samples / hop; }

std::vector<double> filter_edges(const CepstralConfig& cfg) {
  const double f_max = cfg.sample_rate / 2.0;
  std::vector<double> edges(static_cast<size_t>(cfg.n_filters + 2));
  const double top = cfg.kind == CepstralKind::kMfcc ? hz_to_mel(f_max) : f_max;
  for (size_t i = 0; i < edges.size(); ++i) {
    const double v = top * static_cast<double>(i) / static_cast<double>(edges.size() - 1);
    edges[i] = cfg.kind == CepstralKind::kMfcc ? mel_to_hz(v) : v;
  }
  return edges;
}

Tensor filterbank_matrix(const CepstralConfig& cfg) {
  cfg.validate();
  const int64_t bins = cfg.bins();
  Tensor w({cfg.n_filters, bins}, 0.0);
  auto d = w.data();
  if (cfg.identity_filterbank) {
    for (int64_t m = 0; m < bins; ++m) d[m * bins + m] = 1.0;
    return w;
  }
  const auto e = filter_edges(cfg);
  for (int64_t m = 0; m < cfg.n_filters; ++m) {
    const double lo = e[m], mid = e[m + 1], hi = e[m + 2];
    for (int64_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / static_cast<double>(cfg.n_fft);
      const double rise = (f - lo) / (mid - lo), fall = (hi - f) / (hi - mid);
      d[m * bins + k] = std::max(0.0, std::min(rise, fall));
    }
  }
  return w;
}

Tensor dct_matrix(int64_t n_coeffs, int64_t n) {
  Tensor m({n_coeffs, n});
  auto d = m.data();
  for (int64_t k = 0; k < n_coeffs; ++k) {
    const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (int64_t i = 0; i < n; ++i)
      d[k * n + i] = s * std::cos(M_PI * static_cast<double>(k) * (2.0 * i + 1.0) / (2.0 * n));
  }
  return m;
}

CepstralFrontend::CepstralFrontend(CepstralConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  window_ = padded_hann(cfg_.window, cfg_.n_fft);
  fbank_ = filterbank_matrix(cfg_);
  dct_ = dct_matrix(cfg_.n_coeffs, cfg_.n_filters);
}

Tensor CepstralFrontend::power_frames(const Tensor& wave) const {
  const int64_t n = wave.numel();
  const int64_t half = cfg_.n_fft / 2;
  if (n <= half) fail(ErrorKind::kTooShort, "clip shorter than half an FFT frame");
  const int64_t frames = frame_count(n, cfg_.hop);
  Tensor padded = nn::reflect_pad(nn::reshape(wave, {1, n}), half, half);
  Tensor framed = nn::frame(padded, cfg_.n_fft, cfg_.hop, frames);
  return nn::reshape(nn::power_spectrum(framed, window_), {frames, cfg_.bins()});
}

Tensor CepstralFrontend::forward(const Tensor& wave) const {
  Tensor power = power_frames(wave);
  if (power.size(0) < 5) fail(ErrorKind::kTooShort, "deltas need at least 5 frames");
  Tensor fb = nn::linear(power, fbank_, Tensor());
  Tensor cep = nn::linear(nn::log_eps(fb, cfg_.log_eps), dct_, Tensor());
  Tensor stat = nn::permute(cep, {1, 0});
  Tensor d1 = nn::deltas(stat);
  Tensor d2 = nn::deltas(d1);
  return nn::concat({stat, d1, d2}, 0);
}

FeatureMap CepstralFrontend::compute(const audio::AudioClip& clip) const {
  if (clip.channels != 1 || clip.rate != cfg_.sample_rate)
    fail(ErrorKind::kBadConfig, "cepstral front-end needs mono audio at the configured rate");
  nn::NoGradGuard guard;
  return {forward(wave_tensor(clip)), cfg_.tag(), clip.utt_id};
}

Tensor wave_tensor(const audio::AudioClip& clip) {
  return Tensor({clip.frames()}, std::vector<double>(clip.samples.begin(), clip.samples.end()));
}

FeatureMap power_spectrogram(const audio::AudioClip& clip, const CepstralConfig& cfg) {
  CepstralFrontend fe(cfg);
  nn::NoGradGuard guard;
  return {nn::permute(fe.power_frames(wave_tensor(clip)), {1, 0}), cfg.tag(), clip.utt_id};
}

FeatureMap apply_filterbank(const FeatureMap& spec, const CepstralConfig& cfg) {
  if (spec.rows() != cfg.bins()) fail(ErrorKind::kShapeMismatch, "spectrogram rows != n_fft/2+1");
  nn::NoGradGuard guard;
  return {nn::matmul(filterbank_matrix(cfg), spec.values), spec.tag, spec.utt_id};
}

FeatureMap cepstral_transform(const FeatureMap& fbank, const CepstralConfig& cfg) {
  cfg.validate();
  nn::NoGradGuard guard;
  Tensor logs = nn::log_eps(fbank.values, cfg.log_eps);
  return {nn::matmul(dct_matrix(cfg.n_coeffs, fbank.rows()), logs), fbank.tag, fbank.utt_id};
}

FeatureMap add_deltas(const FeatureMap& feat) {
  if (feat.frames() < 5) fail(ErrorKind::kTooShort, "deltas need at least 5 frames");
  nn::NoGradGuard guard;
  Tensor d1 = nn::deltas(feat.values);
  return {nn::concat({feat.values, d1, nn::deltas(d1)}, 0), feat.tag, feat.utt_id};
}

FeatureMap compute_frontend(const audio::AudioClip& clip, const CepstralConfig& cfg) {
  return CepstralFrontend(cfg).compute(clip);
}

}  // namespace dfw::features
