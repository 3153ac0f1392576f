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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dfw/common/error.h"
#include "dfw/common/rng.h"
#include "dfw/data/dataset.h"
#include "dfw/features/cepstral.h"
#include "dfw/nn/ops.h"

namespace dfw::data {

namespace {

struct Segment {
  int64_t start, length;
};

double formant_gain(double f, const double* centres) {
  double g = 0.05;
  for (int i = 0; i < 3; ++i) {
    const double d = (f - centres[i]) / (150.0 + 60.0 * i);
    g += std::exp(-0.5 * d * d) / (1.0 + i);
  }
  return g;
}

// Voiced syllables separated by digital silence; a long pause now and then.
std::vector<double> voiced(Rng& rng, int64_t n, int rate, std::vector<Segment>* segments) {
  std::vector<double> y(static_cast<size_t>(n), 0.0);
  const double f0 = rng.uniform(100.0, 220.0);
  const double vib_rate = rng.uniform(4.0, 6.5), vib_depth = rng.uniform(0.01, 0.03);
  const double drift = rng.uniform(-0.15, 0.15);
  int64_t pos = static_cast<int64_t>(rng.uniform(0.0, 0.05) * rate);
  double phase0 = 0.0;
  while (pos < n) {
    const int64_t len = std::min<int64_t>(n - pos, static_cast<int64_t>(rng.uniform(0.15, 0.4) * rate));
    double centres[3] = {rng.uniform(450.0, 850.0), rng.uniform(1000.0, 1900.0),
                         rng.uniform(2200.0, 3100.0)};
    const int harmonics = static_cast<int>(std::min(40.0, 7000.0 / (f0 * 1.1)));
    std::vector<double> amp(harmonics), ph(harmonics);
    for (int k = 0; k < harmonics; ++k) {
      amp[k] = formant_gain(f0 * (k + 1), centres) / std::sqrt(k + 1.0);
      ph[k] = rng.uniform(0.0, 2 * M_PI);
    }
    double phase = phase0;
    for (int64_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(pos + i) / rate;
      const double f = f0 * (1.0 + drift * t / 4.0) * (1.0 + vib_depth * std::sin(2 * M_PI * vib_rate * t));
      phase += 2 * M_PI * f / rate;
      const double env = 0.5 - 0.5 * std::cos(2 * M_PI * (i + 0.5) / len);
      double s = 0.0;
      for (int k = 0; k < harmonics; ++k) s += amp[k] * std::sin((k + 1) * phase + ph[k]);
      y[pos + i] = env * s;
    }
    phase0 = phase;
    segments->push_back({pos, len});
    pos += len;
    const double gap = rng.bernoulli(0.2) ? rng.uniform(0.25, 0.45) : rng.uniform(0.02, 0.1);
    pos += static_cast<int64_t>(gap * rate);
  }
  return y;
}

void add_noise(Rng& rng, std::vector<double>& y, const std::vector<Segment>& segs, double level,
               bool highpass) {
  double prev = 0.0;
  for (const auto& s : segs)
    for (int64_t i = 0; i < s.length; ++i) {
      const double w = rng.normal();
      const double v = highpass ? (w - prev) * 0.5 : w;
      prev = w;
      const double env = 0.5 - 0.5 * std::cos(2 * M_PI * (i + 0.5) / s.length);
      y[s.start + i] += level * env * v;
    }
}

void notch(std::vector<double>& y, double freq, double q, int rate) {
  const double w0 = 2 * M_PI * freq / rate, alpha = std::sin(w0) / (2 * q), c = std::cos(w0);
  const double a0 = 1 + alpha;
  const double b0 = 1 / a0, b1 = -2 * c / a0, b2 = 1 / a0, a1 = -2 * c / a0, a2 = (1 - alpha) / a0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (double& v : y) {
    const double out = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = v;
    y2 = y1;
    y1 = out;
    v = out;
  }
}

double rms(const std::vector<double>& y) {
  double s = 0.0;
  int64_t n = 0;
  for (double v : y)
    if (v != 0.0) s += v * v, ++n;
  return n ? std::sqrt(s / n) : 0.0;
}

}  // namespace

audio::AudioClip synth_clip(Label label, uint64_t seed, const SynthOptions& opts) {
  Rng rng(seed);
  const int rate = opts.rate;
  const auto n = static_cast<int64_t>(rng.uniform(opts.min_seconds, opts.max_seconds) * rate);
  std::vector<Segment> segs;
  std::vector<double> y = voiced(rng, n, rate, &segs);
  const double base = rms(y);
  // Breath noise, well below the harmonics.
  add_noise(rng, y, segs, base * std::pow(10.0, rng.uniform(-42.0, -34.0) / 20.0), false);
  if (label == Label::kSpoof) {
    add_noise(rng, y, segs, base * std::pow(10.0, rng.uniform(-20.0, -14.0) / 20.0), true);
    notch(y, rng.uniform(1500.0, 2600.0), 2.0, rate);
    const int64_t frame = rate / 50;
    const int glitches = 3 + static_cast<int>(rng.below(4));
    for (int g = 0; g < glitches && n > 4 * frame; ++g) {
      const int64_t at = frame + static_cast<int64_t>(rng.below(static_cast<uint64_t>(n - 3 * frame)));
      std::copy(y.begin() + (at - frame), y.begin() + at, y.begin() + at);
    }
  }
  double peak = 0.0;
  for (double v : y) peak = std::max(peak, std::abs(v));
  const double gain = peak > 0 ? rng.uniform(0.3, 0.6) / peak : 0.0;
  audio::AudioClip clip;
  clip.rate = rate;
  clip.samples.resize(y.size());
  for (size_t i = 0; i < y.size(); ++i) clip.samples[i] = y[i] * gain;
  clip.label = label;
  return clip;
}

DatasetManifest make_synthetic_corpus(int64_t n_per_class, uint64_t seed, const std::string& out_dir,
                                      const SynthOptions& opts) {
  if (n_per_class < 1) fail(ErrorKind::kBadConfig, "n_per_class must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::kIoError, "cannot create " + out_dir + ": " + ec.message());
  std::vector<UtteranceRecord> records;
  for (Label label : {Label::kBonafide, Label::kSpoof})
    for (int64_t i = 0; i < n_per_class; ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "syn%llu_%s_%04lld", static_cast<unsigned long long>(seed),
                    label == Label::kBonafide ? "bona" : "spoof", static_cast<long long>(i));
      UtteranceRecord r;
      r.utt_id = name;
      r.label = label;
      r.dataset = DatasetKind::kSynthetic;
      r.path = r.utt_id + ".wav";
      audio::AudioClip clip = synth_clip(label, derive_seed(seed, r.utt_id), opts);
      clip.utt_id = r.utt_id;
      audio::write_wav((std::filesystem::path(out_dir) / r.path).string(), clip);
      records.push_back(std::move(r));
    }
  const std::string manifest = (std::filesystem::path(out_dir) / "manifest.csv").string();
  write_manifest(manifest, records);
  return read_manifest(manifest);
}

double mean_spectral_flatness(const audio::AudioClip& clip) {
  constexpr int64_t kLen = 512, kHop = 256;
  const int64_t n = clip.frames();
  if (n < kLen) return 0.0;
  nn::NoGradGuard guard;
  const int64_t frames = 1 + (n - kLen) / kHop;
  nn::Tensor wave({1, n}, std::vector<double>(clip.samples.begin(), clip.samples.begin() + n));
  nn::Tensor p = nn::power_spectrum(nn::frame(wave, kLen, kHop, frames), features::padded_hann(kLen, kLen));
  const int64_t bins = kLen / 2 + 1;
  double total = 0.0;
  int64_t used = 0;
  for (int64_t f = 0; f < frames; ++f) {
    const double* row = p.data().data() + f * bins;
    double arith = 0.0, logs = 0.0;
    for (int64_t k = 1; k < bins; ++k) arith += row[k];
    if (arith <= 0.0) continue;  // digital silence
    for (int64_t k = 1; k < bins; ++k) logs += std::log(row[k] + 1e-20);
    arith /= static_cast<double>(bins - 1);
    total += std::exp(logs / static_cast<double>(bins - 1)) / arith;
    ++used;
  }
  return used ? total / static_cast<double>(used) : 0.0;
}

double stump_accuracy(const std::vector<double>& values, const std::vector<Label>& labels) {
  std::vector<std::pair<double, Label>> v;
  for (size_t i = 0; i < values.size(); ++i) v.emplace_back(values[i], labels[i]);
  std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
  const auto n = static_cast<int64_t>(v.size());
  int64_t spoof_total = 0;
  for (auto& e : v) spoof_total += e.second == Label::kSpoof;
  // Predict spoof above the cut; try every cut between distinct values.
  int64_t bona_below = 0, spoof_below = 0;
  double best = 0.0;
  for (int64_t i = 0; i <= n; ++i) {
    if (i == n || i == 0 || v[i].first != v[i - 1].first) {
      const int64_t correct = bona_below + (spoof_total - spoof_below);
      best = std::max({best, correct / static_cast<double>(n), (n - correct) / static_cast<double>(n)});
    }
    if (i < n) (v[i].second == Label::kSpoof ? spoof_below : bona_below)++;
  }
  return best;
}

}  // namespace dfw::data
