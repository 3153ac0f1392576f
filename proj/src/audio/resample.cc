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
#include <numeric>

#include "dfw/audio/audio.h"
#include "dfw/common/error.h"

namespace dfw::audio {
namespace {

constexpr int kZeroCrossings = 16;  // half-width of the kernel, in cutoff periods
constexpr double kRolloff = 0.95;
constexpr double kKaiserBeta = 8.6;
constexpr int64_t kMaxTablePhases = 4096;

/// Kaiser-windowed sinc low-pass, tau in input samples.
class Kernel {
 public:
  Kernel(double cutoff) : cutoff_(cutoff), half_width_(kZeroCrossings / (2.0 * cutoff)) {
    norm_ = std::cyl_bessel_i(0.0, kKaiserBeta);
  }
  double half_width() const { return half_width_; }
  double operator()(double tau) const {
    const double r = tau / half_width_;
    if (std::abs(r) >= 1.0) return 0.0;
    const double w = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / norm_;
    const double x = 2.0 * cutoff_ * tau;
    const double sinc = x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
    return 2.0 * cutoff_ * sinc * w;
  }

 private:
  double cutoff_, half_width_, norm_;
};

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (clip.rate <= 0 || target_rate <= 0) fail(ErrorKind::kBadConfig, "resample: rates must be positive");
  if (clip.rate == target_rate) return clip;
  const int64_t g = std::gcd<int64_t>(clip.rate, target_rate);
  const int64_t up = target_rate / g, down = clip.rate / g;
  const double cutoff = 0.5 * kRolloff * std::min(1.0, static_cast<double>(up) / down);
  const Kernel kernel(cutoff);
  const int64_t reach = static_cast<int64_t>(std::ceil(kernel.half_width()));
  const int64_t taps = 2 * reach + 1;

  // Phase table: row p holds h(j + p / up) for j = -reach..reach.
  const bool use_table = up <= kMaxTablePhases;
  std::vector<double> table;
  if (use_table) {
    table.resize(static_cast<size_t>(up * taps));
    for (int64_t p = 0; p < up; ++p)
      for (int64_t j = -reach; j <= reach; ++j)
        table[p * taps + j + reach] = kernel(static_cast<double>(j) + static_cast<double>(p) / up);
  }

  const int64_t n_in = clip.frames();
  const int64_t n_out = (n_in * up + down / 2) / down;
  const int ch = clip.channels;
  AudioClip out = clip;
  out.rate = target_rate;
  out.samples.assign(static_cast<size_t>(n_out * ch), 0.0);
  std::vector<double> direct(static_cast<size_t>(taps));
  for (int64_t n = 0; n < n_out; ++n) {
    const int64_t i0 = (n * down) / up, phase = (n * down) % up;
    const double* h;
    if (use_table) {
      h = table.data() + phase * taps;
    } else {
      for (int64_t j = -reach; j <= reach; ++j)
        direct[j + reach] = kernel(static_cast<double>(j) + static_cast<double>(phase) / up);
      h = direct.data();
    }
    // tau = (i0 + phase/up) - k with k = i0 - j.
    for (int c = 0; c < ch; ++c) {
      double acc = 0.0;
      for (int64_t j = -reach; j <= reach; ++j) {
        const int64_t k = i0 - j;
        if (k < 0 || k >= n_in) continue;
        acc += h[j + reach] * clip.samples[k * ch + c];
      }
      out.samples[n * ch + c] = acc;
    }
  }
  return out;
}

}  // namespace dfw::audio
