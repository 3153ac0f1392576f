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

#include "doctest.h"
#include "dfw/audio/audio.h"
#include "dfw/common/error.h"
#include "dfw/common/rng.h"
#include "test_util.h"

using namespace dfw;
using namespace dfw::audio;
using dfw::testing::fixture;
using dfw::testing::join;
using dfw::testing::silence;
using dfw::testing::TempDir;
using dfw::testing::tone;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::kIoError;
}

// Peak frequency by direct DFT over whole-Hz bins (1 s of signal).
int dft_peak_hz(const std::vector<double>& x, int rate) {
  const int n = rate;  // exactly one second
  int best = 0;
  double best_mag = -1;
  for (int k = 1; k < n / 2; ++k) {
    double re = 0, im = 0;
    const double w = 2 * M_PI * k / n;
    for (int i = 0; i < n; ++i) {
      re += x[i] * std::cos(w * i);
      im -= x[i] * std::sin(w * i);
    }
    const double mag = re * re + im * im;
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("load: zero wav gives zeros at native rate") {
  TempDir dir("audio");
  AudioClip z = silence(1.0);
  write_wav(dir.file("z.wav"), z);
  AudioClip c = load_audio(dir.file("z.wav"));
  CHECK(c.rate == 16000);
  CHECK(c.channels == 1);
  REQUIRE(c.samples.size() == 16000);
  CHECK(std::all_of(c.samples.begin(), c.samples.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("load: 48 kHz stereo flac keeps both channels") {
  AudioClip c = load_audio(fixture("audio/silence_48k_stereo.flac"));
  CHECK(c.rate == 48000);
  CHECK(c.channels == 2);
  CHECK(c.samples.size() == 96000);
}

TEST_CASE("load: int16 full-scale negative maps to -1 and flac equals wav") {
  const auto expected = dfw::testing::read_json(fixture("audio/expected.json"));
  AudioClip w = load_audio(fixture("audio/ramp_16k_stereo.wav"));
  AudioClip f = load_audio(fixture("audio/ramp_16k_stereo.flac"));
  REQUIRE(w.frames() == expected["ramp_len"].get<int64_t>());
  CHECK(w.samples[0] == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(*std::min_element(w.samples.begin(), w.samples.end()) >= -1.0);
  CHECK(w.samples == f.samples);
  for (double v : w.samples) CHECK(std::abs(v) <= 1.0 + 1e-6);
}

TEST_CASE("load: 24-bit, unsigned 8-bit and float containers") {
  const auto expected = dfw::testing::read_json(fixture("audio/expected.json"));
  const auto head = expected["sine_head"].get<std::vector<double>>();
  struct Case {
    const char* name;
    double tol;
  } cases[] = {{"audio/sine_pcm24.wav", 1e-6},
               {"audio/sine_pcm24.flac", 1e-6},
               {"audio/sine_u8.wav", 1.0 / 64},
               {"audio/sine_float.wav", 1e-7}};
  for (const auto& cs : cases) {
    CAPTURE(cs.name);
    AudioClip c = load_audio(fixture(cs.name));
    CHECK(c.rate == 22050);
    REQUIRE(c.frames() == expected["sine_len"].get<int64_t>());
    for (size_t i = 0; i < head.size(); ++i) CHECK(std::abs(c.samples[i] - head[i]) <= cs.tol);
  }
}

TEST_CASE("load: errors") {
  CHECK(kind_of([] { load_audio(fixture("audio/corrupt.wav")); }) == ErrorKind::kUnreadableFile);
  CHECK(kind_of([] { load_audio("/nonexistent/x.wav"); }) == ErrorKind::kUnreadableFile);
  TempDir dir("audio");
  AudioClip empty;
  empty.rate = 16000;
  write_wav(dir.file("e.wav"), empty);
  CHECK(kind_of([&] { load_audio(dir.file("e.wav")); }) == ErrorKind::kEmptyAudio);
}

TEST_CASE("to_mono") {
  AudioClip m = tone(0.01, 440);
  CHECK(to_mono(m).samples == m.samples);
  AudioClip s;
  s.rate = 16000;
  s.channels = 2;
  for (int i = 0; i < 100; ++i) {
    s.samples.push_back(0.01 * i);
    s.samples.push_back(-0.01 * i);
  }
  AudioClip z = to_mono(s);
  CHECK(z.channels == 1);
  CHECK(std::all_of(z.samples.begin(), z.samples.end(), [](double v) { return v == 0.0; }));
  AudioClip k;
  k.rate = 16000;
  k.channels = 2;
  for (int i = 0; i < 10; ++i) {
    k.samples.push_back(0.2);
    k.samples.push_back(0.6);
  }
  for (double v : to_mono(k).samples) CHECK(v == doctest::Approx(0.4));
}

TEST_CASE("resample: identity, length and spectral peak") {
  AudioClip a = tone(0.5, 300);
  CHECK(resample(a, 16000).samples == a.samples);
  AudioClip b = silence(10.0, 48000);
  CHECK(std::abs(resample(b, 16000).frames() - 160000) <= 1);
  AudioClip s = tone(1.0, 1000, 0.5, 44100);
  AudioClip r = resample(s, 16000);
  CHECK(std::abs(r.frames() - 16000) <= 1);
  r.samples.resize(16000, 0.0);
  CHECK(std::abs(dft_peak_hz(r.samples, 16000) - 1000) <= 1);
  // Upsampling keeps the tone too.
  AudioClip u = resample(tone(1.0, 1000, 0.5, 8000), 16000);
  u.samples.resize(16000, 0.0);
  CHECK(std::abs(dft_peak_hz(u.samples, 16000) - 1000) <= 1);
}

TEST_CASE("resample: content above the new Nyquist is attenuated") {
  AudioClip s = tone(1.0, 11000, 0.5, 44100);
  AudioClip r = resample(s, 16000);
  double e = 0;
  for (int64_t i = 2000; i < r.frames() - 2000; ++i) e += r.samples[i] * r.samples[i];
  const double rms = std::sqrt(e / static_cast<double>(r.frames() - 4000));
  CHECK(20 * std::log10(rms / (0.5 / std::sqrt(2.0))) < -40.0);
}

TEST_CASE("trim_silences: constructed signals") {
  SilencePolicy p;
  AudioClip plain = tone(1.0, 440);
  CHECK(trim_silences(plain, p).samples == plain.samples);
  AudioClip gap = join({tone(1.0, 440), silence(0.5), tone(1.0, 440)});
  CHECK(std::abs(trim_silences(gap, p).frames() - 32000) <= 640);
  AudioClip short_gap = join({tone(1.0, 440), silence(0.1), tone(1.0, 440)});
  CHECK(std::abs(trim_silences(short_gap, p).frames() - 33600) <= 640);
  // Exactly 0.2 s is not "longer than" 0.2 s.
  AudioClip edge = join({tone(1.0, 440), silence(0.2), tone(1.0, 440)});
  CHECK(trim_silences(edge, p).frames() == edge.frames());
  CHECK(kind_of([&] { trim_silences(silence(1.0), p); }) == ErrorKind::kAllSilent);
}

TEST_CASE("trim_silences: order preserved and never longer") {
  Rng rng(11);
  SilencePolicy p;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<AudioClip> parts;
    for (int k = 0; k < 6; ++k) {
      const double d = rng.uniform(0.01, 0.6);
      parts.push_back(rng.bernoulli(0.5) ? silence(d) : tone(d, rng.uniform(100, 4000)));
    }
    parts.push_back(tone(0.1, 500));
    AudioClip x = join(parts);
    AudioClip y = trim_silences(x, p);
    CHECK(y.frames() <= x.frames());
    // Output is a subsequence of the input.
    size_t j = 0;
    for (size_t i = 0; i < x.samples.size() && j < y.samples.size(); ++i)
      if (x.samples[i] == y.samples[j]) ++j;
    CHECK(j == y.samples.size());
  }
}

TEST_CASE("fit_duration") {
  AudioClip full = tone(30.0, 440);
  CHECK(fit_duration(full).samples == full.samples);
  AudioClip third = tone(10.0, 440);
  AudioClip t = fit_duration(third);
  REQUIRE(t.frames() == 480000);
  for (int64_t i = 0; i < 480000; ++i) REQUIRE(t.samples[i] == third.samples[i % 160000]);
  AudioClip odd = tone(12.5, 440);
  AudioClip o = fit_duration(odd);
  REQUIRE(o.frames() == 480000);
  CHECK(std::equal(o.samples.begin() + 400000, o.samples.end(), odd.samples.begin()));
}

TEST_CASE("preprocess: contract, tiling and truncation") {
  TempDir dir("pre");
  AudioClip three = tone(3.0, 440, 0.5, 44100);
  write_wav(dir.file("three.wav"), three, true);
  AudioClip p = preprocess(dir.file("three.wav"));
  REQUIRE(p.frames() == kClipSamples);
  CHECK(p.rate == kSampleRate);
  for (int64_t i = 48000; i < kClipSamples; ++i) REQUIRE(p.samples[i] == p.samples[i % 48000]);

  AudioClip long_clip = tone(45.0, 440);
  long_clip.samples[0] = 0.25;
  AudioClip q = preprocess_clip(long_clip);
  REQUIRE(q.frames() == kClipSamples);
  for (int64_t i = 0; i < kClipSamples; i += 997)
    REQUIRE(q.samples[i] == static_cast<double>(static_cast<float>(long_clip.samples[i])));

  AudioClip quiet = silence(2.0);
  CHECK(preprocess_clip(quiet).frames() == kClipSamples);  // AllSilent falls back
}

TEST_CASE("preprocess is idempotent on its own output") {
  Rng rng(5);
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<AudioClip> parts;
    const int pieces = 2 + static_cast<int>(rng.below(6));
    for (int k = 0; k < pieces; ++k) {
      const double d = rng.uniform(0.005, 1.2);
      if (rng.bernoulli(0.4)) {
        AudioClip s = silence(d);
        for (double& v : s.samples) v = rng.uniform(-1e-4, 1e-4);
        parts.push_back(s);
      } else {
        parts.push_back(tone(d, rng.uniform(80, 6000), rng.uniform(0.001, 0.9)));
      }
    }
    AudioClip x = join(parts);
    if (rng.bernoulli(0.3)) x = resample(x, 22050);
    AudioClip once = preprocess_clip(x);
    AudioClip twice = preprocess_clip(once);
    CAPTURE(trial);
    CHECK(once.frames() == kClipSamples);
    CHECK(twice.samples == once.samples);
  }
}

TEST_CASE("clip cache round-trips exactly") {
  TempDir dir("cache");
  PreprocessConfig cfg;
  AudioClip x = preprocess_clip(tone(2.0, 300));
  x.utt_id = "spk/utt1";
  ClipCache cache(dir.path());
  CHECK_FALSE(cache.load("spk/utt1", cfg).has_value());
  cache.store(x, cfg);
  auto back = cache.load("spk/utt1", cfg);
  REQUIRE(back.has_value());
  CHECK(back->samples == x.samples);
  PreprocessConfig other = cfg;
  other.silence.energy_floor_db = -50;
  CHECK(other.hash() != cfg.hash());
  CHECK_FALSE(cache.load("spk/utt1", other).has_value());
}
