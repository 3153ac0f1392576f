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

#include "doctest.h"
#include "dfw/common/error.h"
#include "dfw/common/rng.h"
#include "dfw/features/cepstral.h"
#include "dfw/nn/ops.h"
#include "gradcheck.h"
#include "test_util.h"

using namespace dfw;
using namespace dfw::features;
using dfw::testing::silence;
using dfw::testing::tone;

namespace {

CepstralConfig lfcc_cfg() {
  CepstralConfig c;
  c.kind = CepstralKind::kLfcc;
  return c;
}

FeatureMap grid(int64_t rows, int64_t frames, const std::function<double(int64_t, int64_t)>& f) {
  FeatureMap m;
  m.values = nn::Tensor({rows, frames});
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t t = 0; t < frames; ++t) m.values.data()[r * frames + t] = f(r, t);
  return m;
}

double at(const FeatureMap& m, int64_t r, int64_t t) { return m.values.data()[r * m.frames() + t]; }

}  // namespace

TEST_CASE("power spectrogram: zero input, tone peak, shape") {
  CepstralConfig cfg;
  FeatureMap z = power_spectrogram(silence(0.5), cfg);
  for (double v : z.values.data()) CHECK(v == 0.0);
  FeatureMap s = power_spectrogram(tone(0.5, 1000.0, 1.0), cfg);
  CHECK(s.rows() == 257);
  for (int64_t t = 2; t < s.frames() - 2; ++t) {
    int64_t best = 0;
    for (int64_t k = 0; k < s.rows(); ++k)
      if (at(s, k, t) > at(s, best, t)) best = k;
    REQUIRE(best == 32);
  }
  FeatureMap full = power_spectrogram(silence(30.0), cfg);
  CHECK(full.rows() == 257);
  CHECK(full.frames() == 3000);
}

TEST_CASE("power spectrogram matches a direct DFT of one windowed frame") {
  CepstralConfig cfg;
  audio::AudioClip x = tone(0.2, 700.0, 0.3);
  Rng rng(1);
  for (double& v : x.samples) v += rng.uniform(-0.05, 0.05);
  FeatureMap s = power_spectrogram(x, cfg);
  const int64_t t = 7, start = t * 160 - 256;  // centred frame, fully inside the clip
  const auto w = padded_hann(400, 512);
  for (int64_t k : {0, 5, 32, 100, 256}) {
    double re = 0, im = 0;
    for (int64_t n = 0; n < 512; ++n) {
      const double v = x.samples[start + n] * w[n];
      re += v * std::cos(2 * M_PI * k * n / 512.0);
      im -= v * std::sin(2 * M_PI * k * n / 512.0);
    }
    CHECK(at(s, k, t) == doctest::Approx(re * re + im * im).epsilon(1e-10));
  }
}

TEST_CASE("filterbank: zero, linear spacing and triangle areas") {
  for (auto cfg : {CepstralConfig{}, lfcc_cfg()}) {
    FeatureMap zero = grid(257, 6, [](int64_t, int64_t) { return 0.0; });
    FeatureMap out = apply_filterbank(zero, cfg);
    for (double v : out.values.data()) CHECK(v == 0.0);
  }
  const auto e = filter_edges(lfcc_cfg());
  for (size_t i = 2; i < e.size(); ++i)
    CHECK(std::abs((e[i] - e[i - 1]) - (e[1] - e[0])) < 1e-6);

  // Oracle: area of each triangle sampled on the bin grid, built from the two
  // straight segments separately.
  for (auto cfg : {CepstralConfig{}, lfcc_cfg()}) {
    const auto edges = filter_edges(cfg);
    FeatureMap ones = grid(257, 3, [](int64_t, int64_t) { return 1.0; });
    FeatureMap out = apply_filterbank(ones, cfg);
    for (int64_t m = 0; m < cfg.n_filters; ++m) {
      const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
      double area = 0.0;
      for (int64_t k = 0; k <= 256; ++k) {
        const double f = k * 16000.0 / 512.0;
        if (f > lo && f <= mid) area += (f - lo) / (mid - lo);
        else if (f > mid && f < hi) area += (hi - f) / (hi - mid);
      }
      REQUIRE(at(out, m, 1) == doctest::Approx(area).epsilon(1e-9));
      CHECK(at(out, m, 1) >= 0.0);
    }
  }
}

TEST_CASE("cepstral transform: DCT oracles") {
  CepstralConfig cfg;
  FeatureMap c = grid(128, 4, [](int64_t, int64_t) { return 3.5; });
  FeatureMap cc = cepstral_transform(c, cfg);
  for (int64_t k = 1; k < 128; ++k) CHECK(std::abs(at(cc, k, 2)) < 1e-6);
  CHECK(at(cc, 0, 2) == doctest::Approx(std::log(3.5 + 1e-10) * std::sqrt(128.0)));

  FeatureMap z = grid(128, 3, [](int64_t, int64_t) { return 0.0; });
  FeatureMap zc = cepstral_transform(z, cfg);
  for (int64_t t = 0; t < 3; ++t) {
    CHECK(at(zc, 0, t) == doctest::Approx(std::log(1e-10) * std::sqrt(128.0)));
    for (int64_t k = 1; k < 128; ++k) CHECK(std::abs(at(zc, k, t)) < 1e-6);
  }

  CepstralConfig toy;
  toy.n_filters = 8;
  toy.n_coeffs = 8;
  Rng rng(3);
  FeatureMap r = grid(8, 5, [&](int64_t, int64_t) { return rng.uniform(0.01, 4.0); });
  FeatureMap rc = cepstral_transform(r, toy);
  for (int64_t t = 0; t < 5; ++t)
    for (int64_t k = 0; k < 8; ++k) {
      double acc = 0.0;
      for (int64_t n = 0; n < 8; ++n)
        acc += std::log(at(r, n, t) + 1e-10) * std::cos(M_PI / 8.0 * (n + 0.5) * k);
      acc *= k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      CHECK(std::abs(at(rc, k, t) - acc) <= 1e-8);
    }
}

TEST_CASE("deltas: constant, ramp, shape, too short") {
  FeatureMap c = grid(4, 20, [](int64_t r, int64_t) { return r * 1.5; });
  FeatureMap cd = add_deltas(c);
  CHECK(cd.rows() == 12);
  for (int64_t r = 4; r < 12; ++r)
    for (int64_t t = 0; t < 20; ++t) CHECK(at(cd, r, t) == 0.0);
  FeatureMap ramp = grid(1, 30, [](int64_t, int64_t t) { return static_cast<double>(t); });
  FeatureMap rd = add_deltas(ramp);
  for (int64_t t = 2; t < 28; ++t) CHECK(at(rd, 1, t) == 1.0);
  FeatureMap big = grid(128, 3000, [](int64_t r, int64_t t) { return std::sin(0.01 * r * t); });
  FeatureMap bd = add_deltas(big);
  CHECK(bd.rows() == 384);
  CHECK(bd.frames() == 3000);
  FeatureMap tiny = grid(2, 4, [](int64_t, int64_t) { return 1.0; });
  try {
    add_deltas(tiny);
    FAIL("expected TooShort");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTooShort);
  }
}

TEST_CASE("compute_frontend: 30 s shape, determinism, stationarity") {
  audio::AudioClip x = tone(30.0, 440.0, 0.2);
  Rng rng(2);
  for (double& v : x.samples) v += rng.uniform(-0.01, 0.01);
  for (auto cfg : {CepstralConfig{}, lfcc_cfg()}) {
    FeatureMap a = compute_frontend(x, cfg);
    FeatureMap b = compute_frontend(x, cfg);
    CHECK(a.rows() == 384);
    CHECK(a.frames() == 3000);
    CHECK(a.tag == cfg.tag());
    CHECK(std::equal(a.values.data().begin(), a.values.data().end(), b.values.data().begin()));
    for (double v : a.values.data()) REQUIRE(std::isfinite(v));
  }
  FeatureMap z = compute_frontend(silence(1.0), CepstralConfig{});
  for (int64_t r = 0; r < 384; ++r)
    for (int64_t t = 1; t < z.frames(); ++t) REQUIRE(at(z, r, t) == at(z, r, 0));
  for (int64_t r = 128; r < 384; ++r) CHECK(at(z, r, 0) == 0.0);
}

TEST_CASE("MFCC and LFCC coincide with an identity filterbank") {
  audio::AudioClip x = tone(0.3, 440.0, 0.2);
  CepstralConfig m;
  m.n_filters = 257;
  m.identity_filterbank = true;
  CepstralConfig l = m;
  l.kind = CepstralKind::kLfcc;
  FeatureMap a = compute_frontend(x, m), b = compute_frontend(x, l);
  CHECK(std::equal(a.values.data().begin(), a.values.data().end(), b.values.data().begin()));
  // With real filterbanks they differ.
  FeatureMap c = compute_frontend(x, CepstralConfig{}), d = compute_frontend(x, lfcc_cfg());
  CHECK_FALSE(std::equal(c.values.data().begin(), c.values.data().end(), d.values.data().begin()));
}

TEST_CASE("cepstral chain is differentiable (finite differences on 0.1 s)") {
  Rng rng(9);
  audio::AudioClip x = tone(0.1, 523.0, 0.3);
  for (double& v : x.samples) v += rng.uniform(-0.05, 0.05);
  for (auto cfg : {CepstralConfig{}, lfcc_cfg()}) {
    CepstralFrontend fe(cfg);
    nn::Tensor probe_w = dfw::testing::random_tensor({384, 10}, 4);
    auto f = [&](const nn::Tensor& w) { return nn::sum(nn::mul(fe.forward(w), probe_w)); };
    CHECK(dfw::testing::gradcheck(f, wave_tensor(x), 24, 1e-6) <= 1e-3);
  }
}

TEST_CASE("invalid configs raise BadConfig") {
  CepstralConfig a;
  a.window = 600;
  CepstralConfig b;
  b.hop = 500;
  CepstralConfig c;
  c.n_coeffs = 200;
  for (const auto& cfg : {a, b, c}) {
    try {
      CepstralFrontend fe(cfg);
      FAIL("expected BadConfig");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kBadConfig);
    }
  }
}
