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
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "dfw/common/error.h"
#include "dfw/features/cepstral.h"
#include "dfw/nn/ops.h"
#include "dfw/whisper/encoder.h"
#include "dfw/whisper/frontend.h"
#include "gradcheck.h"
#include "test_util.h"

using namespace dfw;
using namespace dfw::whisper;
using dfw::testing::fixture;
using dfw::testing::read_json;
using dfw::testing::TempDir;
using features::FeatureMap;
using features::FrontendTag;
using nn::Tensor;

namespace {

constexpr uint64_t kSeed = 1234;

Tensor formula_mel(int64_t frames) {
  Tensor t({1, 80, frames});
  auto d = t.data();
  for (int64_t m = 0; m < 80; ++m)
    for (int64_t f = 0; f < frames; ++f)
      d[m * frames + f] = 0.6 * std::sin(0.37 * m + 0.013 * f) + 0.3 * std::cos(0.021 * m * f) - 0.4;
  return t;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// Output (1, W, T) -> row t of the (T, W) orientation.
std::vector<double> column(const Tensor& out, int64_t t) {
  const int64_t w = out.size(1), n = out.size(2);
  std::vector<double> v(static_cast<size_t>(w));
  for (int64_t c = 0; c < w; ++c) v[c] = out.data()[c * n + t];
  return v;
}

std::string random_checkpoint(const TempDir& dir, bool f16) {
  const std::string path = dir.file(f16 ? "enc16.bin" : "enc32.bin");
  write_encoder_checkpoint(path, *init_random_encoder({}, kSeed), f16);
  return path;
}

void check_rows(const Tensor& out, const nlohmann::json& rows, const std::vector<int64_t>& frames,
                double min_cos, double max_abs) {
  REQUIRE(rows.size() == frames.size());
  for (size_t i = 0; i < frames.size(); ++i) {
    const std::vector<double> ref = rows[i].get<std::vector<double>>();
    const std::vector<double> got = column(out, frames[i]);
    double worst = 0;
    for (size_t c = 0; c < ref.size(); ++c) worst = std::max(worst, std::abs(ref[c] - got[c]));
    CAPTURE(frames[i]);
    CHECK(cosine(ref, got) >= min_cos);
    CHECK(worst <= max_abs);
  }
}

}  // namespace

TEST_CASE("mel filters match the reference table") {
  std::ifstream in(fixture("whisper/mel_filters_80x201.f32"), std::ios::binary);
  std::vector<float> ref(80 * 201);
  in.read(reinterpret_cast<char*>(ref.data()), static_cast<std::streamsize>(ref.size() * 4));
  REQUIRE(in.gcount() == static_cast<std::streamsize>(ref.size() * 4));
  Tensor f = mel_filters(80);
  REQUIRE(f.shape() == nn::Shape{80, 201});
  double worst = 0;
  for (size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(f.data()[i] - ref[i]));
  CHECK(worst < 1e-7);
}

TEST_CASE("log-mel matches the reference implementation") {
  auto j = read_json(fixture("whisper/log_mel_golden.json"));
  audio::AudioClip clip;
  clip.rate = 16000;
  clip.channels = 1;
  clip.samples = j["clip"].get<std::vector<double>>();
  FeatureMap m = log_mel(clip);
  REQUIRE(m.rows() == j["shape"][0].get<int64_t>());
  REQUIRE(m.frames() == j["shape"][1].get<int64_t>());
  CHECK(m.tag == FrontendTag::kWhisper);
  const auto ref = j["log_mel"].get<std::vector<double>>();
  double worst = 0;
  for (size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(m.values.data()[i] - ref[i]));
  MESSAGE("max |log-mel - reference| = " << worst);
  CHECK(worst <= 1e-4);
}

TEST_CASE("log-mel of silence is the floor value and 30 s gives 3000 frames") {
  FeatureMap z = log_mel(dfw::testing::silence(30.0));
  CHECK(z.rows() == 80);
  CHECK(z.frames() == 3000);
  for (double v : z.values.data()) REQUIRE(v == doctest::Approx(-1.5));
}

TEST_CASE("log-mel is differentiable with respect to the waveform") {
  LogMel lm;
  Tensor w = dfw::testing::random_tensor({1600}, 3, -0.5, 0.5);
  auto f = [&](const Tensor& x) { return nn::sum(nn::square(lm.forward(x))); };
  CHECK(dfw::testing::gradcheck(f, w, 24, 1e-6) <= 1e-4);
}

TEST_CASE("sinusoids follow the closed form") {
  Tensor s = sinusoids(10, 8);
  const double inc = std::log(10000.0) / 3.0;
  for (int64_t t = 0; t < 10; ++t)
    for (int64_t i = 0; i < 4; ++i) {
      const double a = t * std::exp(-inc * i);
      CHECK(s.data()[t * 8 + i] == doctest::Approx(std::sin(a)).epsilon(1e-12));
      CHECK(s.data()[t * 8 + 4 + i] == doctest::Approx(std::cos(a)).epsilon(1e-12));
    }
}

TEST_CASE("tiny.en encoder has the published parameter count") {
  Encoder enc(EncoderConfig{});
  CHECK(enc.count_params() == kTinyEnEncoderParams);
  CHECK(enc.positional_embedding.shape() == nn::Shape{1500, 384});
}

TEST_CASE("encoder reproduces the reference forward pass from a written checkpoint") {
  auto j = read_json(fixture("whisper/encoder_golden.json"));
  REQUIRE(j["seed"].get<uint64_t>() == kSeed);
  TempDir dir("whisper");
  const auto frames = j["frames"].get<std::vector<int64_t>>();
  nn::NoGradGuard guard;
  for (bool f16 : {false, true}) {
    CAPTURE(f16);
    auto enc = load_encoder(random_checkpoint(dir, f16));
    CHECK(enc->count_params() == kTinyEnEncoderParams);
    CHECK(enc->config().variant == "tiny.en");
    Tensor out = enc->forward(formula_mel(3000));
    REQUIRE(out.shape() == nn::Shape{1, 384, 1500});
    if (!f16) {
      check_rows(out, j["full_rows"], frames, 0.9999, 2e-3);
      double mean = 0, abs_mean = 0;
      for (double v : out.data()) mean += v, abs_mean += std::abs(v);
      CHECK(mean / out.numel() == doctest::Approx(j["full_mean"].get<double>()).epsilon(1e-3));
      CHECK(abs_mean / out.numel() == doctest::Approx(j["full_abs_mean"].get<double>()).epsilon(1e-4));
    } else {
      check_rows(out, j["full_rows"], frames, 0.999, 1.0);
    }
  }
}

TEST_CASE("encoder accepts shorter mel inputs with a truncated positional table") {
  auto j = read_json(fixture("whisper/encoder_golden.json"));
  TempDir dir("whisper");
  auto enc = load_encoder(random_checkpoint(dir, false));
  nn::NoGradGuard guard;
  Tensor out = enc->forward(formula_mel(400));
  REQUIRE(out.shape() == nn::Shape{1, 384, 200});
  std::vector<int64_t> frames;
  for (int64_t t = 0; t < 200; t += 17) frames.push_back(t);
  check_rows(out, j["short_rows"], frames, 0.9999, 2e-3);
  CHECK_THROWS_AS(enc->forward(formula_mel(401)), Error);
  CHECK_THROWS_AS(enc->forward(formula_mel(3002)), Error);
  CHECK_THROWS_AS(enc->forward(Tensor({1, 64, 400})), Error);
}

TEST_CASE("loading is deterministic and checksum-verified") {
  TempDir dir("whisper");
  const std::string path = random_checkpoint(dir, false);
  auto a = load_encoder(path), b = load_encoder(path);
  auto sa = a->state(), sb = b->state();
  REQUIRE(sa.size() == sb.size());
  for (size_t i = 0; i < sa.size(); ++i) {
    REQUIRE(sa[i].first == sb[i].first);
    REQUIRE(std::equal(sa[i].second.data().begin(), sa[i].second.data().end(),
                       sb[i].second.data().begin()));
  }
  nn::NoGradGuard guard;
  Tensor x = formula_mel(200);
  Tensor ya = a->forward(x), yb = b->forward(x);
  CHECK(std::equal(ya.data().begin(), ya.data().end(), yb.data().begin()));

  LoadOptions ok;
  ok.sha256 = sha256_file(path);
  CHECK(ok.sha256.size() == 64);
  CHECK_NOTHROW(load_encoder(path, ok));
  LoadOptions bad = ok;
  bad.sha256[0] = bad.sha256[0] == '0' ? '1' : '0';
  try {
    load_encoder(path, bad);
    FAIL("expected ChecksumMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kChecksumMismatch);
  }
}

TEST_CASE("a checkpoint lacking a tensor is rejected by name") {
  TempDir dir("whisper");
  const std::string path = random_checkpoint(dir, false);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = "encoder.ln_post.bias";
  const size_t at = bytes.find(name);
  REQUIRE(at != std::string::npos);
  bytes[at + name.size() - 1] = '_';
  const std::string broken = dir.file("broken.bin");
  std::ofstream(broken, std::ios::binary) << bytes;
  try {
    load_encoder(broken);
    FAIL("expected MissingTensors");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingTensors);
    CHECK(std::string(e.what()).find("encoder.ln_post.bias") != std::string::npos);
  }
  std::ofstream(dir.file("junk.bin"), std::ios::binary) << "not a checkpoint";
  CHECK_THROWS_AS(load_encoder(dir.file("junk.bin")), Error);
  CHECK_THROWS_AS(load_encoder(dir.file("absent.bin")), Error);
}

TEST_CASE("frozen encoder passes gradients to its input only; unfreezing keeps values") {
  EncoderConfig small;
  small.n_ctx = 8;
  small.width = 16;
  small.n_heads = 2;
  small.n_layers = 1;
  small.n_mels = 6;
  small.variant = "custom";
  auto enc = init_random_encoder(small, 5);
  CHECK_FALSE(enc->trainable());
  for (auto& [name, p] : enc->named_parameters()) CHECK_FALSE(p.requires_grad());
  Tensor x = dfw::testing::random_tensor({1, 6, 16}, 9);
  x.set_requires_grad(true);
  nn::sum(nn::square(enc->forward(x))).backward();
  double gx = 0;
  for (double v : x.grad()) gx += std::abs(v);
  CHECK(gx > 0);
  for (auto& [name, p] : enc->named_parameters()) CHECK_FALSE(p.has_grad());

  std::vector<std::vector<double>> before;
  for (auto& [name, p] : enc->named_parameters()) before.emplace_back(p.data().begin(), p.data().end());
  set_trainable(*enc, true);
  CHECK(enc->trainable());
  size_t i = 0;
  for (auto& [name, p] : enc->named_parameters()) {
    CHECK(p.requires_grad());
    CHECK(std::equal(before[i].begin(), before[i].end(), p.data().begin()));
    ++i;
  }
  nn::sum(nn::square(enc->forward(x))).backward();
  for (auto& [name, p] : enc->named_parameters()) CHECK(p.has_grad());

  auto f = [&](const Tensor& in) { return nn::sum(nn::square(enc->forward(in))); };
  CHECK(dfw::testing::gradcheck(f, x, 16, 1e-4) <= 1e-4);
}

TEST_CASE("replication and concatenation of front-end maps") {
  FeatureMap w{dfw::testing::random_tensor({384, 1500}, 1), FrontendTag::kWhisper, "u"};
  FeatureMap r = replicate_time(w);
  REQUIRE(r.values.shape() == nn::Shape{384, 3000});
  for (int64_t c : {0, 100, 383})
    for (int64_t t : {0, 1, 1499, 1500, 1501, 2999})
      CHECK(r.values.data()[c * 3000 + t] == w.values.data()[c * 1500 + t % 1500]);
  CHECK_THROWS_AS(replicate_time(w, 1499), Error);

  FeatureMap cep{Tensor({384, 3000}, 0.5), FrontendTag::kLfcc, "u"};
  FeatureMap both = concat_frontends(r, cep);
  CHECK(both.values.shape() == nn::Shape{768, 3000});
  CHECK(both.tag == FrontendTag::kWhisperLfcc);
  CHECK(both.values.data()[0] == r.values.data()[0]);
  CHECK(both.values.data()[384 * 3000] == 0.5);
  try {
    concat_frontends(w, cep);
    FAIL("expected FrameMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kFrameMismatch);
  }
}

TEST_CASE("front-end object equals the composition of its stages") {
  EncoderConfig ec;
  ec.n_ctx = 100;
  ec.width = 32;
  ec.n_heads = 2;
  ec.n_layers = 1;
  ec.variant = "custom";
  auto enc = init_random_encoder(ec, 8);
  audio::AudioClip clip = dfw::testing::tone(0.5, 440.0, 0.3);
  for (FrontendTag tag : {FrontendTag::kWhisper, FrontendTag::kWhisperMfcc, FrontendTag::kWhisperLfcc}) {
    FrontendConfig fc;
    fc.tag = tag;
    fc.cepstral.n_coeffs = 20;
    fc.cepstral.n_filters = 40;
    Frontend fe(fc, enc);
    const FeatureMap got = fe.extract(clip);
    const FeatureMap mel = log_mel(clip);
    FeatureMap expect = replicate_time(encode(*enc, mel), mel.frames() / 2);
    if (tag != FrontendTag::kWhisper) {
      features::CepstralConfig cc = fc.cepstral;
      cc.kind = tag == FrontendTag::kWhisperMfcc ? features::CepstralKind::kMfcc : features::CepstralKind::kLfcc;
      expect = concat_frontends(expect, features::CepstralFrontend(cc).compute(clip));
    }
    CHECK(got.tag == tag);
    REQUIRE(got.values.shape() == expect.values.shape());
    CHECK(got.rows() == fe.feature_dim());
    double worst = 0.0;
    for (int64_t i = 0; i < got.values.numel(); ++i)
      worst = std::max(worst, std::abs(got.values.data()[i] - expect.values.data()[i]));
    CHECK(worst <= 1e-12);
  }
  FrontendConfig bare;
  bare.tag = FrontendTag::kWhisper;
  CHECK_THROWS_AS(Frontend(bare, nullptr), Error);
}

TEST_CASE("whisper+mfcc front-end is differentiable end to end") {
  EncoderConfig ec;
  ec.n_ctx = 100;
  ec.width = 16;
  ec.n_heads = 2;
  ec.n_layers = 1;
  ec.variant = "custom";
  FrontendConfig fc;
  fc.tag = FrontendTag::kWhisperMfcc;
  fc.cepstral.n_coeffs = 13;
  fc.cepstral.n_filters = 26;
  Frontend fe(fc, init_random_encoder(ec, 9));
  Tensor w = dfw::testing::random_tensor({1600}, 4, -0.5, 0.5);
  auto f = [&](const Tensor& x) { return nn::sum(nn::square(fe.forward(x))); };
  CHECK(dfw::testing::gradcheck(f, w, 20, 1e-6) <= 1e-3);
}
