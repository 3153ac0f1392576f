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

#include "dfw/whisper/encoder.h"

#include <cmath>

#include "dfw/common/error.h"
#include "dfw/nn/ops.h"

namespace dfw::whisper {

using nn::Tensor;

void EncoderConfig::validate() const {
  if (n_mels <= 0 || n_ctx <= 0 || width <= 0 || n_heads <= 0 || n_layers <= 0)
    fail(ErrorKind::kBadConfig, "encoder config: sizes must be positive");
  if (width % n_heads != 0) fail(ErrorKind::kBadConfig, "encoder width not divisible by heads");
  if (width % 2 != 0) fail(ErrorKind::kBadConfig, "encoder width must be even");
}

class MultiHeadAttention : public nn::Module {
 public:
  MultiHeadAttention(int64_t width, int64_t heads, Rng& rng) : heads_(heads) {
    query = register_module("query", std::make_shared<nn::Linear>(width, width, rng));
    key = register_module("key", std::make_shared<nn::Linear>(width, width, rng, false));
    value = register_module("value", std::make_shared<nn::Linear>(width, width, rng));
    out = register_module("out", std::make_shared<nn::Linear>(width, width, rng));
  }

  Tensor forward(const Tensor& x) const {
    const int64_t b = x.size(0), t = x.size(1), w = x.size(2), d = w / heads_;
    const double scale = std::pow(static_cast<double>(d), -0.25);
    auto split = [&](const Tensor& y) {
      return nn::reshape(nn::permute(nn::reshape(y, {b, t, heads_, d}), {0, 2, 1, 3}),
                         {b * heads_, t, d});
    };
    Tensor q = split(nn::scale(query->forward(x), scale));
    Tensor k = split(nn::scale(key->forward(x), scale));
    Tensor v = split(value->forward(x));
    Tensor att = nn::softmax_last(nn::bmm(q, k, true));
    Tensor o = nn::bmm(att, v);
    o = nn::reshape(nn::permute(nn::reshape(o, {b, heads_, t, d}), {0, 2, 1, 3}), {b, t, w});
    return out->forward(o);
  }

  std::shared_ptr<nn::Linear> query, key, value, out;

 private:
  int64_t heads_;
};

class Mlp : public nn::Module {
 public:
  Mlp(int64_t width, Rng& rng) {
    fc1 = register_module("0", std::make_shared<nn::Linear>(width, 4 * width, rng));
    fc2 = register_module("2", std::make_shared<nn::Linear>(4 * width, width, rng));
  }
  Tensor forward(const Tensor& x) const { return fc2->forward(nn::gelu(fc1->forward(x))); }
  std::shared_ptr<nn::Linear> fc1, fc2;
};

class AttentionBlock : public nn::Module {
 public:
  AttentionBlock(int64_t width, int64_t heads, Rng& rng) {
    attn = register_module("attn", std::make_shared<MultiHeadAttention>(width, heads, rng));
    attn_ln = register_module("attn_ln", std::make_shared<nn::LayerNorm>(width));
    mlp = register_module("mlp", std::make_shared<Mlp>(width, rng));
    mlp_ln = register_module("mlp_ln", std::make_shared<nn::LayerNorm>(width));
  }
  Tensor forward(const Tensor& x) const {
    Tensor h = nn::add(x, attn->forward(attn_ln->forward(x)));
    return nn::add(h, mlp->forward(mlp_ln->forward(h)));
  }
  std::shared_ptr<MultiHeadAttention> attn;
  std::shared_ptr<nn::LayerNorm> attn_ln, mlp_ln;
  std::shared_ptr<Mlp> mlp;
};

Tensor sinusoids(int64_t length, int64_t channels, double max_timescale) {
  const int64_t half = channels / 2;
  const double inc = std::log(max_timescale) / static_cast<double>(half - 1);
  Tensor t({length, channels});
  auto d = t.data();
  for (int64_t p = 0; p < length; ++p)
    for (int64_t i = 0; i < half; ++i) {
      const double a = static_cast<double>(p) * std::exp(-inc * static_cast<double>(i));
      d[p * channels + i] = std::sin(a);
      d[p * channels + half + i] = std::cos(a);
    }
  return t;
}

Encoder::Encoder(EncoderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(0);
  conv1_ = register_module("conv1", std::make_shared<nn::Conv1d>(cfg_.n_mels, cfg_.width, 3, 1, 1, rng));
  conv2_ = register_module("conv2", std::make_shared<nn::Conv1d>(cfg_.width, cfg_.width, 3, 2, 1, rng));
  positional_embedding = register_buffer("positional_embedding", sinusoids(cfg_.n_ctx, cfg_.width));
  auto list = register_module("blocks", std::make_shared<nn::ModuleList>());
  for (int64_t i = 0; i < cfg_.n_layers; ++i)
    blocks_.push_back(list->add(std::to_string(i),
                                std::make_shared<AttentionBlock>(cfg_.width, cfg_.n_heads, rng)));
  ln_post_ = register_module("ln_post", std::make_shared<nn::LayerNorm>(cfg_.width));
  set_trainable(false);
  eval();
}

Encoder::~Encoder() = default;

void Encoder::set_trainable(bool flag) {
  trainable_ = flag;
  set_requires_grad(flag);
}

Tensor Encoder::forward(const Tensor& mel) const {
  if (mel.dim() != 3 || mel.size(1) != cfg_.n_mels)
    fail(ErrorKind::kShapeMismatch, "encoder expects (B, " + std::to_string(cfg_.n_mels) +
                                        ", T), got " + nn::shape_str(mel.shape()));
  const int64_t t_in = mel.size(2);
  if (t_in % 2 != 0 || t_in / 2 > cfg_.n_ctx || t_in < 2)
    fail(ErrorKind::kShapeMismatch, "encoder needs an even mel length of at most " +
                                        std::to_string(2 * cfg_.n_ctx) + ", got " +
                                        std::to_string(t_in));
  const int64_t b = mel.size(0), t = t_in / 2, w = cfg_.width;
  Tensor x = nn::gelu(conv1_->forward(mel));
  x = nn::gelu(conv2_->forward(x));                    // (B, W, T)
  x = nn::reshape(nn::permute(x, {0, 2, 1}), {b, t * w});
  Tensor pos = nn::reshape(nn::slice(positional_embedding, 0, 0, t), {t * w});
  x = nn::reshape(nn::add_bias(x, pos, 1), {b, t, w});
  for (const auto& block : blocks_) x = block->forward(x);
  x = ln_post_->forward(x);
  return nn::permute(x, {0, 2, 1});
}

std::shared_ptr<Encoder> init_random_encoder(const EncoderConfig& cfg, uint64_t seed) {
  auto enc = std::make_shared<Encoder>(cfg);
  nn::NoGradGuard guard;
  for (auto& [name, t] : enc->named_parameters()) {
    const std::string full = "encoder." + name;
    std::vector<double> v;
    const bool gain = t.dim() == 1 && name.size() > 7 && name.compare(name.size() - 7, 7, ".weight") == 0;
    if (gain) {
      v = nn::hashed_uniform(seed, full, t.numel(), -0.1, 0.1);
      for (double& x : v) x += 1.0;
    } else if (t.dim() >= 2) {
      // He-uniform on the GELU stem so clip content is not swamped by the
      // unit-amplitude positional table; default fan-in bound elsewhere.
      const bool stem = name.rfind("conv", 0) == 0;
      const double bound = (stem ? std::sqrt(6.0) : 1.0) / std::sqrt(static_cast<double>(t.numel() / t.size(0)));
      v = nn::hashed_uniform(seed, full, t.numel(), -bound, bound);
    } else {
      v = nn::hashed_uniform(seed, full, t.numel(), -0.1, 0.1);
    }
    std::copy(v.begin(), v.end(), t.data().begin());
  }
  return enc;
}

void set_trainable(Encoder& enc, bool flag) { enc.set_trainable(flag); }

}  // namespace dfw::whisper
