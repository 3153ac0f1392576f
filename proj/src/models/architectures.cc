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

#include <array>

#include "dfw/common/error.h"
#include "dfw/models/detector.h"
#include "dfw/nn/layers.h"
#include "dfw/nn/ops.h"

namespace dfw::models {

using nn::Tensor;

namespace {

nn::Conv2dGeometry same(int64_t pad, int64_t dilation = 1) {
  return {1, 1, pad, pad, dilation, dilation};
}

// ---- LCNN ---------------------------------------------------------------
// Max-feature-map CNN over (time x feature) images followed by two residual
// bi-LSTM layers whose width is 32 * (input_dim / 16).

class Lcnn : public Detector {
 public:
  Lcnn(const ModelSpec& spec, Rng& rng) : Detector(spec) {
    auto transform = register_module("transform", std::make_shared<nn::ModuleList>());
    auto conv = [&](int idx, int64_t in, int64_t out, int64_t k) {
      return transform->add(std::to_string(idx),
                            std::make_shared<nn::Conv2d>(in, out, k, rng, same(k / 2)));
    };
    auto bn = [&](int idx, int64_t c) {
      return transform->add(std::to_string(idx), std::make_shared<nn::BatchNorm>(c, false));
    };
    // Sequential indices of the reference layout (pool/MFM/dropout slots
    // carry no tensors).
    c0_ = conv(0, 1, 64, 5);
    c3_ = conv(3, 32, 64, 1);
    b5_ = bn(5, 32);
    c6_ = conv(6, 32, 96, 3);
    b9_ = bn(9, 48);
    c10_ = conv(10, 48, 96, 1);
    b12_ = bn(12, 48);
    c13_ = conv(13, 48, 128, 3);
    c16_ = conv(16, 64, 128, 1);
    b18_ = bn(18, 64);
    c19_ = conv(19, 64, 64, 3);
    b21_ = bn(21, 32);
    c22_ = conv(22, 32, 64, 1);
    b24_ = bn(24, 32);
    c25_ = conv(25, 32, 64, 3);
    width_ = (spec.input_dim / 16) * 32;
    auto lstm = register_module("lstm", std::make_shared<nn::ModuleList>());
    for (int i = 0; i < 2; ++i) {
      auto wrap = lstm->add(std::to_string(i), std::make_shared<nn::ModuleList>());
      rnn_[i] = wrap->add("l_blstm", std::make_shared<nn::BiRnn>(nn::RnnKind::kLstm, width_,
                                                                 width_ / 2, 1, rng));
    }
    output_ = register_module("output", std::make_shared<nn::Linear>(width_, 1, rng));
  }

  int64_t min_frames() const override { return 16; }

 protected:
  Tensor forward_impl(const Tensor& x) override {
    const int64_t b = x.size(0), f = x.size(1), t = x.size(2);
    using nn::max_feature_map;
    using nn::max_pool2d;
    Tensor h = nn::permute(nn::reshape(x, {b, 1, f, t}), {0, 1, 3, 2});
    h = max_pool2d(max_feature_map(c0_->forward(h)), 2, 2);
    h = b5_->forward(max_feature_map(c3_->forward(h)));
    h = b9_->forward(max_pool2d(max_feature_map(c6_->forward(h)), 2, 2));
    h = b12_->forward(max_feature_map(c10_->forward(h)));
    h = max_pool2d(max_feature_map(c13_->forward(h)), 2, 2);
    h = b18_->forward(max_feature_map(c16_->forward(h)));
    h = b21_->forward(max_feature_map(c19_->forward(h)));
    h = b24_->forward(max_feature_map(c22_->forward(h)));
    h = max_pool2d(max_feature_map(c25_->forward(h)), 2, 2);
    h = nn::dropout(h, spec().lcnn_dropout, dropout_rng_, training());
    // (B, 32, T', F') -> (B, T', 32 * F')
    const int64_t steps = h.size(2);
    Tensor seq = nn::reshape(nn::permute(h, {0, 2, 1, 3}), {b, steps, width_});
    Tensor l = rnn_[1]->forward(rnn_[0]->forward(seq));
    Tensor pooled = nn::mean_axis(nn::add(l, seq), 1);
    return nn::reshape(output_->forward(pooled), {b});
  }

 private:
  int64_t width_;
  std::shared_ptr<nn::Conv2d> c0_, c3_, c6_, c10_, c13_, c16_, c19_, c22_, c25_;
  std::shared_ptr<nn::BatchNorm> b5_, b9_, b12_, b18_, b21_, b24_;
  std::shared_ptr<nn::BiRnn> rnn_[2];
  std::shared_ptr<nn::Linear> output_;
};

// ---- SpecRNet ------------------------------------------------------------

class ResidualBlock : public nn::Module {
 public:
  ResidualBlock(int64_t in, int64_t out, bool first, Rng& rng) : first_(first) {
    if (!first) bn1_ = register_module("bn1", std::make_shared<nn::BatchNorm>(in));
    conv1_ = register_module("conv1", std::make_shared<nn::Conv2d>(in, out, 3, rng, same(1)));
    bn2_ = register_module("bn2", std::make_shared<nn::BatchNorm>(out));
    conv2_ = register_module("conv2", std::make_shared<nn::Conv2d>(out, out, 3, rng, same(1)));
    if (in != out)
      down_ = register_module("conv_downsample", std::make_shared<nn::Conv2d>(in, out, 1, rng));
  }

  Tensor forward(const Tensor& x) {
    Tensor out = first_ ? x : nn::leaky_relu(bn1_->forward(x), 0.3);
    out = conv1_->forward(out);
    out = conv2_->forward(nn::leaky_relu(bn2_->forward(out), 0.3));
    Tensor identity = down_ ? down_->forward(x) : x;
    return nn::max_pool2d(nn::add(out, identity), 2, 2);
  }

 private:
  bool first_;
  std::shared_ptr<nn::BatchNorm> bn1_, bn2_;
  std::shared_ptr<nn::Conv2d> conv1_, conv2_, down_;
};

class SpecRNet : public Detector {
 public:
  SpecRNet(const ModelSpec& spec, Rng& rng) : Detector(spec) {
    first_bn_ = register_module("first_bn", std::make_shared<nn::BatchNorm>(1));
    blocks_[0] = register_module("block0", std::make_shared<ResidualBlock>(1, 20, true, rng));
    blocks_[1] = register_module("block2", std::make_shared<ResidualBlock>(20, 64, false, rng));
    blocks_[2] = register_module("block4", std::make_shared<ResidualBlock>(64, 64, false, rng));
    att_[0] = register_module("fc_attention0", std::make_shared<nn::Linear>(20, 20, rng));
    att_[1] = register_module("fc_attention2", std::make_shared<nn::Linear>(64, 64, rng));
    att_[2] = register_module("fc_attention4", std::make_shared<nn::Linear>(64, 64, rng));
    bn_gru_ = register_module("bn_before_gru", std::make_shared<nn::BatchNorm>(64));
    gru_ = register_module("gru", std::make_shared<nn::BiRnn>(nn::RnnKind::kGru, 64, 64, 2, rng));
    fc1_ = register_module("fc1_gru", std::make_shared<nn::Linear>(128, 128, rng));
    fc2_ = register_module("fc2_gru", std::make_shared<nn::Linear>(128, 1, rng));
  }

  int64_t min_frames() const override { return 64; }

 protected:
  Tensor forward_impl(const Tensor& x) override {
    const int64_t b = x.size(0);
    Tensor h = nn::selu(first_bn_->forward(nn::reshape(x, {b, 1, x.size(1), x.size(2)})));
    for (int i = 0; i < 3; ++i) {
      h = blocks_[i]->forward(h);
      // Channel attention: sigmoid(fc(mean_hw)) used as both scale and shift.
      const int64_t c = h.size(1);
      Tensor avg = nn::mean_axis(nn::reshape(h, {b, c, h.size(2) * h.size(3)}), 2);
      Tensor y = nn::expand_channels(nn::sigmoid(att_[i]->forward(avg)), h.shape());
      h = nn::max_pool2d(nn::add(nn::mul(h, y), y), 2, 2);
    }
    h = nn::selu(bn_gru_->forward(h));
    // Adaptive pooling collapses the feature axis so any height is accepted.
    h = nn::adaptive_avg_pool2d(h, 1, -1);
    const int64_t steps = h.size(3);
    Tensor seq = nn::permute(nn::reshape(h, {b, 64, steps}), {0, 2, 1});
    Tensor out = gru_->forward(seq);
    Tensor last = nn::reshape(nn::slice(out, 1, steps - 1, 1), {b, 128});
    return nn::reshape(fc2_->forward(fc1_->forward(last)), {b});
  }

 private:
  std::shared_ptr<nn::BatchNorm> first_bn_, bn_gru_;
  std::shared_ptr<ResidualBlock> blocks_[3];
  std::shared_ptr<nn::Linear> att_[3], fc1_, fc2_;
  std::shared_ptr<nn::BiRnn> gru_;
};

// ---- MesoInception-4 ------------------------------------------------------

class MesoNet : public Detector {
 public:
  MesoNet(const ModelSpec& spec, Rng& rng) : Detector(spec) {
    build_inception("Incption1_", 1, {1, 4, 4, 2}, rng, inc1_);
    build_inception("Incption2_", 11, {2, 4, 4, 2}, rng, inc2_);
    conv1_ = register_module("conv1", std::make_shared<nn::Conv2d>(12, 16, 5, rng, same(2), false));
    bn1_ = register_module("bn1", std::make_shared<nn::BatchNorm>(16));
    conv2_ = register_module("conv2", std::make_shared<nn::Conv2d>(16, 16, 5, rng, same(2), false));
    fc1_ = register_module("fc1", std::make_shared<nn::Linear>(spec.meso_pool, 16, rng));
    fc2_ = register_module("fc2", std::make_shared<nn::Linear>(16, 1, rng));
  }

  int64_t min_frames() const override { return 32; }

 protected:
  Tensor forward_impl(const Tensor& x) override {
    const int64_t b = x.size(0);
    Tensor h = nn::reshape(x, {b, 1, x.size(1), x.size(2)});
    h = inception(h, inc1_);
    h = inception(h, inc2_);
    h = nn::max_pool2d(bn1_->forward(nn::relu(conv1_->forward(h))), 2, 2);
    h = nn::max_pool2d(bn1_->forward(nn::relu(conv2_->forward(h))), 4, 4);
    h = nn::reshape(h, {b, h.numel() / b});
    h = nn::adaptive_avg_pool1d(h, spec().meso_pool);
    h = nn::dropout(h, spec().meso_dropout, dropout_rng_, training());
    h = nn::leaky_relu(fc1_->forward(h), 0.1);
    h = nn::dropout(h, spec().meso_dropout, dropout_rng_, training());
    return nn::reshape(fc2_->forward(h), {b});
  }

 private:
  struct Inception {
    std::shared_ptr<nn::Conv2d> c1, c21, c22, c31, c32, c41, c42;
    std::shared_ptr<nn::BatchNorm> bn;
  };

  void build_inception(const std::string& p, int64_t in, std::array<int64_t, 4> w, Rng& rng,
                       Inception& m) {
    auto conv = [&](const std::string& n, int64_t i, int64_t o, int64_t k, int64_t pad,
                    int64_t dil) {
      return register_module(p + n, std::make_shared<nn::Conv2d>(i, o, k, rng, same(pad, dil), false));
    };
    m.c1 = conv("conv1", in, w[0], 1, 0, 1);
    m.c21 = conv("conv2_1", in, w[1], 1, 0, 1);
    m.c22 = conv("conv2_2", w[1], w[1], 3, 1, 1);
    m.c31 = conv("conv3_1", in, w[2], 1, 0, 1);
    m.c32 = conv("conv3_2", w[2], w[2], 3, 2, 2);
    m.c41 = conv("conv4_1", in, w[3], 1, 0, 1);
    m.c42 = conv("conv4_2", w[3], w[3], 3, 3, 3);
    m.bn = register_module(p + "bn", std::make_shared<nn::BatchNorm>(w[0] + w[1] + w[2] + w[3]));
  }

  Tensor inception(const Tensor& x, Inception& m) {
    Tensor y = nn::concat({m.c1->forward(x), m.c22->forward(m.c21->forward(x)),
                           m.c32->forward(m.c31->forward(x)), m.c42->forward(m.c41->forward(x))},
                          1);
    return nn::max_pool2d(m.bn->forward(y), 2, 2);
  }

  Inception inc1_, inc2_;
  std::shared_ptr<nn::Conv2d> conv1_, conv2_;
  std::shared_ptr<nn::BatchNorm> bn1_;
  std::shared_ptr<nn::Linear> fc1_, fc2_;
};

}  // namespace

std::shared_ptr<Detector> build_model(const ModelSpec& spec, uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, "model-init"));
  std::shared_ptr<Detector> m;
  switch (spec.arch) {
    case Arch::kLcnn: m = std::make_shared<Lcnn>(spec, rng); break;
    case Arch::kSpecRNet: m = std::make_shared<SpecRNet>(spec, rng); break;
    case Arch::kMesoNet: m = std::make_shared<MesoNet>(spec, rng); break;
  }
  m->seed_dropout(derive_seed(seed, "dropout"));
  if (spec.expected_params && count_params(*m) != *spec.expected_params)
    fail(ErrorKind::kBadConfig, std::string(arch_name(spec.arch)) + " has " +
                                    std::to_string(count_params(*m)) + " parameters, expected " +
                                    std::to_string(*spec.expected_params));
  return m;
}

}  // namespace dfw::models
