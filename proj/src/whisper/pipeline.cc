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

#include "dfw/common/error.h"
#include "dfw/nn/ops.h"
#include "dfw/whisper/frontend.h"

namespace dfw::whisper {

using features::FrontendTag;
using nn::Tensor;

namespace {

bool has_cepstral(FrontendTag t) { return t != FrontendTag::kWhisper; }

features::CepstralKind cepstral_kind(FrontendTag t) {
  return t == FrontendTag::kLfcc || t == FrontendTag::kWhisperLfcc ? features::CepstralKind::kLfcc
                                                                     : features::CepstralKind::kMfcc;
}

}  // namespace

Frontend::Frontend(FrontendConfig cfg, std::shared_ptr<Encoder> encoder)
    : cfg_(std::move(cfg)), encoder_(std::move(encoder)) {
  if (features::uses_encoder(cfg_.tag)) {
    if (!encoder_)
      fail(ErrorKind::kBadConfig, std::string(features::tag_name(cfg_.tag)) + " front-end needs an encoder");
    log_mel_ = std::make_unique<LogMel>(encoder_->config().n_mels);
  } else {
    encoder_.reset();
  }
  if (has_cepstral(cfg_.tag)) {
    cfg_.cepstral.kind = cepstral_kind(cfg_.tag);
    cepstral_ = std::make_unique<features::CepstralFrontend>(cfg_.cepstral);
  }
}

int64_t Frontend::feature_dim() const {
  return (encoder_ ? encoder_->config().width : 0) + (cepstral_ ? cepstral_->feature_dim() : 0);
}

FrontendStage Frontend::stage(const Tensor& wave) const {
  FrontendStage s;
  if (log_mel_) {
    s.mel = log_mel_->forward(wave);
    if (s.mel.size(1) % 2 != 0)
      fail(ErrorKind::kShapeMismatch, "Whisper front-ends need an even frame count (clip length / 160)");
  }
  if (cepstral_) s.cepstral = cepstral_->forward(wave);
  return s;
}

Tensor Frontend::finish(const std::vector<FrontendStage>& batch) const {
  if (batch.empty()) fail(ErrorKind::kShapeMismatch, "empty front-end batch");
  const auto b = static_cast<int64_t>(batch.size());
  auto stack = [&](Tensor FrontendStage::*part) {
    std::vector<Tensor> parts;
    for (const auto& s : batch) {
      const Tensor& t = s.*part;
      if (t.shape() != (batch[0].*part).shape())
        fail(ErrorKind::kShapeMismatch, "front-end batch with unequal clip lengths");
      parts.push_back(nn::reshape(t, {1, t.size(0), t.size(1)}));
    }
    return b == 1 ? parts[0] : nn::concat(parts, 0);
  };
  std::vector<Tensor> blocks;
  int64_t frames = -1;
  if (encoder_) {
    Tensor mel = stack(&FrontendStage::mel);
    frames = mel.size(2);
    blocks.push_back(nn::tile_axis(encoder_->forward(mel), 2, frames));
  }
  if (cepstral_) {
    Tensor cep = stack(&FrontendStage::cepstral);
    if (frames >= 0 && cep.size(2) != frames)
      fail(ErrorKind::kFrameMismatch, "log-mel and cepstral frame counts differ");
    blocks.push_back(cep);
  }
  return blocks.size() == 1 ? blocks[0] : nn::concat(blocks, 1);
}

Tensor Frontend::forward(const Tensor& wave) const {
  Tensor out = finish({stage(wave)});
  return nn::reshape(out, {out.size(1), out.size(2)});
}

features::FeatureMap Frontend::extract(const audio::AudioClip& clip) const {
  if (clip.channels != 1 || clip.rate != audio::kSampleRate)
    fail(ErrorKind::kBadConfig, "front-ends need mono 16 kHz audio");
  nn::NoGradGuard guard;
  return {forward(features::wave_tensor(clip)), cfg_.tag, clip.utt_id};
}

}  // namespace dfw::whisper
