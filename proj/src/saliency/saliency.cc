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

#include "dfw/saliency/saliency.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dfw/common/error.h"
#include "dfw/nn/ops.h"

namespace dfw::saliency {

std::vector<double> SaliencyMap::magnitude() const {
  std::vector<double> out(values.data().begin(), values.data().end());
  for (auto& v : out) v = std::abs(v);
  return out;
}

namespace {

nn::Tensor objective_value(const nn::Tensor& logit, Label target, Objective objective) {
  if (objective == Objective::kLogit) return nn::sum(logit);
  const double t = target == Label::kSpoof ? 1.0 : 0.0;
  return nn::bce_with_logits(logit, std::span<const double>(&t, 1));
}

std::string_view objective_name(Objective o) { return o == Objective::kLoss ? "loss" : "logit"; }

}  // namespace

SaliencyMap feature_gradient(const LogitFn& fn, const nn::Tensor& map, Label target, Objective objective) {
  if (!map.defined() || map.dim() != 2) fail(ErrorKind::kShapeMismatch, "feature map must be (rows, frames)");
  nn::Tensor x = nn::reshape(map.detach(), {1, map.size(0), map.size(1)});
  x.set_requires_grad(true);
  nn::Tensor logit = fn(x);
  if (logit.numel() != 1) fail(ErrorKind::kShapeMismatch, "logit function must return one value");
  objective_value(logit, target, objective).backward();
  SaliencyMap out;
  out.values = nn::Tensor(map.shape(), x.grad());
  out.target = target;
  out.objective = objective;
  return out;
}

SaliencyMap feature_gradient(models::Detector& model, const features::FeatureMap& map, Label target,
                             Objective objective) {
  const auto& spec = model.spec();
  if (!map.values.defined() || map.values.dim() != 2 || map.rows() != spec.input_dim)
    fail(ErrorKind::kShapeMismatch, "feature map rows do not match the model input dimension " +
                                        std::to_string(spec.input_dim));
  if (map.frames() < model.min_frames())
    fail(ErrorKind::kShapeMismatch, "feature map has fewer than " + std::to_string(model.min_frames()) +
                                        " frames");
  model.eval();
  SaliencyMap out = feature_gradient([&](const nn::Tensor& x) { return model.logits(x); }, map.values, target,
                                     objective);
  out.model_tag = std::string(models::arch_name(spec.arch));
  out.frontend_tag = std::string(features::tag_name(map.tag));
  return out;
}

SaliencyMap waveform_gradient(models::Detector& model, const whisper::Frontend& frontend,
                              const audio::AudioClip& clip, Label target, Objective objective) {
  if (clip.channels != 1 || clip.rate != audio::kSampleRate)
    fail(ErrorKind::kBadConfig, "waveform saliency expects a preprocessed mono 16 kHz clip");
  if (uses_encoder(frontend.tag()) && !frontend.has_encoder())
    fail(ErrorKind::kNonDifferentiableFrontend, "front-end has no encoder");
  model.eval();
  nn::Tensor wave(nn::Shape{static_cast<int64_t>(clip.samples.size())}, clip.samples);
  wave.set_requires_grad(true);
  nn::Tensor feats = frontend.forward(wave);
  if (feats.size(0) != model.spec().input_dim)
    fail(ErrorKind::kShapeMismatch, "front-end rows do not match the model input dimension");
  nn::Tensor logit = model.logits(nn::reshape(feats, {1, feats.size(0), feats.size(1)}));
  objective_value(logit, target, objective).backward();
  SaliencyMap out;
  out.values = nn::Tensor(wave.shape(), wave.grad());
  for (double g : out.values.data())
    if (!std::isfinite(g))
      fail(ErrorKind::kNonDifferentiableFrontend, "non-finite waveform gradient through " +
                                                      std::string(features::tag_name(frontend.tag())));
  out.model_tag = std::string(models::arch_name(model.spec().arch));
  out.frontend_tag = std::string(features::tag_name(frontend.tag()));
  out.target = target;
  out.objective = objective;
  return out;
}

void write_raw(const SaliencyMap& map, const std::string& path) {
  nlohmann::json h;
  h["shape"] = map.values.shape();
  h["model"] = map.model_tag;
  h["frontend"] = map.frontend_tag;
  h["target"] = label_name(map.target);
  h["objective"] = objective_name(map.objective);
  h["dtype"] = "float32le";
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path);
  out << "DFWSAL1\n" << h.dump() << '\n';
  static_assert(std::endian::native == std::endian::little);
  for (double v : map.values.data()) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof f);
  }
  if (!out) fail(ErrorKind::kIoError, "short write to " + path);
}

SaliencyMap read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kUnreadableFile, "cannot open " + path);
  std::string magic, header;
  if (!std::getline(in, magic) || magic != "DFWSAL1" || !std::getline(in, header))
    fail(ErrorKind::kMalformedLine, path + ": not a saliency dump");
  SaliencyMap out;
  try {
    const auto h = nlohmann::json::parse(header);
    const nn::Shape shape = h.at("shape").get<nn::Shape>();
    std::vector<double> v(static_cast<size_t>(nn::shape_numel(shape)));
    for (auto& x : v) {
      float f;
      if (!in.read(reinterpret_cast<char*>(&f), sizeof f)) fail(ErrorKind::kMalformedLine, path + ": truncated");
      x = f;
    }
    out.values = nn::Tensor(shape, std::move(v));
    out.model_tag = h.at("model").get<std::string>();
    out.frontend_tag = h.at("frontend").get<std::string>();
    if (!parse_label(h.at("target").get<std::string>(), &out.target))
      fail(ErrorKind::kMalformedLine, path + ": bad target");
    out.objective = h.at("objective").get<std::string>() == "logit" ? Objective::kLogit : Objective::kLoss;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kMalformedLine, path + ": " + e.what());
  }
  return out;
}

}  // namespace dfw::saliency
