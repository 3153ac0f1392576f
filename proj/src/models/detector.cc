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

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dfw/common/error.h"
#include "dfw/models/detector.h"
#include "dfw/nn/ops.h"

namespace dfw::models {

using nn::Tensor;

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::kLcnn: return "lcnn";
    case Arch::kSpecRNet: return "specrnet";
    case Arch::kMesoNet: return "mesonet";
  }
  return "?";
}

bool parse_arch(std::string_view text, Arch* out) {
  for (Arch a : {Arch::kLcnn, Arch::kSpecRNet, Arch::kMesoNet})
    if (text == arch_name(a)) {
      *out = a;
      return true;
    }
  return false;
}

void ModelSpec::validate() const {
  const int64_t min_dim = arch == Arch::kLcnn ? 16 : arch == Arch::kSpecRNet ? 64 : 32;
  if (input_dim < min_dim)
    fail(ErrorKind::kBadConfig, std::string(arch_name(arch)) + " needs input_dim >= " +
                                    std::to_string(min_dim) + ", got " + std::to_string(input_dim));
  if (meso_pool <= 0) fail(ErrorKind::kBadConfig, "meso_pool must be positive");
  for (double p : {lcnn_dropout, meso_dropout})
    if (!(p >= 0.0 && p < 1.0)) fail(ErrorKind::kBadConfig, "dropout must be in [0, 1)");
}

Tensor Detector::logits(const Tensor& x) {
  if (x.dim() != 3 || x.size(1) != spec_.input_dim)
    fail(ErrorKind::kShapeMismatch, std::string(arch_name(spec_.arch)) + " expects (B, " +
                                        std::to_string(spec_.input_dim) + ", T), got " +
                                        nn::shape_str(x.shape()));
  if (x.size(2) < min_frames())
    fail(ErrorKind::kShapeMismatch, std::string(arch_name(spec_.arch)) + " needs at least " +
                                        std::to_string(min_frames()) + " frames");
  return forward_impl(x);
}

Tensor Detector::scores(const Tensor& x) { return nn::sigmoid(logits(x)); }

std::shared_ptr<Detector> build_lcnn(int64_t input_dim, uint64_t seed) {
  return build_model({Arch::kLcnn, input_dim}, seed);
}
std::shared_ptr<Detector> build_specrnet(int64_t input_dim, uint64_t seed) {
  return build_model({Arch::kSpecRNet, input_dim}, seed);
}
std::shared_ptr<Detector> build_mesonet(int64_t input_dim, uint64_t seed) {
  return build_model({Arch::kMesoNet, input_dim}, seed);
}

int64_t count_params(const Detector& model) { return model.count_params(); }

Tensor stack_features(const std::vector<features::FeatureMap>& batch) {
  if (batch.empty()) fail(ErrorKind::kShapeMismatch, "empty feature batch");
  const int64_t rows = batch[0].rows(), frames = batch[0].frames();
  std::vector<Tensor> parts;
  parts.reserve(batch.size());
  for (const auto& m : batch) {
    if (m.rows() != rows || m.frames() != frames)
      fail(ErrorKind::kShapeMismatch, "feature maps in a batch must share a shape");
    parts.push_back(nn::reshape(m.values, {1, rows, frames}));
  }
  return parts.size() == 1 ? parts[0] : nn::concat(parts, 0);
}

ScoreBatch forward(Detector& model, const std::vector<features::FeatureMap>& batch) {
  nn::NoGradGuard guard;
  Tensor s = model.scores(stack_features(batch));
  ScoreBatch out;
  for (const auto& m : batch) out.utt_ids.push_back(m.utt_id);
  out.scores.assign(s.data().begin(), s.data().end());
  return out;
}

// ---- checkpoints ------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'D', 'F', 'W', 'C', 'K', 'P', 'T', '1'};

nlohmann::json meta_json(const CheckpointMeta& m) {
  return {{"arch", m.arch},       {"input_dim", m.input_dim}, {"frontend_tag", m.frontend_tag},
          {"config_hash", m.config_hash}, {"epoch", m.epoch}, {"val_acc", m.val_acc},
          {"seed", m.seed},       {"meso_pool", m.meso_pool}};
}

[[noreturn]] void incompatible(const std::string& path, const std::string& why) {
  fail(ErrorKind::kIncompatibleCheckpoint, path + ": " + why);
}

}  // namespace

void save_checkpoint(const std::string& path, const Detector& model, const CheckpointMeta& meta,
                     const nn::Module* encoder) {
  std::vector<std::pair<std::string, Tensor>> tensors;
  for (auto& [n, t] : model.state()) tensors.emplace_back("model." + n, t);
  if (encoder)
    for (auto& [n, t] : encoder->state()) tensors.emplace_back("encoder." + n, t);
  nlohmann::json header;
  header["meta"] = meta_json(meta);
  nlohmann::json index = nlohmann::json::array();
  for (auto& [n, t] : tensors) index.push_back({{"name", n}, {"shape", t.shape()}});
  header["tensors"] = index;
  const std::string text = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::kIoError, "cannot write " + tmp);
    out.write(kMagic, sizeof kMagic);
    const uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(len));
    for (auto& [n, t] : tensors)
      out.write(reinterpret_cast<const char*>(t.data().data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!out) fail(ErrorKind::kIoError, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::kIoError, "cannot rename " + tmp + ": " + ec.message());
}

void load_state(nn::Module& module, const TensorMap& state, const std::string& what) {
  for (auto& [name, t] : module.state()) {
    auto it = state.find(name);
    if (it == state.end()) incompatible(what, "missing tensor " + name);
    if (it->second.shape() != t.shape())
      incompatible(what, "tensor " + name + " has shape " + nn::shape_str(it->second.shape()) +
                             ", model expects " + nn::shape_str(t.shape()));
    std::copy(it->second.data().begin(), it->second.data().end(), t.data().begin());
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kUnreadableFile, "cannot open checkpoint " + path);
  char magic[8];
  uint64_t len = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kMagic, 8) != 0 || len > (1u << 30))
    incompatible(path, "not a detector checkpoint");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    incompatible(path, std::string("bad header: ") + e.what());
  }

  Checkpoint ck;
  TensorMap model_state;
  try {
    const auto& m = header.at("meta");
    ck.meta.arch = m.at("arch").get<std::string>();
    ck.meta.input_dim = m.at("input_dim").get<int64_t>();
    ck.meta.frontend_tag = m.at("frontend_tag").get<std::string>();
    ck.meta.config_hash = m.at("config_hash").get<std::string>();
    ck.meta.epoch = m.at("epoch").get<int64_t>();
    ck.meta.val_acc = m.at("val_acc").get<double>();
    ck.meta.seed = m.at("seed").get<uint64_t>();
    ck.meta.meso_pool = m.at("meso_pool").get<int64_t>();
    for (const auto& e : header.at("tensors")) {
      const auto name = e.at("name").get<std::string>();
      Tensor t(e.at("shape").get<nn::Shape>());
      in.read(reinterpret_cast<char*>(t.data().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
      if (!in) incompatible(path, "truncated payload at " + name);
      if (name.rfind("model.", 0) == 0) model_state.emplace(name.substr(6), t);
      else if (name.rfind("encoder.", 0) == 0) ck.encoder_state.emplace(name.substr(8), t);
    }
  } catch (const nlohmann::json::exception& e) {
    incompatible(path, std::string("bad header: ") + e.what());
  }

  ModelSpec spec;
  if (!parse_arch(ck.meta.arch, &spec.arch)) incompatible(path, "unknown architecture " + ck.meta.arch);
  spec.input_dim = ck.meta.input_dim;
  spec.meso_pool = ck.meta.meso_pool;
  ck.model = build_model(spec, ck.meta.seed);
  load_state(*ck.model, model_state, path);
  ck.model->eval();
  return ck;
}

}  // namespace dfw::models
