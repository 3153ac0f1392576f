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

// ggml checkpoint layout (little-endian):
//   int32 magic 'ggml', 11 int32 hyper-parameters, mel filters
//   (int32 n_mel, int32 n_bins, float32 data), vocabulary (int32 count, then
//   int32 length + bytes each), then tensors until EOF:
//   int32 n_dims, int32 name_length, int32 type (0 f32, 1 f16),
//   int32 dims[n_dims] innermost first, name bytes, raw data.

#include <openssl/evp.h>

#include <Eigen/Core>
#include <fstream>
#include <map>
#include <set>

#include "dfw/common/error.h"
#include "dfw/whisper/encoder.h"

namespace dfw::whisper {
namespace {

constexpr int32_t kMagic = 0x67676d6c;
constexpr int32_t kTinyVocab = 51864;
constexpr int32_t kTextCtx = 448;

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) fail(ErrorKind::kUnreadableFile, "cannot open checkpoint " + path);
  }
  bool try_i32(int32_t* v) {
    in_.read(reinterpret_cast<char*>(v), 4);
    if (in_.gcount() == 0 && in_.eof()) return false;
    if (in_.gcount() != 4) truncated();
    return true;
  }
  int32_t i32() {
    int32_t v;
    if (!try_i32(&v)) truncated();
    return v;
  }
  void bytes(void* dst, size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) truncated();
  }
  void skip(size_t n) {
    in_.seekg(static_cast<std::streamoff>(n), std::ios::cur);
    if (!in_) truncated();
  }
  [[noreturn]] void truncated() const { fail(ErrorKind::kUnreadableFile, "truncated checkpoint " + path_); }

 private:
  std::ifstream in_;
  std::string path_;
};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kUnreadableFile, "cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::shared_ptr<Encoder> load_encoder(const std::string& path, const LoadOptions& opts) {
  if (!opts.sha256.empty()) {
    const std::string got = sha256_file(path);
    if (got != opts.sha256)
      fail(ErrorKind::kChecksumMismatch, path + ": sha256 " + got + " != expected " + opts.sha256);
  }
  Reader r(path);
  if (r.i32() != kMagic) fail(ErrorKind::kUnreadableFile, path + ": not a ggml checkpoint");
  int32_t hp[11];
  for (int32_t& v : hp) v = r.i32();
  EncoderConfig cfg;
  cfg.n_ctx = hp[1];
  cfg.width = hp[2];
  cfg.n_heads = hp[3];
  cfg.n_layers = hp[4];
  cfg.n_mels = hp[9];
  cfg.variant = (hp[0] == kTinyVocab && cfg.width == 384 && cfg.n_layers == 4) ? "tiny.en" : "custom";
  cfg.validate();

  const int32_t n_mel = r.i32(), n_bins = r.i32();
  if (n_mel < 0 || n_bins < 0) r.truncated();
  r.skip(static_cast<size_t>(n_mel) * static_cast<size_t>(n_bins) * 4);
  const int32_t n_tokens = r.i32();
  for (int32_t i = 0; i < n_tokens; ++i) {
    const int32_t len = r.i32();
    if (len < 0) r.truncated();
    r.skip(static_cast<size_t>(len));
  }

  auto enc = std::make_shared<Encoder>(cfg);
  std::map<std::string, nn::Tensor> wanted;
  for (auto& [name, t] : enc->state()) wanted.emplace("encoder." + name, t);
  std::set<std::string> seen;

  int32_t n_dims;
  while (r.try_i32(&n_dims)) {
    const int32_t name_len = r.i32(), ttype = r.i32();
    if (n_dims < 1 || n_dims > 4 || name_len <= 0 || name_len > 4096) r.truncated();
    int64_t numel = 1;
    for (int32_t i = 0; i < n_dims; ++i) numel *= r.i32();
    std::string name(static_cast<size_t>(name_len), '\0');
    r.bytes(name.data(), name.size());
    if (ttype != 0 && ttype != 1)
      fail(ErrorKind::kUnreadableFile, path + ": tensor " + name + " has unsupported type " +
                                           std::to_string(ttype));
    const size_t bytes = static_cast<size_t>(numel) * (ttype == 0 ? 4 : 2);
    auto it = wanted.find(name);
    if (it == wanted.end()) {
      r.skip(bytes);
      continue;
    }
    nn::Tensor& t = it->second;
    if (t.numel() != numel)
      fail(ErrorKind::kShapeMismatch, path + ": tensor " + name + " has " + std::to_string(numel) +
                                          " values, expected " + std::to_string(t.numel()));
    auto dst = t.data();
    if (ttype == 0) {
      std::vector<float> buf(static_cast<size_t>(numel));
      r.bytes(buf.data(), bytes);
      std::copy(buf.begin(), buf.end(), dst.begin());
    } else {
      std::vector<Eigen::half> buf(static_cast<size_t>(numel));
      r.bytes(buf.data(), bytes);
      for (int64_t i = 0; i < numel; ++i) dst[i] = static_cast<float>(buf[i]);
    }
    seen.insert(name);
  }
  std::string missing;
  for (const auto& [name, t] : wanted)
    if (!seen.count(name)) missing += (missing.empty() ? "" : ", ") + name;
  if (!missing.empty()) fail(ErrorKind::kMissingTensors, path + ": missing tensors: " + missing);
  if (opts.expected_params > 0 && enc->count_params() != opts.expected_params)
    fail(ErrorKind::kIncompatibleCheckpoint,
         path + ": encoder has " + std::to_string(enc->count_params()) + " parameters, expected " +
             std::to_string(opts.expected_params));
  enc->set_trainable(false);
  return enc;
}

void write_encoder_checkpoint(const std::string& path, const Encoder& enc, bool f16) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path);
  auto i32 = [&](int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  const EncoderConfig& c = enc.config();
  i32(kMagic);
  for (int64_t v : {int64_t{kTinyVocab}, c.n_ctx, c.width, c.n_heads, c.n_layers, int64_t{kTextCtx},
                    c.width, c.n_heads, c.n_layers, c.n_mels, int64_t{f16 ? 1 : 0}})
    i32(static_cast<int32_t>(v));
  nn::Tensor filters = mel_filters(c.n_mels);
  i32(static_cast<int32_t>(filters.size(0)));
  i32(static_cast<int32_t>(filters.size(1)));
  for (double v : filters.data()) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
  i32(0);  // no vocabulary: encoder-only file
  for (const auto& [short_name, t] : enc.state()) {
    const std::string name = "encoder." + short_name;
    nn::Shape shape = t.shape();
    if (ends_with(name, "conv1.bias") || ends_with(name, "conv2.bias")) shape = {shape[0], 1};
    const bool half = f16 && shape.size() >= 2 && !ends_with(name, "positional_embedding");
    i32(static_cast<int32_t>(shape.size()));
    i32(static_cast<int32_t>(name.size()));
    i32(half ? 1 : 0);
    for (auto it = shape.rbegin(); it != shape.rend(); ++it) i32(static_cast<int32_t>(*it));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    for (double v : t.data()) {
      if (half) {
        const Eigen::half h(static_cast<float>(v));
        out.write(reinterpret_cast<const char*>(&h), 2);
      } else {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
      }
    }
  }
  if (!out) fail(ErrorKind::kIoError, "short write to " + path);
}

}  // namespace dfw::whisper
