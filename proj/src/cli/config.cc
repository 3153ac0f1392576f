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

#include "dfw/cli/config.h"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "dfw/common/error.h"

namespace dfw::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& msg) { fail(ErrorKind::kConfigInvalid, msg); }

// Reads a JSON object, rejecting keys outside `allowed`.
class Reader {
 public:
  Reader(const json& j, std::string where, std::set<std::string> allowed) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) invalid(where_ + ": expected an object");
    for (const auto& [k, v] : j_.items())
      if (!allowed.count(k)) invalid(where_ + ": unknown key '" + k + "'");
  }
  bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  const json& at(const std::string& k) const { return j_.at(k); }
  std::string path(const std::string& k) const { return where_ + "." + k; }

  template <typename T>
  void get(const std::string& k, T* out) const {
    if (!has(k)) return;
    try {
      *out = j_.at(k).get<T>();
    } catch (const json::exception&) {
      invalid(path(k) + ": wrong type");
    }
  }

 private:
  const json& j_;
  std::string where_;
};

std::string resolve(const std::string& p, const std::string& base) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return fs::weakly_canonical(fs::path(base) / p).string();
}

std::string lower_hex(const unsigned char* d, unsigned n) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < n; ++i) {
    s += hex[d[i] >> 4];
    s += hex[d[i] & 15];
  }
  return s;
}

}  // namespace

RunConfig config_from_json(const json& j, const std::string& base_dir) {
  RunConfig c;
  Reader r(j, "config",
           {"model", "frontend", "train_dataset", "eval_dataset", "datasets", "split", "preprocess", "cepstral",
            "encoder", "train", "finetune", "model_options", "eval_batch_size", "output_dir", "seed"});
  std::string s;
  if (!r.has("model") || !r.has("frontend")) invalid("config: 'model' and 'frontend' are required");
  r.get("model", &s);
  if (!models::parse_arch(s, &c.model)) invalid("config.model: unknown architecture '" + s + "'");
  r.get("frontend", &s);
  if (!features::parse_tag(s, &c.frontend)) invalid("config.frontend: unknown front-end '" + s + "'");
  for (auto [key, dst] : {std::pair{"train_dataset", &c.train_dataset}, std::pair{"eval_dataset", &c.eval_dataset}}) {
    if (!r.has(key)) continue;
    r.get(key, &s);
    if (!data::parse_dataset(s, dst)) invalid(r.path(key) + ": unknown dataset '" + s + "'");
  }
  if (r.has("datasets")) {
    Reader d(r.at("datasets"), "config.datasets", {"asvspoof21df", "inthewild", "synthetic"});
    if (d.has("asvspoof21df")) {
      Reader a(d.at("asvspoof21df"), "config.datasets.asvspoof21df", {"keys", "audio_dir", "ext"});
      a.get("keys", &c.datasets.asvspoof_keys);
      a.get("audio_dir", &c.datasets.asvspoof_audio_dir);
      a.get("ext", &c.datasets.asvspoof_ext);
    }
    if (d.has("inthewild")) {
      Reader a(d.at("inthewild"), "config.datasets.inthewild", {"meta", "audio_dir"});
      a.get("meta", &c.datasets.inthewild_meta);
      a.get("audio_dir", &c.datasets.inthewild_audio_dir);
    }
    if (d.has("synthetic")) {
      Reader a(d.at("synthetic"), "config.datasets.synthetic", {"manifest", "eval_manifest"});
      a.get("manifest", &c.datasets.synthetic_manifest);
      a.get("eval_manifest", &c.datasets.synthetic_eval_manifest);
    }
  }
  if (r.has("split")) {
    Reader a(r.at("split"), "config.split", {"n_train", "n_val"});
    a.get("n_train", &c.n_train);
    a.get("n_val", &c.n_val);
  }
  if (r.has("preprocess")) {
    Reader a(r.at("preprocess"), "config.preprocess", {"rate", "target_s", "min_silence_s", "energy_floor_db", "frame_ms"});
    a.get("rate", &c.preprocess.rate);
    a.get("target_s", &c.preprocess.target_s);
    a.get("min_silence_s", &c.preprocess.silence.min_silence_s);
    a.get("energy_floor_db", &c.preprocess.silence.energy_floor_db);
    a.get("frame_ms", &c.preprocess.silence.frame_ms);
  }
  if (r.has("cepstral")) {
    Reader a(r.at("cepstral"), "config.cepstral", {"n_coeffs", "window", "hop", "n_fft", "n_filters", "log_eps"});
    a.get("n_coeffs", &c.cepstral.n_coeffs);
    a.get("window", &c.cepstral.window);
    a.get("hop", &c.cepstral.hop);
    a.get("n_fft", &c.cepstral.n_fft);
    a.get("n_filters", &c.cepstral.n_filters);
    a.get("log_eps", &c.cepstral.log_eps);
  }
  c.cepstral.kind = c.frontend == features::FrontendTag::kLfcc || c.frontend == features::FrontendTag::kWhisperLfcc
                        ? features::CepstralKind::kLfcc
                        : features::CepstralKind::kMfcc;
  c.cepstral.sample_rate = c.preprocess.rate;
  if (r.has("encoder")) {
    Reader a(r.at("encoder"), "config.encoder", {"checkpoint", "sha256", "expected_params"});
    a.get("checkpoint", &c.encoder.checkpoint);
    a.get("sha256", &c.encoder.sha256);
    a.get("expected_params", &c.encoder.expected_params);
  }
  if (r.has("train")) {
    Reader a(r.at("train"), "config.train",
             {"lr", "weight_decay", "batch_size", "epochs", "accuracy_threshold", "oversample", "stop_at_train_acc",
              "cache_frozen_features"});
    a.get("lr", &c.train.lr);
    a.get("weight_decay", &c.train.weight_decay);
    a.get("batch_size", &c.train.batch_size);
    a.get("epochs", &c.train.epochs);
    a.get("accuracy_threshold", &c.train.accuracy_threshold);
    a.get("oversample", &c.train.oversample);
    a.get("cache_frozen_features", &c.train.cache_frozen_features);
    if (a.has("stop_at_train_acc")) {
      double v = 0;
      a.get("stop_at_train_acc", &v);
      c.train.stop_at_train_acc = v;
    }
  }
  if (r.has("finetune")) {
    Reader a(r.at("finetune"), "config.finetune", {"epochs", "lr", "unfreeze_encoder"});
    train::FinetuneConfig f;
    a.get("epochs", &f.epochs);
    a.get("lr", &f.lr);
    a.get("unfreeze_encoder", &f.unfreeze_encoder);
    c.finetune = f;
  }
  if (r.has("model_options")) {
    Reader a(r.at("model_options"), "config.model_options", {"meso_pool", "lcnn_dropout", "meso_dropout"});
    a.get("meso_pool", &c.meso_pool);
    a.get("lcnn_dropout", &c.lcnn_dropout);
    a.get("meso_dropout", &c.meso_dropout);
  }
  r.get("eval_batch_size", &c.eval_batch_size);
  r.get("output_dir", &c.output_dir);
  r.get("seed", &c.seed);

  for (std::string* p : {&c.datasets.asvspoof_keys, &c.datasets.asvspoof_audio_dir, &c.datasets.inthewild_meta,
                         &c.datasets.inthewild_audio_dir, &c.datasets.synthetic_manifest,
                         &c.datasets.synthetic_eval_manifest, &c.encoder.checkpoint, &c.output_dir})
    *p = resolve(*p, base_dir);
  c.validate(false);
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["model"] = models::arch_name(c.model);
  j["frontend"] = features::tag_name(c.frontend);
  j["train_dataset"] = data::dataset_name(c.train_dataset);
  j["eval_dataset"] = data::dataset_name(c.eval_dataset);
  j["datasets"] = {
      {"asvspoof21df",
       {{"keys", c.datasets.asvspoof_keys},
        {"audio_dir", c.datasets.asvspoof_audio_dir},
        {"ext", c.datasets.asvspoof_ext}}},
      {"inthewild", {{"meta", c.datasets.inthewild_meta}, {"audio_dir", c.datasets.inthewild_audio_dir}}},
      {"synthetic",
       {{"manifest", c.datasets.synthetic_manifest}, {"eval_manifest", c.datasets.synthetic_eval_manifest}}}};
  j["split"] = {{"n_train", c.n_train}, {"n_val", c.n_val}};
  j["preprocess"] = {{"rate", c.preprocess.rate},
                     {"target_s", c.preprocess.target_s},
                     {"min_silence_s", c.preprocess.silence.min_silence_s},
                     {"energy_floor_db", c.preprocess.silence.energy_floor_db},
                     {"frame_ms", c.preprocess.silence.frame_ms}};
  j["cepstral"] = {{"n_coeffs", c.cepstral.n_coeffs}, {"window", c.cepstral.window},
                   {"hop", c.cepstral.hop},           {"n_fft", c.cepstral.n_fft},
                   {"n_filters", c.cepstral.n_filters}, {"log_eps", c.cepstral.log_eps}};
  j["encoder"] = {{"checkpoint", c.encoder.checkpoint},
                  {"sha256", c.encoder.sha256},
                  {"expected_params", c.encoder.expected_params}};
  j["train"] = {{"lr", c.train.lr},
                {"weight_decay", c.train.weight_decay},
                {"batch_size", c.train.batch_size},
                {"epochs", c.train.epochs},
                {"accuracy_threshold", c.train.accuracy_threshold},
                {"oversample", c.train.oversample},
                {"cache_frozen_features", c.train.cache_frozen_features},
                {"stop_at_train_acc", c.train.stop_at_train_acc ? json(*c.train.stop_at_train_acc) : json(nullptr)}};
  j["finetune"] = c.finetune ? json{{"epochs", c.finetune->epochs},
                                    {"lr", c.finetune->lr},
                                    {"unfreeze_encoder", c.finetune->unfreeze_encoder}}
                             : json(nullptr);
  j["model_options"] = {
      {"meso_pool", c.meso_pool}, {"lcnn_dropout", c.lcnn_dropout}, {"meso_dropout", c.meso_dropout}};
  j["eval_batch_size"] = c.eval_batch_size;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return j;
}

void RunConfig::validate(bool check_paths) const {
  try {
    preprocess.validate();
    cepstral.validate();
    train_config().validate();
    if (finetune) finetune->validate();
    model_spec(features::uses_encoder(frontend) ? 384 : 3 * cepstral.n_coeffs).validate();
  } catch (const Error& e) {
    invalid(e.what());
  }
  if (n_train < 1 || n_val < 1) invalid("config.split: n_train and n_val must be >= 1");
  if (eval_batch_size < 1) invalid("config.eval_batch_size must be >= 1");
  if (output_dir.empty()) invalid("config.output_dir is required");
  if (features::uses_encoder(frontend) && encoder.checkpoint.empty())
    invalid("config.encoder.checkpoint is required for front-end " + std::string(features::tag_name(frontend)));
  if (!check_paths) return;
  auto need = [](const std::string& p, const std::string& what) {
    if (p.empty()) invalid(what + " is required");
    if (!fs::exists(p)) invalid(what + ": path does not exist: " + p);
  };
  if (features::uses_encoder(frontend)) need(encoder.checkpoint, "config.encoder.checkpoint");
  for (auto kind : {train_dataset, eval_dataset}) {
    switch (kind) {
      case data::DatasetKind::kAsvspoof21df:
        need(datasets.asvspoof_keys, "config.datasets.asvspoof21df.keys");
        need(datasets.asvspoof_audio_dir, "config.datasets.asvspoof21df.audio_dir");
        break;
      case data::DatasetKind::kInTheWild:
        need(datasets.inthewild_meta, "config.datasets.inthewild.meta");
        need(datasets.inthewild_audio_dir, "config.datasets.inthewild.audio_dir");
        break;
      case data::DatasetKind::kSynthetic:
        need(kind == train_dataset ? datasets.synthetic_manifest : datasets.synthetic_eval_manifest,
             kind == train_dataset ? "config.datasets.synthetic.manifest" : "config.datasets.synthetic.eval_manifest");
        break;
    }
  }
}

models::ModelSpec RunConfig::model_spec(int64_t input_dim) const {
  models::ModelSpec s;
  s.arch = model;
  s.input_dim = input_dim;
  s.meso_pool = meso_pool;
  s.lcnn_dropout = lcnn_dropout;
  s.meso_dropout = meso_dropout;
  return s;
}

train::TrainConfig RunConfig::train_config() const {
  train::TrainConfig t = train;
  t.seed = seed;
  return t;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    invalid(path + ": " + e.what());
  }
  return config_from_json(j, fs::absolute(path).parent_path().string());
}

std::string dump_config(const RunConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

std::string config_hash(const RunConfig& cfg) {
  const std::string s = config_to_json(cfg).dump();
  unsigned char d[EVP_MAX_MD_SIZE];
  unsigned n = 0;
  EVP_Digest(s.data(), s.size(), d, &n, EVP_sha256(), nullptr);
  return lower_hex(d, n);
}

}  // namespace dfw::cli
