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

#include "dfw/train/trainer.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "dfw/common/error.h"
#include "dfw/common/rng.h"
#include "dfw/nn/ops.h"
#include "dfw/nn/optim.h"

namespace dfw::train {

using nn::Tensor;

namespace {
uint64_t g_seed = 0;
}  // namespace

void set_global_seed(uint64_t seed) { g_seed = seed; }
uint64_t global_seed() { return g_seed; }

void TrainConfig::validate() const {
  if (!(lr > 0)) fail(ErrorKind::kBadConfig, "train.lr must be positive");
  if (!(weight_decay >= 0)) fail(ErrorKind::kBadConfig, "train.weight_decay must be >= 0");
  if (batch_size < 1) fail(ErrorKind::kBadConfig, "train.batch_size must be >= 1");
  if (epochs < 1) fail(ErrorKind::kBadConfig, "train.epochs must be >= 1");
  if (!(accuracy_threshold > 0 && accuracy_threshold < 1))
    fail(ErrorKind::kBadConfig, "train.accuracy_threshold must be in (0, 1)");
}

void FinetuneConfig::validate() const {
  if (!(lr > 0)) fail(ErrorKind::kBadConfig, "finetune.lr must be positive");
  if (epochs < 1) fail(ErrorKind::kBadConfig, "finetune.epochs must be >= 1");
}

// ---- examples ----------------------------------------------------------------

namespace {

std::vector<float> to_float(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

Tensor from_float(const std::vector<float>& v, nn::Shape shape) {
  return Tensor(std::move(shape), std::vector<double>(v.begin(), v.end()));
}

}  // namespace

Example make_example(const data::UtteranceRecord& record, const whisper::Frontend& frontend,
                     const ExampleOptions& opts) {
  audio::AudioClip clip = audio::preprocess_cached(record.path, record.utt_id, opts.preprocess, opts.cache_dir);
  nn::NoGradGuard guard;
  Example ex;
  ex.utt_id = record.utt_id;
  ex.label = record.label;
  whisper::FrontendStage st = frontend.stage(features::wave_tensor(clip));
  if (opts.features) {
    Tensor f = frontend.finish({st});
    ex.rows = f.size(1);
    ex.frames = f.size(2);
    ex.features = to_float(f);
  }
  if (opts.stages) {
    if (st.mel.defined()) {
      ex.mel_rows = st.mel.size(0);
      ex.mel = to_float(st.mel);
      ex.frames = st.mel.size(1);
    }
    if (st.cepstral.defined()) {
      ex.cep_rows = st.cepstral.size(0);
      ex.cepstral = to_float(st.cepstral);
      ex.frames = st.cepstral.size(1);
    }
  }
  return ex;
}

std::vector<Example> make_examples(const std::vector<data::UtteranceRecord>& records,
                                   const whisper::Frontend& frontend, const ExampleOptions& opts) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(make_example(r, frontend, opts));
  return out;
}

Tensor batch_features(const std::vector<const Example*>& batch) {
  if (batch.empty()) fail(ErrorKind::kShapeMismatch, "empty batch");
  const int64_t rows = batch[0]->rows, frames = batch[0]->frames;
  std::vector<double> v;
  v.reserve(batch.size() * static_cast<size_t>(rows * frames));
  for (const Example* e : batch) {
    if (e->features.empty()) fail(ErrorKind::kBadConfig, "example " + e->utt_id + " has no stored features");
    if (e->rows != rows || e->frames != frames)
      fail(ErrorKind::kShapeMismatch, "examples in a batch must share a shape");
    v.insert(v.end(), e->features.begin(), e->features.end());
  }
  return Tensor({static_cast<int64_t>(batch.size()), rows, frames}, std::move(v));
}

Tensor batch_through_frontend(const whisper::Frontend& frontend, const std::vector<const Example*>& batch) {
  std::vector<whisper::FrontendStage> stages;
  for (const Example* e : batch) {
    whisper::FrontendStage s;
    if (e->mel_rows > 0) s.mel = from_float(e->mel, {e->mel_rows, e->frames});
    if (e->cep_rows > 0) s.cepstral = from_float(e->cepstral, {e->cep_rows, e->frames});
    if (!s.mel.defined() && !s.cepstral.defined())
      fail(ErrorKind::kBadConfig, "example " + e->utt_id + " has no stored front-end stages");
    stages.push_back(std::move(s));
  }
  return frontend.finish(stages);
}

// ---- training loop -------------------------------------------------------------

namespace {

bool runs_encoder(const whisper::Frontend& fe, bool cache_frozen) {
  return fe.has_encoder() && (fe.encoder()->trainable() || !cache_frozen);
}

std::vector<const Example*> gather(const std::vector<Example>& ex, const std::vector<size_t>& idx,
                                   size_t begin, size_t end) {
  std::vector<const Example*> out;
  for (size_t i = begin; i < end; ++i) out.push_back(&ex[idx[i]]);
  return out;
}

std::vector<double> targets_of(const std::vector<const Example*>& batch) {
  std::vector<double> t;
  for (const Example* e : batch) t.push_back(e->label == Label::kSpoof ? 1.0 : 0.0);
  return t;
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

std::vector<size_t> training_order(const std::vector<Example>& train, const TrainConfig& cfg) {
  std::vector<size_t> idx(train.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (!cfg.oversample) return idx;
  std::vector<data::UtteranceRecord> recs;
  std::map<std::string, size_t> pos;
  for (size_t i = 0; i < train.size(); ++i) {
    data::UtteranceRecord r;
    r.utt_id = train[i].utt_id;
    r.label = train[i].label;
    recs.push_back(r);
    pos.emplace(r.utt_id, i);
  }
  const auto [bona, spoof] = data::class_counts(recs);
  if (bona == 0 || spoof == 0) return idx;  // single-class toy sets train as given
  idx.clear();
  for (const auto& r : data::oversample(recs, cfg.seed)) idx.push_back(pos.at(r.utt_id));
  return idx;
}

TrainHistory run(models::Detector& model, const whisper::Frontend& frontend,
                 const std::vector<Example>& train, const std::vector<Example>& val,
                 const TrainConfig& cfg, std::vector<Tensor> params, const RunOutput* out,
                 const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.empty()) fail(ErrorKind::kInsufficientRecords, "no training examples");
  const bool through_encoder = runs_encoder(frontend, cfg.cache_frozen_features);
  const bool encoder_frozen = frontend.has_encoder() && !frontend.encoder()->trainable();
  model.seed_dropout(derive_seed(cfg.seed, "dropout"));
  const std::vector<size_t> base = training_order(train, cfg);
  nn::AdamW opt(std::move(params), cfg.lr, cfg.weight_decay);
  if (out && !out->checkpoint_dir.empty()) std::filesystem::create_directories(out->checkpoint_dir);

  TrainHistory history;
  for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<size_t> order = base;
    Rng rng(derive_seed(cfg.seed, "shuffle/" + std::to_string(epoch)));
    rng.shuffle(order);
    model.train();
    double loss_sum = 0.0;
    int64_t correct = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      auto batch = gather(train, order, start, end);
      const auto y = targets_of(batch);
      Tensor x = through_encoder ? batch_through_frontend(frontend, batch) : batch_features(batch);
      Tensor logits = model.logits(x);
      Tensor loss = nn::bce_with_logits(logits, y);
      if (!std::isfinite(loss.item())) {
        std::string ids;
        for (const Example* e : batch) ids += " " + e->utt_id;
        fail(ErrorKind::kNonFiniteLoss, "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                            std::to_string(start / cfg.batch_size) + ", utterances:" + ids);
      }
      opt.zero_grad();
      loss.backward();
      if (encoder_frozen)
        for (auto& [name, p] : frontend.encoder()->named_parameters())
          if (p.has_grad())
            for (double g : p.grad())
              if (g != 0.0) throw std::logic_error("frozen encoder parameter " + name + " received a gradient");
      opt.step();
      loss_sum += loss.item() * static_cast<double>(batch.size());
      for (size_t i = 0; i < batch.size(); ++i)
        correct += (sigmoid(logits.data()[i]) >= cfg.accuracy_threshold) == (y[i] > 0.5);
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(order.size());
    st.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
    if (!val.empty()) {
      EvalStats ev = evaluate_examples(model, frontend, val, cfg.batch_size, cfg.accuracy_threshold);
      st.val_loss = ev.loss;
      st.val_acc = ev.accuracy;
    } else {
      st.val_loss = std::nan("");
      st.val_acc = std::nan("");
    }
    if (out && !out->checkpoint_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_%03lld.ckpt", out->checkpoint_prefix.c_str(),
                    static_cast<long long>(epoch));
      st.checkpoint = (std::filesystem::path(out->checkpoint_dir) / name).string();
      models::CheckpointMeta meta = out->meta;
      meta.epoch = epoch;
      meta.val_acc = st.val_acc;
      const nn::Module* enc =
          frontend.has_encoder() && frontend.encoder()->trainable() ? frontend.encoder().get() : nullptr;
      save_checkpoint(st.checkpoint, model, meta, enc);
    }
    history.epochs.push_back(st);
    if (out && !out->history_csv.empty()) write_history_csv(out->history_csv, history);
    if (on_epoch) on_epoch(st);
    if (cfg.stop_at_train_acc && st.train_acc >= *cfg.stop_at_train_acc) break;
  }
  model.eval();
  return history;
}

}  // namespace

TrainHistory fit(models::Detector& model, const whisper::Frontend& frontend,
                 const std::vector<Example>& train, const std::vector<Example>& val,
                 const TrainConfig& cfg, const RunOutput* out, const EpochCallback& on_epoch) {
  std::vector<Tensor> params = model.parameters();
  if (frontend.has_encoder() && frontend.encoder()->trainable())
    for (auto& p : frontend.encoder()->parameters()) params.push_back(p);
  return run(model, frontend, train, val, cfg, std::move(params), out, on_epoch);
}

TrainHistory finetune(models::Detector& model, const whisper::Frontend& frontend,
                      const std::vector<Example>& train, const std::vector<Example>& val,
                      const FinetuneConfig& ft, const TrainConfig& base, const RunOutput* out,
                      const EpochCallback& on_epoch) {
  if (!frontend.has_encoder())
    fail(ErrorKind::kNotWhisperFrontend, std::string("fine-tuning needs a Whisper front-end, got ") +
                                             std::string(features::tag_name(frontend.tag())));
  ft.validate();
  TrainConfig cfg = base;
  cfg.lr = ft.lr;
  cfg.epochs = ft.epochs;
  cfg.stop_at_train_acc.reset();
  frontend.encoder()->set_trainable(ft.unfreeze_encoder);
  return fit(model, frontend, train, val, cfg, out, on_epoch);
}

EpochStats select_best(const TrainHistory& history) {
  if (history.epochs.empty()) fail(ErrorKind::kEmptyHistory, "no completed epochs");
  const EpochStats* best = &history.epochs[0];
  for (const auto& e : history.epochs)
    if (e.val_acc > best->val_acc) best = &e;
  return *best;
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path);
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char line[256];
  for (const auto& e : history.epochs) {
    std::snprintf(line, sizeof line, "%lld,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(e.epoch),
                  e.train_loss, e.train_acc, e.val_loss, e.val_acc);
    out << line;
  }
  if (!out) fail(ErrorKind::kIoError, "short write to " + path);
}

EvalStats evaluate_examples(models::Detector& model, const whisper::Frontend& frontend,
                            const std::vector<Example>& examples, int64_t batch_size, double threshold) {
  model.eval();
  nn::NoGradGuard guard;
  EvalStats st;
  if (examples.empty()) return st;
  std::vector<size_t> idx(examples.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  double loss = 0.0;
  int64_t correct = 0;
  for (size_t start = 0; start < idx.size(); start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(idx.size(), start + static_cast<size_t>(batch_size));
    auto batch = gather(examples, idx, start, end);
    const auto y = targets_of(batch);
    Tensor x = batch[0]->features.empty() ? batch_through_frontend(frontend, batch) : batch_features(batch);
    Tensor logits = model.logits(x);
    loss += nn::bce_with_logits(logits, y).item() * static_cast<double>(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
      const double s = sigmoid(logits.data()[i]);
      st.scores.push_back(s);
      correct += (s >= threshold) == (y[i] > 0.5);
    }
  }
  st.loss = loss / static_cast<double>(examples.size());
  st.accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
  return st;
}

}  // namespace dfw::train
