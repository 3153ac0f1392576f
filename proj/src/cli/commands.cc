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

#include "dfw/cli/commands.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "dfw/common/error.h"
#include "dfw/saliency/saliency.h"

namespace dfw::cli {
namespace fs = std::filesystem;

std::string RunLayout::cache() const {
  const char* env = std::getenv("DFW_CACHE_DIR");
  return env && *env ? std::string(env) : root + "/cache";
}

namespace {

void say(const LogFn& log, const std::string& s) {
  if (log) log(s);
}

void make_dirs(const std::string& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) fail(ErrorKind::kIoError, "cannot create " + p + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path);
}

RunLayout prepare(const RunConfig& cfg) {
  RunLayout l{cfg.output_dir};
  for (const auto& d : {l.root, l.checkpoints(), l.scores(), l.reports(), l.figures()}) make_dirs(d);
  write_text(l.snapshot(), dump_config(cfg));
  return l;
}

train::ExampleOptions example_options(const RunConfig& cfg, const RunLayout& l, bool stages) {
  train::ExampleOptions o;
  o.preprocess = cfg.preprocess;
  o.cache_dir = l.cache();
  o.features = true;
  o.stages = stages;
  return o;
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

train::EpochCallback epoch_logger(const LogFn& log, const char* what) {
  return [log, what](const train::EpochStats& s) {
    say(log, std::string(what) + " epoch " + std::to_string(s.epoch) + ": train_loss " +
                 fmt("%.4f", s.train_loss) + " train_acc " + fmt("%.4f", s.train_acc) + " val_loss " +
                 fmt("%.4f", s.val_loss) + " val_acc " + fmt("%.4f", s.val_acc));
  };
}

std::string copy_best(const train::EpochStats& best, const std::string& dest) {
  std::error_code ec;
  fs::copy_file(best.checkpoint, dest, fs::copy_options::overwrite_existing, ec);
  if (ec) fail(ErrorKind::kIoError, "cannot copy " + best.checkpoint + ": " + ec.message());
  return dest;
}

models::CheckpointMeta run_meta(const RunConfig& cfg, int64_t input_dim) {
  models::CheckpointMeta m;
  m.arch = std::string(models::arch_name(cfg.model));
  m.input_dim = input_dim;
  m.frontend_tag = std::string(features::tag_name(cfg.frontend));
  m.config_hash = config_hash(cfg);
  m.seed = cfg.seed;
  m.meso_pool = cfg.meso_pool;
  return m;
}

}  // namespace

std::vector<data::UtteranceRecord> load_records(const RunConfig& cfg, data::DatasetKind kind, bool for_eval) {
  const auto& d = cfg.datasets;
  auto need = [&](const std::string& v, const char* key) {
    if (v.empty())
      fail(ErrorKind::kConfigInvalid, "config.datasets." + std::string(data::dataset_name(kind)) + "." + key +
                                          " is required");
  };
  switch (kind) {
    case data::DatasetKind::kAsvspoof21df:
      need(d.asvspoof_keys, "keys");
      need(d.asvspoof_audio_dir, "audio_dir");
      break;
    case data::DatasetKind::kInTheWild:
      need(d.inthewild_meta, "meta");
      need(d.inthewild_audio_dir, "audio_dir");
      break;
    case data::DatasetKind::kSynthetic:
      need(for_eval ? d.synthetic_eval_manifest : d.synthetic_manifest, for_eval ? "eval_manifest" : "manifest");
      break;
  }
  switch (kind) {
    case data::DatasetKind::kAsvspoof21df:
      return data::parse_asvspoof_keys(d.asvspoof_keys, d.asvspoof_audio_dir, d.asvspoof_ext);
    case data::DatasetKind::kInTheWild:
      return data::parse_inthewild_meta(d.inthewild_meta, d.inthewild_audio_dir);
    case data::DatasetKind::kSynthetic: {
      return data::read_manifest(for_eval ? d.synthetic_eval_manifest : d.synthetic_manifest).records;
    }
  }
  fail(ErrorKind::kConfigInvalid, "unknown dataset");
}

whisper::Frontend make_frontend(const RunConfig& cfg, const models::TensorMap& encoder_state) {
  whisper::FrontendConfig fc;
  fc.tag = cfg.frontend;
  fc.cepstral = cfg.cepstral;
  std::shared_ptr<whisper::Encoder> enc;
  if (features::uses_encoder(cfg.frontend)) {
    whisper::LoadOptions lo;
    lo.sha256 = cfg.encoder.sha256;
    lo.expected_params = cfg.encoder.expected_params;
    enc = whisper::load_encoder(cfg.encoder.checkpoint, lo);
    if (!encoder_state.empty()) models::load_state(*enc, encoder_state, "encoder");
  }
  return whisper::Frontend(fc, enc);
}

void check_compatible(const models::CheckpointMeta& meta, const RunConfig& cfg, int64_t feature_dim) {
  const std::string arch(models::arch_name(cfg.model)), tag(features::tag_name(cfg.frontend));
  if (meta.arch != arch)
    fail(ErrorKind::kIncompatibleCheckpoint, "checkpoint architecture '" + meta.arch + "' but config says '" + arch + "'");
  if (meta.frontend_tag != tag)
    fail(ErrorKind::kIncompatibleCheckpoint,
         "checkpoint front-end '" + meta.frontend_tag + "' but config says '" + tag + "'");
  if (meta.input_dim != feature_dim)
    fail(ErrorKind::kIncompatibleCheckpoint, "checkpoint expects " + std::to_string(meta.input_dim) +
                                                 " feature rows, front-end yields " + std::to_string(feature_dim));
}

std::string cmd_synth(int64_t n_per_class, uint64_t seed, const std::string& out_dir) {
  if (n_per_class < 1) fail(ErrorKind::kConfigInvalid, "n_per_class must be >= 1");
  make_dirs(out_dir);
  return data::make_synthetic_corpus(n_per_class, seed, out_dir).path;
}

std::string cmd_init_encoder(const std::string& out_path, uint64_t seed, bool f16) {
  auto enc = whisper::init_random_encoder(whisper::EncoderConfig{}, seed);
  const fs::path parent = fs::path(out_path).parent_path();
  if (!parent.empty()) make_dirs(parent.string());
  whisper::write_encoder_checkpoint(out_path, *enc, f16);
  return whisper::sha256_file(out_path);
}

TrainResult cmd_train(const RunConfig& cfg, const LogFn& log) {
  cfg.validate(true);
  const RunLayout l = prepare(cfg);
  auto [train_recs, val_recs] = data::split(load_records(cfg, cfg.train_dataset, false), cfg.split_spec());
  const whisper::Frontend fe = make_frontend(cfg);
  const bool stages = fe.has_encoder() && !cfg.train.cache_frozen_features;
  const auto opts = example_options(cfg, l, stages);
  say(log, "preparing " + std::to_string(train_recs.size()) + " training and " + std::to_string(val_recs.size()) +
               " validation utterances");
  const auto train_ex = train::make_examples(train_recs, fe, opts);
  const auto val_ex = train::make_examples(val_recs, fe, opts);
  auto model = models::build_model(cfg.model_spec(fe.feature_dim()), cfg.seed);
  train::RunOutput out{l.checkpoints(), "epoch", l.history(), run_meta(cfg, fe.feature_dim())};
  TrainResult r;
  r.history = train::fit(*model, fe, train_ex, val_ex, cfg.train_config(), &out, epoch_logger(log, "train"));
  r.best = train::select_best(r.history);
  r.best_checkpoint = copy_best(r.best, l.checkpoints() + "/best.ckpt");
  say(log, "best epoch " + std::to_string(r.best.epoch) + " (val_acc " + fmt("%.4f", r.best.val_acc) + ") -> " +
               r.best_checkpoint);
  return r;
}

TrainResult cmd_finetune(const RunConfig& cfg, const std::string& checkpoint, const LogFn& log) {
  if (!features::uses_encoder(cfg.frontend))
    fail(ErrorKind::kNotWhisperFrontend,
         "fine-tuning needs a Whisper front-end, run uses '" + std::string(features::tag_name(cfg.frontend)) + "'");
  cfg.validate(true);
  auto ck = models::load_checkpoint(checkpoint);
  const whisper::Frontend fe = make_frontend(cfg, ck.encoder_state);
  check_compatible(ck.meta, cfg, fe.feature_dim());
  const RunLayout l = prepare(cfg);
  auto [train_recs, val_recs] = data::split(load_records(cfg, cfg.train_dataset, false), cfg.split_spec());
  const auto opts = example_options(cfg, l, true);
  const auto train_ex = train::make_examples(train_recs, fe, opts);
  const auto val_ex = train::make_examples(val_recs, fe, opts);
  train::RunOutput out{l.checkpoints(), "finetune", l.finetune_history(), run_meta(cfg, fe.feature_dim())};
  const train::FinetuneConfig ft = cfg.finetune.value_or(train::FinetuneConfig{});
  TrainResult r;
  r.history = train::finetune(*ck.model, fe, train_ex, val_ex, ft, cfg.train_config(), &out,
                              epoch_logger(log, "finetune"));
  r.best = train::select_best(r.history);
  r.best_checkpoint = copy_best(r.best, l.checkpoints() + "/finetuned_best.ckpt");
  say(log, "best epoch " + std::to_string(r.best.epoch) + " -> " + r.best_checkpoint);
  return r;
}

EvalResult cmd_eval(const RunConfig& cfg, const std::string& checkpoint, std::optional<data::DatasetKind> dataset,
                    const LogFn& log) {
  cfg.validate(false);
  const data::DatasetKind kind = dataset.value_or(cfg.eval_dataset);
  auto ck = models::load_checkpoint(checkpoint);
  const whisper::Frontend fe = make_frontend(cfg, ck.encoder_state);
  check_compatible(ck.meta, cfg, fe.feature_dim());
  const auto records = load_records(cfg, kind, true);
  const RunLayout l = prepare(cfg);
  say(log, "scoring " + std::to_string(records.size()) + " utterances of " + std::string(data::dataset_name(kind)));
  const auto scored = eval::score_dataset(*ck.model, fe, records, example_options(cfg, l, false), cfg.eval_batch_size);
  const std::string name = std::string(data::dataset_name(kind)) + "_" + stem(checkpoint);
  EvalResult r;
  r.scores_path = l.scores() + "/" + name + ".txt";
  eval::write_scores(r.scores_path, scored.scores);
  r.n_errors = scored.errors.size();
  if (!scored.errors.empty()) {
    eval::write_error_log(l.scores() + "/" + name + ".errors.tsv", scored.errors);
    say(log, std::to_string(scored.errors.size()) + " utterances could not be scored, see " + l.scores() + "/" +
                 name + ".errors.tsv");
  }
  r.report = eval::compute_eer(scored.scores);
  r.report.model = ck.meta.arch;
  r.report.frontend = ck.meta.frontend_tag;
  r.report.dataset = std::string(data::dataset_name(kind));
  r.report_path = l.reports() + "/" + name + ".txt";
  write_text(r.report_path, eval::render_report({r.report}));
  write_text(l.reports() + "/" + name + ".csv", eval::render_report_csv({r.report}));
  say(log, "EER " + fmt("%.4f", r.report.eer) + " -> " + r.report_path);
  return r;
}

SaliencyResult cmd_saliency(const RunConfig& cfg, const std::string& checkpoint, const std::string& utt_id,
                            std::optional<data::DatasetKind> dataset, const LogFn& log) {
  cfg.validate(false);
  const data::DatasetKind kind = dataset.value_or(cfg.eval_dataset);
  auto ck = models::load_checkpoint(checkpoint);
  const whisper::Frontend fe = make_frontend(cfg, ck.encoder_state);
  check_compatible(ck.meta, cfg, fe.feature_dim());
  const auto records = load_records(cfg, kind, true);
  auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.utt_id == utt_id; });
  if (it == records.end())
    fail(ErrorKind::kConfigInvalid, "utterance '" + utt_id + "' not in " + std::string(data::dataset_name(kind)));
  const RunLayout l = prepare(cfg);
  audio::AudioClip clip = audio::preprocess_cached(it->path, it->utt_id, cfg.preprocess, l.cache());
  features::FeatureMap fm = fe.extract(clip);
  fm.utt_id = utt_id;
  const auto feat = saliency::feature_gradient(*ck.model, fm, it->label);
  const auto wave = saliency::waveform_gradient(*ck.model, fe, clip, it->label);
  SaliencyResult r;
  const std::string base = l.figures() + "/" + utt_id;
  r.heatmap = base + "_features.png";
  r.trace = base + "_waveform.png";
  saliency::render_heatmap(feat, r.heatmap);
  saliency::write_raw(feat, base + "_features.sal");
  saliency::render_trace(wave, r.trace);
  saliency::write_raw(wave, base + "_waveform.sal");
  say(log, "saliency -> " + r.heatmap + ", " + r.trace);
  return r;
}

}  // namespace dfw::cli
