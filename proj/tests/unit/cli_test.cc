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

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "dfw/cli/commands.h"
#include "dfw/cli/config.h"
#include "dfw/common/error.h"
#include "test_util.h"

using namespace dfw;
using namespace dfw::cli;
using dfw::testing::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::kIoError;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Cli {
  int code;
  std::string err;
};

Cli run_cli(const std::string& args, const TempDir& dir) {
  const std::string err = dir.file("stderr.txt");
  const int status = std::system((std::string(DFW_CLI_BIN) + " " + args + " >/dev/null 2>" + err).c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

// Small synthetic run: 1 s clips, 6/2 split.
struct Workspace {
  TempDir dir{"cli"};
  std::string config;
  explicit Workspace(const std::string& frontend = "mfcc", int64_t epochs = 10) {
    cmd_synth(4, 1, dir.file("train"));
    cmd_synth(3, 2, dir.file("heldout"));
    json j = {{"model", "mesonet"},
              {"frontend", frontend},
              {"datasets", {{"synthetic", {{"manifest", "train/manifest.csv"}, {"eval_manifest", "heldout/manifest.csv"}}}}},
              {"split", {{"n_train", 6}, {"n_val", 2}}},
              {"preprocess", {{"target_s", 1.0}}},
              {"train", {{"lr", 1e-3}, {"epochs", epochs}}},
              {"finetune", {{"epochs", 1}, {"lr", 1e-6}}},
              {"output_dir", "run"},
              {"seed", 3}};
    if (frontend != "mfcc" && frontend != "lfcc") {
      const std::string sha = cmd_init_encoder(dir.file("enc/tiny.bin"), 4);
      j["encoder"] = {{"checkpoint", "enc/tiny.bin"}, {"sha256", sha}};
    }
    config = dir.file("run.json");
    std::ofstream(config) << j.dump(2);
  }
};

}  // namespace

TEST_CASE("config: round trip, hashing, path resolution") {
  TempDir dir("cfg");
  const json j = {{"model", "lcnn"},
                  {"frontend", "whisper+lfcc"},
                  {"train_dataset", "asvspoof21df"},
                  {"eval_dataset", "inthewild"},
                  {"datasets", {{"asvspoof21df", {{"keys", "keys.txt"}, {"audio_dir", "/data/flac"}}}}},
                  {"encoder", {{"checkpoint", "models/tiny.bin"}}},
                  {"train", {{"stop_at_train_acc", 0.99}}},
                  {"finetune", {{"epochs", 5}}},
                  {"output_dir", "out"},
                  {"seed", 42}};
  const RunConfig c = config_from_json(j, dir.path());
  CHECK(c.model == models::Arch::kLcnn);
  CHECK(c.cepstral.kind == features::CepstralKind::kLfcc);
  CHECK(c.datasets.asvspoof_keys == dir.file("keys.txt"));
  CHECK(c.datasets.asvspoof_audio_dir == "/data/flac");
  CHECK(c.encoder.checkpoint == dir.file("models/tiny.bin"));
  CHECK(c.output_dir == dir.file("out"));
  REQUIRE(c.train.stop_at_train_acc.has_value());
  CHECK(c.train_config().seed == 42);

  const json once = config_to_json(c);
  const RunConfig back = config_from_json(once, "/elsewhere");
  CHECK(config_to_json(back) == once);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(dump_config(back) == dump_config(c));
  RunConfig other = c;
  other.train.lr = 2e-4;
  CHECK(config_hash(other) != config_hash(c));

  std::ofstream(dir.file("snap.json")) << dump_config(c);
  CHECK(config_hash(load_config(dir.file("snap.json"))) == config_hash(c));
}

TEST_CASE("config: invalid inputs raise ConfigInvalid") {
  const json base = {{"model", "mesonet"}, {"frontend", "mfcc"}, {"output_dir", "/tmp/x"}};
  CHECK_NOTHROW(config_from_json(base));
  auto with = [&](const std::string& k, const json& v) {
    json j = base;
    j[k] = v;
    return j;
  };
  CHECK(kind_of([&] { config_from_json(with("colour", "blue")); }) == ErrorKind::kConfigInvalid);
  CHECK(kind_of([&] { config_from_json(with("model", "resnet")); }) == ErrorKind::kConfigInvalid);
  CHECK(kind_of([&] { config_from_json(with("frontend", "plp")); }) == ErrorKind::kConfigInvalid);
  CHECK(kind_of([&] { config_from_json(with("train", {{"lr", "fast"}})); }) == ErrorKind::kConfigInvalid);
  CHECK(kind_of([&] { config_from_json(with("train", {{"epochs", 0}})); }) == ErrorKind::kConfigInvalid);
  CHECK(kind_of([&] { config_from_json(with("frontend", "whisper")); }) == ErrorKind::kConfigInvalid);
  CHECK(kind_of([&] { config_from_json(with("split", {{"n_test", 3}})); }) == ErrorKind::kConfigInvalid);
  json no_model = base;
  no_model.erase("model");
  CHECK(kind_of([&] { config_from_json(no_model); }) == ErrorKind::kConfigInvalid);
  // Paths are checked at run time.
  const RunConfig c = config_from_json(with("datasets", {{"synthetic", {{"manifest", "/no/such/manifest.csv"}}}}));
  CHECK(kind_of([&] { c.validate(true); }) == ErrorKind::kConfigInvalid);
  CHECK(kind_of([&] { load_config("/no/such/config.json"); }) == ErrorKind::kConfigInvalid);
}

TEST_CASE("layout: cache directory honours DFW_CACHE_DIR") {
  RunLayout l{"/runs/a"};
  ::unsetenv("DFW_CACHE_DIR");
  CHECK(l.cache() == "/runs/a/cache");
  ::setenv("DFW_CACHE_DIR", "/var/cache/dfw", 1);
  CHECK(l.cache() == "/var/cache/dfw");
  ::unsetenv("DFW_CACHE_DIR");
}

TEST_CASE("train, eval and saliency write the documented artifacts") {
  Workspace ws;
  const RunConfig cfg = load_config(ws.config);
  const auto r = cmd_train(cfg);
  const RunLayout l{cfg.output_dir};
  CHECK(r.history.epochs.size() == 10);
  const std::string hist = slurp(l.history());
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 11);
  CHECK(fs::exists(l.checkpoints() + "/best.ckpt"));
  CHECK(fs::exists(l.checkpoints() + "/epoch_010.ckpt"));
  CHECK(config_hash(load_config(l.snapshot())) == config_hash(cfg));

  const auto ev = cmd_eval(cfg, r.best_checkpoint);
  CHECK(ev.report.n_bonafide == 3);
  CHECK(ev.report.n_spoof == 3);
  CHECK(ev.n_errors == 0);
  CHECK(eval::read_scores(ev.scores_path).size() == 6);
  CHECK(slurp(ev.report_path).find("mesonet") != std::string::npos);
  CHECK(fs::exists(l.reports() + "/synthetic_best.csv"));

  const auto sal = cmd_saliency(cfg, r.best_checkpoint, "syn2_spoof_0001");
  CHECK(slurp(sal.heatmap).substr(1, 3) == "PNG");
  CHECK(slurp(sal.trace).substr(1, 3) == "PNG");
  CHECK(fs::exists(l.figures() + "/syn2_spoof_0001_waveform.sal"));
  CHECK(kind_of([&] { cmd_saliency(cfg, r.best_checkpoint, "nobody"); }) == ErrorKind::kConfigInvalid);

  // Rerun from the snapshot alone reproduces the history.
  RunConfig again = load_config(l.snapshot());
  again.output_dir = ws.dir.file("rerun");
  cmd_train(again);
  CHECK(slurp(ws.dir.file("rerun/history.csv")) == hist);
}

TEST_CASE("binary: exit codes and diagnostics") {
  Workspace ws("mfcc", 1);
  CHECK(run_cli("train --config " + ws.config, ws.dir).code == 0);
  const std::string ckpt = ws.dir.file("run/checkpoints/best.ckpt");
  CHECK(run_cli("eval --config " + ws.config + " --checkpoint " + ckpt + " --dataset synthetic", ws.dir).code == 0);

  // Same run but the config claims another front-end.
  json j = json::parse(slurp(ws.config));
  j["frontend"] = "lfcc";
  std::ofstream(ws.dir.file("lfcc.json")) << j.dump();
  auto bad = run_cli("eval --config " + ws.dir.file("lfcc.json") + " --checkpoint " + ckpt, ws.dir);
  CHECK(bad.code != 0);
  CHECK(bad.err.find("error: IncompatibleCheckpoint") != std::string::npos);

  auto ft = run_cli("finetune --config " + ws.config + " --checkpoint " + ckpt, ws.dir);
  CHECK(ft.code != 0);
  CHECK(ft.err.find("NotWhisperFrontend") != std::string::npos);

  auto missing = run_cli("eval --config " + ws.config + " --checkpoint " + ckpt + " --dataset inthewild", ws.dir);
  CHECK(missing.code != 0);
  CHECK(missing.err.find("ConfigInvalid") != std::string::npos);

  CHECK(run_cli("train", ws.dir).code != 0);
  CHECK(run_cli("train --config " + ws.config + " --seed 9 --out " + ws.dir.file("seed9"), ws.dir).code == 0);
  CHECK(fs::exists(ws.dir.file("seed9/history.csv")));
  CHECK(load_config(ws.dir.file("seed9/config.snapshot")).seed == 9);
}

TEST_CASE("whisper run: train frozen, fine-tune, evaluate the fine-tuned checkpoint") {
  Workspace ws("whisper+mfcc", 1);
  const RunConfig cfg = load_config(ws.config);
  const auto r = cmd_train(cfg);
  const auto ft = cmd_finetune(cfg, r.best_checkpoint);
  CHECK(ft.history.epochs.size() == 1);
  const auto ck = models::load_checkpoint(ft.best_checkpoint);
  CHECK(!ck.encoder_state.empty());
  const auto frozen = models::load_checkpoint(r.best_checkpoint);
  CHECK(frozen.encoder_state.empty());
  const auto ev = cmd_eval(cfg, ft.best_checkpoint);
  CHECK(ev.report.frontend == "whisper+mfcc");
  CHECK(fs::exists(RunLayout{cfg.output_dir}.finetune_history()));
}
