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

// dfw: synthetic corpora, training, fine-tuning, evaluation and saliency
// from a JSON run config.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dfw/cli/commands.h"
#include "dfw/common/error.h"

namespace {

using namespace dfw;

void log_line(const std::string& s) { std::cerr << s << std::endl; }

struct RunFlags {
  std::string config, checkpoint, dataset, out, utt;
  std::optional<uint64_t> seed;

  cli::RunConfig load() const {
    cli::RunConfig cfg = cli::load_config(config);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.output_dir = out;
    return cfg;
  }
  std::optional<data::DatasetKind> kind() const {
    if (dataset.empty()) return std::nullopt;
    data::DatasetKind k;
    if (!data::parse_dataset(dataset, &k)) fail(ErrorKind::kConfigInvalid, "unknown dataset '" + dataset + "'");
    return k;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio deepfake detection with cepstral and Whisper front-ends"};
  app.require_subcommand(1);
  RunFlags f;
  int64_t n_per_class = 100;
  bool f16 = false;

  auto* synth = app.add_subcommand("synth", "Write a labelled synthetic corpus");
  synth->add_option("--n-per-class", n_per_class, "Clips per label")->check(CLI::PositiveNumber);
  synth->add_option("--seed", f.seed, "Corpus seed");
  synth->add_option("--out", f.out, "Output directory")->required();

  auto* init = app.add_subcommand("init-encoder", "Write a random-init tiny.en-shaped encoder checkpoint");
  init->add_option("--seed", f.seed, "Weight seed");
  init->add_option("--out", f.out, "Checkpoint path")->required();
  init->add_flag("--f16", f16, "Store matrices as float16");

  auto add_run = [&](const std::string& name, const std::string& help, bool checkpoint, bool dataset) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--config", f.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    if (checkpoint) c->add_option("--checkpoint", f.checkpoint, "Detector checkpoint")->required();
    if (dataset)
      c->add_option("--dataset", f.dataset, "asvspoof21df | inthewild | synthetic")
          ->check(CLI::IsMember({"asvspoof21df", "inthewild", "synthetic"}));
    c->add_option("--seed", f.seed, "Override the config seed");
    c->add_option("--out", f.out, "Override the output directory");
    return c;
  };
  auto* train = add_run("train", "Train a detector", false, false);
  auto* finetune = add_run("finetune", "Fine-tune with the Whisper encoder unfrozen", true, false);
  auto* eval = add_run("eval", "Score a dataset and report the EER", true, true);
  auto* sal = add_run("saliency", "Input-gradient saliency of one utterance", true, true);
  sal->add_option("--utt", f.utt, "Utterance id")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      std::cout << cli::cmd_synth(n_per_class, f.seed.value_or(0), f.out) << "\n";
    } else if (init->parsed()) {
      std::cout << cli::cmd_init_encoder(f.out, f.seed.value_or(0), f16) << "\n";
    } else if (train->parsed()) {
      std::cout << cli::cmd_train(f.load(), log_line).best_checkpoint << "\n";
    } else if (finetune->parsed()) {
      std::cout << cli::cmd_finetune(f.load(), f.checkpoint, log_line).best_checkpoint << "\n";
    } else if (eval->parsed()) {
      const auto r = cli::cmd_eval(f.load(), f.checkpoint, f.kind(), log_line);
      std::cout << eval::render_report({r.report});
    } else if (sal->parsed()) {
      const auto r = cli::cmd_saliency(f.load(), f.checkpoint, f.utt, f.kind(), log_line);
      std::cout << r.heatmap << "\n" << r.trace << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
