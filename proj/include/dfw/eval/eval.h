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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfw/common/types.h"
#include "dfw/data/dataset.h"
#include "dfw/models/detector.h"
#include "dfw/train/trainer.h"
#include "dfw/whisper/frontend.h"

namespace dfw::eval {

/// score = probability of the spoof class.
struct ScoreRecord {
  std::string utt_id;
  double score = 0.0;
  Label label = Label::kBonafide;
};

struct ErrorEntry {
  std::string utt_id;
  std::string path;
  std::string message;
};

struct ScoreResult {
  std::vector<ScoreRecord> scores;
  std::vector<ErrorEntry> errors;  // records that could not be scored
};

/// One score per record; per-record failures (unreadable audio, ...) are
/// logged in `errors` and the run continues.
ScoreResult score_dataset(models::Detector& model, const whisper::Frontend& frontend,
                          const std::vector<data::UtteranceRecord>& records,
                          const train::ExampleOptions& opts, int64_t batch_size = 8);

struct EvalReport {
  double eer = 0.0;
  /// Score threshold at the equal-error point (interpolated).
  double threshold = 0.0;
  int64_t n_bonafide = 0, n_spoof = 0;
  std::string model, frontend, dataset;
};

/// Equal error rate: sweep the threshold over the sorted scores (spoof when
/// score >= threshold), FAR = spoof accepted, FRR = bona fide rejected, and
/// interpolate linearly between the two ROC vertices where FAR - FRR changes
/// sign. SingleClass when a class is missing.
EvalReport compute_eer(const std::vector<ScoreRecord>& scores);
/// Reference implementation: explicit thresholds midway between distinct
/// scores, rates counted directly per threshold (quadratic time).
double eer_bruteforce(const std::vector<ScoreRecord>& scores);

/// Fixed-width table, one row per report sorted by (model, frontend,
/// dataset), EER with four decimals.
std::string render_report(std::vector<EvalReport> reports);
std::string render_report_csv(std::vector<EvalReport> reports);

/// "utt_id score label" per line, LF endings.
void write_scores(const std::string& path, const std::vector<ScoreRecord>& scores);
std::vector<ScoreRecord> read_scores(const std::string& path);
void write_error_log(const std::string& path, const std::vector<ErrorEntry>& errors);

}  // namespace dfw::eval
