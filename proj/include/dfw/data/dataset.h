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
#include <string_view>
#include <utility>
#include <vector>

#include "dfw/audio/audio.h"
#include "dfw/common/types.h"

namespace dfw::data {

enum class DatasetKind { kAsvspoof21df, kInTheWild, kSynthetic };

std::string_view dataset_name(DatasetKind kind);
/// "asvspoof21df", "inthewild", "synthetic"
bool parse_dataset(std::string_view text, DatasetKind* out);

struct UtteranceRecord {
  std::string utt_id;
  std::string path;
  Label label = Label::kBonafide;
  DatasetKind dataset = DatasetKind::kSynthetic;

  bool operator==(const UtteranceRecord&) const = default;
};

struct DatasetManifest {
  std::string path;  // manifest file, empty when not materialised
  std::vector<UtteranceRecord> records;
};

/// ASVspoof 2021 DF key file: whitespace-separated, utterance id in column 2,
/// key ("bonafide" / "spoof") in column 6 (column 5 for the 5-column 2019
/// layout). Audio is expected at audio_dir/<utt_id><ext>.
/// Errors: MalformedLine (with line number), DuplicateId.
std::vector<UtteranceRecord> parse_asvspoof_keys(const std::string& keys_file,
                                                 const std::string& audio_dir = "",
                                                 const std::string& ext = ".flac");

/// In-The-Wild meta.csv with a header naming at least "file" and "label"
/// columns; labels "bona-fide" / "spoof". Audio is at audio_dir/<file>.
std::vector<UtteranceRecord> parse_inthewild_meta(const std::string& meta_csv,
                                                  const std::string& audio_dir = "");

/// Manifest CSV: utt_id,path,label,dataset. Relative paths are resolved
/// against the manifest's directory on read and written as given.
void write_manifest(const std::string& path, const std::vector<UtteranceRecord>& records);
DatasetManifest read_manifest(const std::string& path);

/// Splits one CSV line (RFC 4180 quoting).
std::vector<std::string> split_csv_line(std::string_view line);

struct SplitSpec {
  int64_t n_train = 100000;
  int64_t n_val = 25000;
  uint64_t seed = 0;
};

/// Uniform random disjoint subsets. InsufficientRecords when too few.
std::pair<std::vector<UtteranceRecord>, std::vector<UtteranceRecord>> split(
    const std::vector<UtteranceRecord>& records, const SplitSpec& spec);

/// Appends minority-class records drawn with replacement until both classes
/// are equally frequent. SingleClass when a class is absent.
std::vector<UtteranceRecord> oversample(const std::vector<UtteranceRecord>& records, uint64_t seed);

std::pair<int64_t, int64_t> class_counts(const std::vector<UtteranceRecord>& records);

// ---- synthetic corpus -------------------------------------------------------

struct SynthOptions {
  double min_seconds = 1.5;
  double max_seconds = 3.5;
  int rate = audio::kSampleRate;
};

/// Bona fide clips are voiced harmonic stacks (vibrato, syllable envelope,
/// quiet breath noise, short pauses). Spoof clips come from the same
/// generator plus an artifact family: a broadband vocoder-like noise floor,
/// a spectral notch and frame-repeat glitches. Writes 16-bit wav files and
/// out_dir/manifest.csv; a pure function of (n_per_class, seed).
DatasetManifest make_synthetic_corpus(int64_t n_per_class, uint64_t seed, const std::string& out_dir,
                                      const SynthOptions& opts = {});
/// One clip of the generator, without touching the filesystem.
audio::AudioClip synth_clip(Label label, uint64_t seed, const SynthOptions& opts = {});

/// Mean over frames of the spectral flatness (geometric / arithmetic mean
/// of the power spectrum, 512-point frames, hop 256).
double mean_spectral_flatness(const audio::AudioClip& clip);
/// Best accuracy of a single threshold (either orientation) on a scalar.
double stump_accuracy(const std::vector<double>& values, const std::vector<Label>& labels);

}  // namespace dfw::data
