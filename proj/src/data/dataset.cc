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

#include "dfw/data/dataset.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dfw/common/error.h"
#include "dfw/common/rng.h"

namespace dfw::data {

namespace fs = std::filesystem;

std::string_view dataset_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kAsvspoof21df: return "asvspoof21df";
    case DatasetKind::kInTheWild: return "inthewild";
    case DatasetKind::kSynthetic: return "synthetic";
  }
  return "?";
}

bool parse_dataset(std::string_view text, DatasetKind* out) {
  for (DatasetKind k : {DatasetKind::kAsvspoof21df, DatasetKind::kInTheWild, DatasetKind::kSynthetic})
    if (text == dataset_name(k)) {
      *out = k;
      return true;
    }
  return false;
}

namespace {

[[noreturn]] void malformed(const std::string& file, int64_t line, const std::string& why) {
  fail(ErrorKind::kMalformedLine, file + ":" + std::to_string(line) + ": " + why);
}

std::ifstream open_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kUnreadableFile, "cannot open " + path);
  return in;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return dir.empty() ? name : (fs::path(dir) / name).string();
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

void check_unique(const std::vector<UtteranceRecord>& records, const std::string& file) {
  std::set<std::string> seen;
  for (const auto& r : records)
    if (!seen.insert(r.utt_id).second) fail(ErrorKind::kDuplicateId, file + ": duplicate utt_id " + r.utt_id);
}

}  // namespace

std::vector<UtteranceRecord> parse_asvspoof_keys(const std::string& keys_file,
                                                 const std::string& audio_dir,
                                                 const std::string& ext) {
  auto in = open_text(keys_file);
  std::vector<UtteranceRecord> out;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    std::istringstream ss(line);
    std::vector<std::string> f;
    for (std::string tok; ss >> tok;) f.push_back(tok);
    if (f.empty()) continue;
    if (f.size() < 5) malformed(keys_file, lineno, "expected at least 5 fields");
    const std::string& key = f.size() == 5 ? f[4] : f[5];
    UtteranceRecord r;
    r.utt_id = f[1];
    if (key == "bonafide") r.label = Label::kBonafide;
    else if (key == "spoof") r.label = Label::kSpoof;
    else malformed(keys_file, lineno, "unknown key '" + key + "'");
    r.path = join_path(audio_dir, r.utt_id + ext);
    r.dataset = DatasetKind::kAsvspoof21df;
    out.push_back(std::move(r));
  }
  check_unique(out, keys_file);
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back().push_back(c);
    }
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::map<std::string, size_t> header_columns(const std::string& file, const std::string& header) {
  std::map<std::string, size_t> cols;
  auto names = split_csv_line(header);
  for (size_t i = 0; i < names.size(); ++i)
    if (!cols.emplace(names[i], i).second) malformed(file, 1, "duplicate column '" + names[i] + "'");
  return cols;
}

}  // namespace

std::vector<UtteranceRecord> parse_inthewild_meta(const std::string& meta_csv,
                                                  const std::string& audio_dir) {
  auto in = open_text(meta_csv);
  std::string line;
  if (!std::getline(in, line)) malformed(meta_csv, 1, "missing header");
  strip_cr(line);
  auto cols = header_columns(meta_csv, line);
  if (!cols.count("file")) malformed(meta_csv, 1, "header lacks a 'file' column");
  if (!cols.count("label")) malformed(meta_csv, 1, "header lacks a 'label' column");
  const size_t fcol = cols["file"], lcol = cols["label"];
  std::vector<UtteranceRecord> out;
  int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() <= std::max(fcol, lcol)) malformed(meta_csv, lineno, "too few columns");
    if (f[fcol].empty()) malformed(meta_csv, lineno, "empty file column");
    UtteranceRecord r;
    r.utt_id = fs::path(f[fcol]).stem().string();
    if (!parse_label(f[lcol], &r.label)) malformed(meta_csv, lineno, "unknown label '" + f[lcol] + "'");
    r.path = join_path(audio_dir, f[fcol]);
    r.dataset = DatasetKind::kInTheWild;
    out.push_back(std::move(r));
  }
  check_unique(out, meta_csv);
  return out;
}

void write_manifest(const std::string& path, const std::vector<UtteranceRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path);
  out << "utt_id,path,label,dataset\n";
  for (const auto& r : records)
    out << csv_field(r.utt_id) << ',' << csv_field(r.path) << ',' << label_name(r.label) << ','
        << dataset_name(r.dataset) << '\n';
  if (!out) fail(ErrorKind::kIoError, "short write to " + path);
}

DatasetManifest read_manifest(const std::string& path) {
  auto in = open_text(path);
  std::string line;
  if (!std::getline(in, line)) malformed(path, 1, "missing header");
  strip_cr(line);
  auto cols = header_columns(path, line);
  for (const char* c : {"utt_id", "path", "label", "dataset"})
    if (!cols.count(c)) malformed(path, 1, std::string("header lacks '") + c + "'");
  const fs::path base = fs::path(path).parent_path();
  DatasetManifest m;
  m.path = path;
  int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() < cols.size()) malformed(path, lineno, "too few columns");
    UtteranceRecord r;
    r.utt_id = f[cols["utt_id"]];
    fs::path p = f[cols["path"]];
    r.path = p.is_absolute() ? p.string() : (base / p).string();
    if (!parse_label(f[cols["label"]], &r.label)) malformed(path, lineno, "unknown label");
    if (!parse_dataset(f[cols["dataset"]], &r.dataset)) malformed(path, lineno, "unknown dataset");
    m.records.push_back(std::move(r));
  }
  check_unique(m.records, path);
  return m;
}

std::pair<std::vector<UtteranceRecord>, std::vector<UtteranceRecord>> split(
    const std::vector<UtteranceRecord>& records, const SplitSpec& spec) {
  if (spec.n_train < 0 || spec.n_val < 0) fail(ErrorKind::kBadConfig, "split sizes must be >= 0");
  const auto n = static_cast<int64_t>(records.size());
  if (spec.n_train + spec.n_val > n)
    fail(ErrorKind::kInsufficientRecords, "split needs " + std::to_string(spec.n_train + spec.n_val) +
                                              " records, have " + std::to_string(n));
  std::vector<size_t> idx(records.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(derive_seed(spec.seed, "split"));
  rng.shuffle(idx);
  std::pair<std::vector<UtteranceRecord>, std::vector<UtteranceRecord>> out;
  for (int64_t i = 0; i < spec.n_train; ++i) out.first.push_back(records[idx[i]]);
  for (int64_t i = 0; i < spec.n_val; ++i) out.second.push_back(records[idx[spec.n_train + i]]);
  return out;
}

std::pair<int64_t, int64_t> class_counts(const std::vector<UtteranceRecord>& records) {
  int64_t bona = 0, spoof = 0;
  for (const auto& r : records) (r.label == Label::kBonafide ? bona : spoof)++;
  return {bona, spoof};
}

std::vector<UtteranceRecord> oversample(const std::vector<UtteranceRecord>& records, uint64_t seed) {
  const auto [bona, spoof] = class_counts(records);
  if (bona == 0 || spoof == 0) fail(ErrorKind::kSingleClass, "oversampling needs both classes");
  const Label minority = bona < spoof ? Label::kBonafide : Label::kSpoof;
  std::vector<size_t> pool;
  for (size_t i = 0; i < records.size(); ++i)
    if (records[i].label == minority) pool.push_back(i);
  std::vector<UtteranceRecord> out = records;
  Rng rng(derive_seed(seed, "oversample"));
  for (int64_t k = std::abs(bona - spoof); k > 0; --k) out.push_back(records[pool[rng.below(pool.size())]]);
  return out;
}

}  // namespace dfw::data
