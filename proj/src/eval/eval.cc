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

#include "dfw/eval/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "dfw/common/error.h"
#include "dfw/nn/ops.h"

namespace dfw::eval {

ScoreResult score_dataset(models::Detector& model, const whisper::Frontend& frontend,
                          const std::vector<data::UtteranceRecord>& records,
                          const train::ExampleOptions& opts, int64_t batch_size) {
  if (batch_size < 1) fail(ErrorKind::kBadConfig, "batch_size must be >= 1");
  train::ExampleOptions o = opts;
  o.features = true;
  o.stages = false;
  model.eval();
  ScoreResult out;
  std::vector<train::Example> pending;
  auto flush = [&] {
    if (pending.empty()) return;
    std::vector<const train::Example*> batch;
    for (const auto& e : pending) batch.push_back(&e);
    nn::NoGradGuard guard;
    nn::Tensor s = model.scores(train::batch_features(batch));
    for (size_t i = 0; i < pending.size(); ++i)
      out.scores.push_back({pending[i].utt_id, s.data()[i], pending[i].label});
    pending.clear();
  };
  for (const auto& r : records) {
    try {
      pending.push_back(train::make_example(r, frontend, o));
    } catch (const Error& e) {
      out.errors.push_back({r.utt_id, r.path, e.what()});
      continue;
    }
    if (!pending.empty() && (pending.back().frames != pending.front().frames ||
                             static_cast<int64_t>(pending.size()) >= batch_size)) {
      if (pending.back().frames != pending.front().frames) {
        train::Example last = std::move(pending.back());
        pending.pop_back();
        flush();
        pending.push_back(std::move(last));
      } else {
        flush();
      }
    }
  }
  flush();
  return out;
}

namespace {

void counts(const std::vector<ScoreRecord>& s, int64_t* bona, int64_t* spoof) {
  *bona = *spoof = 0;
  for (const auto& r : s) {
    if (!std::isfinite(r.score)) fail(ErrorKind::kBadConfig, "non-finite score for " + r.utt_id);
    (r.label == Label::kSpoof ? *spoof : *bona)++;
  }
  if (*bona == 0 || *spoof == 0) fail(ErrorKind::kSingleClass, "EER needs both classes");
}

// Point of the segment (far0, frr0) -> (far1, frr1) where FAR == FRR.
double crossing(double far0, double frr0, double far1, double frr1, double* t_out) {
  const double d0 = far0 - frr0, d1 = far1 - frr1;
  const double t = d1 == d0 ? 0.0 : -d0 / (d1 - d0);
  *t_out = t;
  return far0 + t * (far1 - far0);
}

}  // namespace

EvalReport compute_eer(const std::vector<ScoreRecord>& scores) {
  EvalReport rep;
  counts(scores, &rep.n_bonafide, &rep.n_spoof);
  std::vector<std::pair<double, bool>> v;  // (score, is_spoof)
  for (const auto& r : scores) v.emplace_back(r.score, r.label == Label::kSpoof);
  std::sort(v.begin(), v.end());
  const double ns = static_cast<double>(rep.n_spoof), nb = static_cast<double>(rep.n_bonafide);
  // Vertex k: threshold just above the k-th distinct score group.
  double far = 0.0, frr = 1.0, thr = v.front().first;
  int64_t spoof_below = 0, bona_below = 0;
  size_t i = 0;
  while (true) {
    if (far - frr >= 0.0) {
      rep.eer = far;
      rep.threshold = thr;
      return rep;
    }
    const double score = v[i].first;
    while (i < v.size() && v[i].first == score) (v[i++].second ? spoof_below : bona_below)++;
    const double nfar = static_cast<double>(spoof_below) / ns;
    const double nfrr = static_cast<double>(nb - static_cast<double>(bona_below)) / nb;
    const double nthr = i < v.size() ? 0.5 * (score + v[i].first) : score;
    if (nfar - nfrr >= 0.0) {
      double t;
      rep.eer = crossing(far, frr, nfar, nfrr, &t);
      rep.threshold = thr + t * (nthr - thr);
      return rep;
    }
    far = nfar;
    frr = nfrr;
    thr = nthr;
  }
}

double eer_bruteforce(const std::vector<ScoreRecord>& scores) {
  int64_t nb_i, ns_i;
  counts(scores, &nb_i, &ns_i);
  std::vector<double> uniq;
  for (const auto& r : scores) uniq.push_back(r.score);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<double> thresholds{-std::numeric_limits<double>::infinity()};
  for (size_t k = 0; k + 1 < uniq.size(); ++k) thresholds.push_back(0.5 * (uniq[k] + uniq[k + 1]));
  thresholds.push_back(std::numeric_limits<double>::infinity());
  std::vector<double> far, frr;
  for (double t : thresholds) {
    int64_t fa = 0, fr = 0;
    for (const auto& r : scores) {
      if (r.label == Label::kSpoof && r.score < t) ++fa;
      if (r.label == Label::kBonafide && r.score >= t) ++fr;
    }
    far.push_back(static_cast<double>(fa) / static_cast<double>(ns_i));
    frr.push_back(static_cast<double>(fr) / static_cast<double>(nb_i));
  }
  for (size_t k = 0; k < thresholds.size(); ++k) {
    if (far[k] - frr[k] < 0.0) continue;
    if (k == 0) return far[0];
    double t;
    return crossing(far[k - 1], frr[k - 1], far[k], frr[k], &t);
  }
  return far.back();
}

namespace {

void sort_reports(std::vector<EvalReport>& r) {
  std::stable_sort(r.begin(), r.end(), [](const EvalReport& a, const EvalReport& b) {
    return std::tie(a.model, a.frontend, a.dataset) < std::tie(b.model, b.frontend, b.dataset);
  });
}

}  // namespace

std::string render_report(std::vector<EvalReport> reports) {
  sort_reports(reports);
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-14s %-14s %8s %10s %10s\n", "model", "frontend", "dataset",
                "EER", "bonafide", "spoof");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-10s %-14s %-14s %8.4f %10lld %10lld\n", r.model.c_str(),
                  r.frontend.c_str(), r.dataset.c_str(), r.eer, static_cast<long long>(r.n_bonafide),
                  static_cast<long long>(r.n_spoof));
    out << line;
  }
  return out.str();
}

std::string render_report_csv(std::vector<EvalReport> reports) {
  sort_reports(reports);
  std::ostringstream out;
  out << "model,frontend,dataset,eer,threshold,n_bonafide,n_spoof\n";
  char line[256];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%s,%s,%s,%.4f,%.6f,%lld,%lld\n", r.model.c_str(), r.frontend.c_str(),
                  r.dataset.c_str(), r.eer, r.threshold, static_cast<long long>(r.n_bonafide),
                  static_cast<long long>(r.n_spoof));
    out << line;
  }
  return out.str();
}

void write_scores(const std::string& path, const std::vector<ScoreRecord>& scores) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path);
  char buf[64];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%.17g", s.score);
    out << s.utt_id << ' ' << buf << ' ' << label_name(s.label) << '\n';
  }
  if (!out) fail(ErrorKind::kIoError, "short write to " + path);
}

std::vector<ScoreRecord> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kUnreadableFile, "cannot open " + path);
  std::vector<ScoreRecord> out;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    ScoreRecord r;
    std::string label;
    if (!(ss >> r.utt_id >> r.score >> label) || !parse_label(label, &r.label))
      fail(ErrorKind::kMalformedLine, path + ":" + std::to_string(lineno) + ": expected 'utt_id score label'");
    out.push_back(r);
  }
  return out;
}

void write_error_log(const std::string& path, const std::vector<ErrorEntry>& errors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path);
  for (const auto& e : errors) out << e.utt_id << '\t' << e.path << '\t' << e.message << '\n';
}

}  // namespace dfw::eval
