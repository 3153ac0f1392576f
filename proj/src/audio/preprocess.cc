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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dfw/audio/audio.h"
#include "dfw/common/error.h"
#include "dfw/common/rng.h"

namespace dfw::audio {
namespace {

constexpr int kMaxFixedPointRounds = 16;

int64_t frame_length(const SilencePolicy& policy, int rate) {
  return std::max<int64_t>(1, std::llround(policy.frame_ms * rate / 1000.0));
}

struct Run {
  int64_t first_frame, last_frame;  // inclusive
  int64_t begin, end;               // samples
};

std::vector<Run> silent_runs(const std::vector<bool>& silent, int64_t frame, int64_t n) {
  std::vector<Run> runs;
  const int64_t nf = static_cast<int64_t>(silent.size());
  for (int64_t f = 0; f < nf;) {
    if (!silent[f]) {
      ++f;
      continue;
    }
    int64_t g = f;
    while (g + 1 < nf && silent[g + 1]) ++g;
    runs.push_back({f, g, f * frame, std::min(n, (g + 1) * frame)});
    f = g + 1;
  }
  return runs;
}

AudioClip trim_or_keep(const AudioClip& clip, const SilencePolicy& policy, bool cyclic) {
  try {
    return trim_silences(clip, policy, cyclic);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kAllSilent) throw;
    return clip;
  }
}

}  // namespace

void SilencePolicy::validate() const {
  if (!(min_silence_s > 0) || !(frame_ms > 0) || !std::isfinite(energy_floor_db))
    fail(ErrorKind::kBadConfig, "silence policy needs min_silence_s > 0 and frame_ms > 0");
}

void PreprocessConfig::validate() const {
  silence.validate();
  if (rate <= 0 || !(target_s > 0)) fail(ErrorKind::kBadConfig, "preprocess: bad rate/target");
}

int64_t PreprocessConfig::target_samples() const { return std::llround(target_s * rate); }

uint64_t PreprocessConfig::hash() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "rate=%d;target_s=%.17g;min_silence_s=%.17g;floor_db=%.17g;frame_ms=%.17g",
                rate, target_s, silence.min_silence_s, silence.energy_floor_db, silence.frame_ms);
  return fnv1a64(buf);
}

AudioClip to_mono(const AudioClip& clip) {
  if (clip.channels <= 1) return clip;
  AudioClip out = clip;
  const int64_t n = clip.frames();
  out.channels = 1;
  out.samples.assign(static_cast<size_t>(n), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int c = 0; c < clip.channels; ++c) acc += clip.samples[i * clip.channels + c];
    out.samples[i] = acc / clip.channels;
  }
  return out;
}

std::vector<bool> silent_frames(const AudioClip& clip, const SilencePolicy& policy) {
  policy.validate();
  if (clip.channels != 1) fail(ErrorKind::kBadConfig, "silence detection needs mono audio");
  const int64_t frame = frame_length(policy, clip.rate);
  const int64_t n = clip.frames();
  const double floor_rms = std::pow(10.0, policy.energy_floor_db / 20.0);
  std::vector<bool> silent;
  for (int64_t start = 0; start < n; start += frame) {
    const int64_t stop = std::min(n, start + frame);
    double energy = 0.0;
    for (int64_t i = start; i < stop; ++i) energy += clip.samples[i] * clip.samples[i];
    silent.push_back(std::sqrt(energy / static_cast<double>(stop - start)) < floor_rms);
  }
  return silent;
}

AudioClip trim_silences(const AudioClip& clip, const SilencePolicy& policy, bool cyclic) {
  const auto silent = silent_frames(clip, policy);
  const int64_t frame = frame_length(policy, clip.rate);
  const int64_t n = clip.frames();
  const double limit = policy.min_silence_s * clip.rate;  // samples
  const auto runs = silent_runs(silent, frame, n);
  std::vector<bool> drop(runs.size(), false);
  for (size_t r = 0; r < runs.size(); ++r)
    drop[r] = static_cast<double>(runs[r].end - runs[r].begin) > limit;
  if (cyclic && runs.size() >= 2 && runs.front().begin == 0 && runs.back().end == n) {
    const double joined = static_cast<double>((runs.front().end - runs.front().begin) +
                                              (runs.back().end - runs.back().begin));
    if (joined > limit) drop.front() = drop.back() = true;
  }
  AudioClip out = clip;
  out.samples.clear();
  int64_t cursor = 0;
  for (size_t r = 0; r < runs.size(); ++r) {
    if (!drop[r]) continue;
    out.samples.insert(out.samples.end(), clip.samples.begin() + cursor,
                       clip.samples.begin() + runs[r].begin);
    cursor = runs[r].end;
  }
  out.samples.insert(out.samples.end(), clip.samples.begin() + cursor, clip.samples.end());
  if (out.samples.empty()) fail(ErrorKind::kAllSilent, "clip '" + clip.utt_id + "' is all silence");
  return out;
}

AudioClip fit_duration(const AudioClip& clip, double target_s) {
  if (clip.channels != 1 || clip.samples.empty())
    fail(ErrorKind::kBadConfig, "fit_duration needs a non-empty mono clip");
  const int64_t target = std::llround(target_s * clip.rate);
  AudioClip out = clip;
  out.samples.resize(static_cast<size_t>(target));
  const int64_t n = clip.frames();
  for (int64_t i = n; i < target; ++i) out.samples[i] = clip.samples[i % n];
  return out;
}

AudioClip preprocess_clip(const AudioClip& clip, const PreprocessConfig& cfg) {
  cfg.validate();
  if (clip.samples.empty()) fail(ErrorKind::kEmptyAudio, "clip '" + clip.utt_id + "' is empty");
  AudioClip c = resample(to_mono(clip), cfg.rate);
  // Round once, before any sample selection, so later passes only move values.
  for (double& v : c.samples) v = static_cast<double>(static_cast<float>(v));
  const int64_t target = cfg.target_samples();
  AudioClip y = fit_duration(trim_or_keep(c, cfg.silence, c.frames() < target), cfg.target_s);
  for (int round = 0; round < kMaxFixedPointRounds; ++round) {
    AudioClip t = trim_or_keep(y, cfg.silence, false);
    if (t.samples.size() == y.samples.size()) break;
    y = fit_duration(trim_or_keep(t, cfg.silence, true), cfg.target_s);
  }
  return y;
}

AudioClip preprocess(const std::string& path, const PreprocessConfig& cfg) {
  return preprocess_clip(load_audio(path), cfg);
}

std::string ClipCache::path_for(const std::string& utt_id, const PreprocessConfig& cfg) const {
  std::string safe = utt_id;
  for (char& ch : safe)
    if (ch == '/' || ch == '\\' || ch == ':') ch = '_';
  return (std::filesystem::path(dir_) / (safe + "." + hex64(cfg.hash()) + ".f32")).string();
}

std::optional<AudioClip> ClipCache::load(const std::string& utt_id,
                                         const PreprocessConfig& cfg) const {
  std::ifstream in(path_for(utt_id, cfg), std::ios::binary);
  if (!in) return std::nullopt;
  const int64_t n = cfg.target_samples();
  std::vector<float> buf(static_cast<size_t>(n));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 4));
  if (in.gcount() != n * 4 || in.peek() != std::char_traits<char>::eof()) return std::nullopt;
  AudioClip clip;
  clip.rate = cfg.rate;
  clip.utt_id = utt_id;
  clip.samples.assign(buf.begin(), buf.end());
  return clip;
}

void ClipCache::store(const AudioClip& clip, const PreprocessConfig& cfg) const {
  std::filesystem::create_directories(dir_);
  const std::string path = path_for(clip.utt_id, cfg);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::kIoError, "cannot write cache file " + tmp);
    std::vector<float> buf(clip.samples.begin(), clip.samples.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * 4));
    if (!out) fail(ErrorKind::kIoError, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

AudioClip preprocess_cached(const std::string& path, const std::string& utt_id,
                            const PreprocessConfig& cfg, const std::string& cache_dir) {
  if (!cache_dir.empty()) {
    ClipCache cache(cache_dir);
    if (auto hit = cache.load(utt_id, cfg)) return *hit;
    AudioClip clip = preprocess(path, cfg);
    clip.utt_id = utt_id;
    cache.store(clip, cfg);
    return clip;
  }
  AudioClip clip = preprocess(path, cfg);
  clip.utt_id = utt_id;
  return clip;
}

}  // namespace dfw::audio
