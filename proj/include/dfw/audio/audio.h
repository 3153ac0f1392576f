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
#include <optional>
#include <string>
#include <vector>

#include "dfw/common/types.h"

namespace dfw::audio {

inline constexpr int kSampleRate = 16000;
inline constexpr double kClipSeconds = 30.0;
inline constexpr int64_t kClipSamples = 480000;

/// Waveform in [-1, 1]. Multi-channel audio is interleaved.
struct AudioClip {
  std::vector<double> samples;
  int rate = 0;
  int channels = 1;
  std::string utt_id;
  std::optional<Label> label;

  int64_t frames() const { return channels > 0 ? static_cast<int64_t>(samples.size()) / channels : 0; }
  double seconds() const { return rate > 0 ? static_cast<double>(frames()) / rate : 0.0; }
};

struct SilencePolicy {
  double min_silence_s = 0.2;
  double energy_floor_db = -60.0;  // frame RMS, dB relative to full scale
  double frame_ms = 20.0;

  void validate() const;
};

struct PreprocessConfig {
  int rate = kSampleRate;
  double target_s = kClipSeconds;
  SilencePolicy silence;

  int64_t target_samples() const;
  void validate() const;
  /// Stable hash of every field, used as a cache key.
  uint64_t hash() const;
};

/// Decodes any container FFmpeg understands (at least wav and flac).
AudioClip load_audio(const std::string& path);
/// Writes 16-bit PCM (or 32-bit float when `float32`) RIFF/WAVE.
void write_wav(const std::string& path, const AudioClip& clip, bool float32 = false);

AudioClip to_mono(const AudioClip& clip);
/// Band-limited (Kaiser-windowed sinc) resampling. Same rate is an exact copy.
AudioClip resample(const AudioClip& clip, int target_rate);

/// Per-frame silence decision (true = below the floor), frames of
/// `frame_ms`; the last frame may be partial.
std::vector<bool> silent_frames(const AudioClip& clip, const SilencePolicy& policy);
/// Removes every run of silent frames lasting longer than min_silence_s.
/// With `cyclic`, the leading and trailing runs are also removed when together
/// they exceed the limit (they become adjacent once the clip is tiled).
/// Throws AllSilent when nothing would remain.
AudioClip trim_silences(const AudioClip& clip, const SilencePolicy& policy, bool cyclic = false);
/// Tiles (or truncates) to exactly round(target_s * rate) samples.
AudioClip fit_duration(const AudioClip& clip, double target_s = kClipSeconds);

/// to_mono -> resample -> trim_silences -> fit_duration, iterated to a fixed
/// point so that the result is reproduced exactly when fed back in. Samples
/// are rounded to float32 precision (the cache format). AllSilent input skips
/// trimming.
AudioClip preprocess_clip(const AudioClip& clip, const PreprocessConfig& cfg = {});
AudioClip preprocess(const std::string& path, const PreprocessConfig& cfg = {});

/// Directory of preprocessed clips stored as raw little-endian float32,
/// keyed by utt_id and the preprocessing hash.
class ClipCache {
 public:
  explicit ClipCache(std::string dir) : dir_(std::move(dir)) {}
  std::optional<AudioClip> load(const std::string& utt_id, const PreprocessConfig& cfg) const;
  void store(const AudioClip& clip, const PreprocessConfig& cfg) const;
  std::string path_for(const std::string& utt_id, const PreprocessConfig& cfg) const;

 private:
  std::string dir_;
};

/// preprocess() through an optional cache (empty dir disables it).
AudioClip preprocess_cached(const std::string& path, const std::string& utt_id,
                            const PreprocessConfig& cfg, const std::string& cache_dir);

}  // namespace dfw::audio
