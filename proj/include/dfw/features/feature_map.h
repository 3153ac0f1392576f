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

#include <string>
#include <string_view>

#include "dfw/nn/tensor.h"

namespace dfw::features {

enum class FrontendTag { kMfcc, kLfcc, kWhisper, kWhisperMfcc, kWhisperLfcc };

std::string_view tag_name(FrontendTag tag);
/// "mfcc", "lfcc", "whisper", "whisper+mfcc", "whisper+lfcc"
bool parse_tag(std::string_view text, FrontendTag* out);
bool uses_encoder(FrontendTag tag);

/// A (feature_dim x n_frames) grid.
struct FeatureMap {
  nn::Tensor values;
  FrontendTag tag = FrontendTag::kMfcc;
  std::string utt_id;

  int64_t rows() const { return values.size(0); }
  int64_t frames() const { return values.size(1); }
};

}  // namespace dfw::features
