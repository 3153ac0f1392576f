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

#include "dfw/features/feature_map.h"

namespace dfw::features {

std::string_view tag_name(FrontendTag tag) {
  switch (tag) {
    case FrontendTag::kMfcc: return "mfcc";
    case FrontendTag::kLfcc: return "lfcc";
    case FrontendTag::kWhisper: return "whisper";
    case FrontendTag::kWhisperMfcc: return "whisper+mfcc";
    case FrontendTag::kWhisperLfcc: return "whisper+lfcc";
  }
  return "?";
}

bool parse_tag(std::string_view text, FrontendTag* out) {
  for (FrontendTag t : {FrontendTag::kMfcc, FrontendTag::kLfcc, FrontendTag::kWhisper,
                        FrontendTag::kWhisperMfcc, FrontendTag::kWhisperLfcc}) {
    if (tag_name(t) == text) {
      *out = t;
      return true;
    }
  }
  return false;
}

bool uses_encoder(FrontendTag tag) {
  return tag == FrontendTag::kWhisper || tag == FrontendTag::kWhisperMfcc ||
         tag == FrontendTag::kWhisperLfcc;
}

}  // namespace dfw::features
