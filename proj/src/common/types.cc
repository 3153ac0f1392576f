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

#include "dfw/common/types.h"

#include <algorithm>
#include <cctype>

namespace dfw {

std::string_view label_name(Label label) {
  return label == Label::kSpoof ? "spoof" : "bonafide";
}

bool parse_label(std::string_view text, Label* out) {
  std::string t;
  for (char c : text)
    if (c != '-' && c != ' ' && c != '_') t.push_back(static_cast<char>(std::tolower(c)));
  if (t == "bonafide") {
    *out = Label::kBonafide;
    return true;
  }
  if (t == "spoof" || t == "fake") {
    *out = Label::kSpoof;
    return true;
  }
  return false;
}

}  // namespace dfw
