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

#include <stdexcept>
#include <string>
#include <string_view>

namespace dfw {

enum class ErrorKind {
  kUnreadableFile,
  kEmptyAudio,
  kAllSilent,
  kBadConfig,
  kTooShort,
  kShapeMismatch,
  kFrameMismatch,
  kChecksumMismatch,
  kMissingTensors,
  kMalformedLine,
  kDuplicateId,
  kInsufficientRecords,
  kSingleClass,
  kIoError,
  kNonFiniteLoss,
  kEmptyHistory,
  kNotWhisperFrontend,
  kConfigInvalid,
  kIncompatibleCheckpoint,
  kNonDifferentiableFrontend,
};

std::string_view error_kind_name(ErrorKind kind);

/// Every failure the toolkit reports carries one of the kinds above so that
/// callers (and the CLI exit path) can branch on it without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace dfw
