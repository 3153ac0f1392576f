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

#include "dfw/common/error.h"

namespace dfw {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnreadableFile: return "UnreadableFile";
    case ErrorKind::kEmptyAudio: return "EmptyAudio";
    case ErrorKind::kAllSilent: return "AllSilent";
    case ErrorKind::kBadConfig: return "BadConfig";
    case ErrorKind::kTooShort: return "TooShort";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kFrameMismatch: return "FrameMismatch";
    case ErrorKind::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::kMissingTensors: return "MissingTensors";
    case ErrorKind::kMalformedLine: return "MalformedLine";
    case ErrorKind::kDuplicateId: return "DuplicateId";
    case ErrorKind::kInsufficientRecords: return "InsufficientRecords";
    case ErrorKind::kSingleClass: return "SingleClass";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kEmptyHistory: return "EmptyHistory";
    case ErrorKind::kNotWhisperFrontend: return "NotWhisperFrontend";
    case ErrorKind::kConfigInvalid: return "ConfigInvalid";
    case ErrorKind::kIncompatibleCheckpoint: return "IncompatibleCheckpoint";
    case ErrorKind::kNonDifferentiableFrontend: return "NonDifferentiableFrontend";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
      kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace dfw
