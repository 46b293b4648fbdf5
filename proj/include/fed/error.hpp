// Copyright 2026 The FED Toolkit Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fed {

/// Machine-readable failure categories shared by every module.
enum class ErrorCode {
  // data model
  MalformedRecord,
  InvariantViolation,
  MissingFile,
  WriteFailure,
  SameEmotion,
  UnknownLabel,
  // backends
  NoFaceFound,
  BackendUnavailable,
  ShapeMismatch,
  JudgeParseFailure,
  ClassifierParseFailure,
  EditorFailure,
  CacheCorruption,
  // metrics
  EmptyBackground,
  DegenerateGroundTruth,
  PreconditionViolation,
  // pipeline
  MixedGranularity,
  EmptyGroup,
  // human study
  InsufficientResults,
  WrongVoteCount,
  DuplicateAnnotator,
  NonFiniteValue,
  MissingConsensus,
  UnknownVariant,
  // annotation service
  UnknownAnnotator,
  UnknownTask,
  DuplicateVote,
  TaskClosed,
  PendingTasks,
  // cli
  UsageError,
  ConfigError,
  MissingImage,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fed
