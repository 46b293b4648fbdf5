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

#include "fed/error.hpp"

namespace fed {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::WriteFailure: return "WriteFailure";
    case ErrorCode::SameEmotion: return "SameEmotion";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::NoFaceFound: return "NoFaceFound";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::JudgeParseFailure: return "JudgeParseFailure";
    case ErrorCode::ClassifierParseFailure: return "ClassifierParseFailure";
    case ErrorCode::EditorFailure: return "EditorFailure";
    case ErrorCode::CacheCorruption: return "CacheCorruption";
    case ErrorCode::EmptyBackground: return "EmptyBackground";
    case ErrorCode::DegenerateGroundTruth: return "DegenerateGroundTruth";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::MixedGranularity: return "MixedGranularity";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::InsufficientResults: return "InsufficientResults";
    case ErrorCode::WrongVoteCount: return "WrongVoteCount";
    case ErrorCode::DuplicateAnnotator: return "DuplicateAnnotator";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MissingConsensus: return "MissingConsensus";
    case ErrorCode::UnknownVariant: return "UnknownVariant";
    case ErrorCode::UnknownAnnotator: return "UnknownAnnotator";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::DuplicateVote: return "DuplicateVote";
    case ErrorCode::TaskClosed: return "TaskClosed";
    case ErrorCode::PendingTasks: return "PendingTasks";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingImage: return "MissingImage";
  }
  return "Unknown";
}

}  // namespace fed
