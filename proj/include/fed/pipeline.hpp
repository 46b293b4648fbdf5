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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fed/backends/suite.hpp"
#include "fed/datamodel.hpp"
#include "fed/error.hpp"

namespace fed::pipeline {

using backends::ExpressionLabel;

// --- voting -------------------------------------------------------------------------------

/// Plurality label, or nullopt when the top count is shared (a Tie).
/// Throws PreconditionViolation on an empty list.
template <class Label>
std::optional<Label> vote(std::span<const Label> labels) {
  if (labels.empty()) throw Error(ErrorCode::PreconditionViolation, "vote over an empty list");
  std::vector<std::pair<Label, int>> counts;
  for (const Label& l : labels) {
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == l; });
    if (it == counts.end()) {
      counts.emplace_back(l, 1);
    } else {
      ++it->second;
    }
  }
  int best = 0;
  int holders = 0;
  std::optional<Label> winner;
  for (const auto& [label, n] : counts) {
    if (n > best) {
      best = n;
      holders = 1;
      winner = label;
    } else if (n == best) {
      ++holders;
    }
  }
  if (holders > 1) return std::nullopt;
  return winner;
}

/// Labels must all share one granularity. Throws MixedGranularity.
std::optional<ExpressionLabel> vote(std::span<const ExpressionLabel> labels);

struct VotingConfig {
  /// Classifier names, in order. Empty selects every configured classifier.
  std::vector<std::string> ensemble;
  LabelGranularity granularity = LabelGranularity::coarse;

  /// The configured classifiers this config selects. Throws ConfigError for unknown names
  /// or an ensemble that is not odd and at least 3.
  std::vector<backends::ExpressionClassifier*> select(const backends::BackendSuite& suite) const;
};

// --- records ---------------------------------------------------------------------------------

struct ClassifierVote {
  std::string classifier;              // BackendId::str()
  std::optional<ExpressionLabel> label;  // nullopt: abstained
  std::string note;                    // abstention reason

  friend bool operator==(const ClassifierVote&, const ClassifierVote&) = default;
};

struct CandidateRecord {
  std::string source_id;
  std::string candidate_id;  // "<source_id>/<trg_emotion>/<variant>"
  EmotionLabel trg_emotion = EmotionLabel::happy;
  std::uint32_t variant = 0;
  std::string instruction;
  ImageRef candidate;
  std::vector<ClassifierVote> votes;
  std::optional<ExpressionLabel> voted_label;
  bool passed_expression_filter = false;
  double s_id_raw = 0;
  double s_bg_raw = 0;
  double s_total = 0;
  std::optional<int> rank;
  bool retained = false;

  friend bool operator==(const CandidateRecord&, const CandidateRecord&) = default;
};

std::string candidate_id(std::string_view source_id, EmotionLabel trg, std::uint32_t variant);

struct VerificationCandidate {
  std::string candidate_id;
  ImageRef image;
  std::string reference_caption;

  friend bool operator==(const VerificationCandidate&, const VerificationCandidate&) = default;
};

/// One (source, target emotion) group handed to human verification.
struct VerificationTask {
  std::string task_id;  // "<source_id>:<trg_emotion>"
  std::string source_id;
  ImageRef source;
  EmotionLabel src_emotion = EmotionLabel::neutral;
  EmotionLabel trg_emotion = EmotionLabel::happy;
  std::string instruction;
  std::vector<VerificationCandidate> candidates;  // 1 or 2, best first

  friend bool operator==(const VerificationTask&, const VerificationTask&) = default;
};

enum class AuditAction { emit, drop, error };
std::string_view to_string(AuditAction a) noexcept;

struct AuditEntry {
  std::string source_id;
  std::string stage;
  AuditAction action = AuditAction::drop;
  std::string reason;
  std::optional<std::string> candidate_id;

  friend bool operator==(const AuditEntry&, const AuditEntry&) = default;
};

std::string to_record_line(const CandidateRecord& r);
std::string to_record_line(const VerificationTask& r);
std::string to_record_line(const AuditEntry& r);
void from_record_line(std::string_view line, CandidateRecord& r);
void from_record_line(std::string_view line, VerificationTask& r);
void from_record_line(std::string_view line, AuditEntry& r);
void validate(const CandidateRecord& r);
void validate(const VerificationTask& r);
void validate(const AuditEntry& r);

// --- stages ---------------------------------------------------------------------------------

struct GeneratedCandidate {
  CandidateRecord record;
  Image image;
};

struct GenerationFailure {
  EmotionLabel trg_emotion;
  std::uint32_t variant;
  std::string reason;
};

struct Generation {
  std::vector<GeneratedCandidate> candidates;
  std::vector<GenerationFailure> failures;
};

/// One edit per non-source emotion with the simple instruction. Editor failures are
/// collected; the other emotions proceed. `candidate.path` is left empty.
Generation generate_candidates(const SourceRecord& source, const Image& source_image,
                               backends::ImageEditor& editor, std::uint32_t variant,
                               const backends::CallContext& ctx);

/// Records one vote per ensemble member and decides the filter. Classifier failures become
/// abstentions; when the remaining votes are not an odd count of at least 3 the candidate
/// fails closed. Coarse mode passes on coarse_map(trg_emotion), fine mode on trg_emotion.
void expression_filter(CandidateRecord& candidate, const Image& image, const VotingConfig& config,
                       std::span<backends::ExpressionClassifier* const> classifiers,
                       const backends::CallContext& ctx);

struct RankWeights {
  double id = 1.0;
  double bg = 1.0;
};

struct RankInput {
  double cosine = 0;
  double rmse = 0;
  std::string content_hash;
  std::string candidate_id;
};

struct RankedEntry {
  std::size_t index = 0;  // into the input
  double norm_id = 0;
  double norm_bg = 0;
  double s_total = 0;
  int rank = 0;
};

inline constexpr int kRetainedPerGroup = 2;

/// (value - lo) / (hi - lo), or 1.0 when the range is empty.
double min_max(double value, double lo, double hi);

/// Group-local min-max of cosine and negated RMSE, weighted sum, sorted descending with
/// ties broken by content hash, then candidate id. Throws EmptyGroup.
std::vector<RankedEntry> rank_by_fidelity(std::span<const RankInput> group, const RankWeights& weights);

/// Scores one (source, trg_emotion) group against the source and flags the top two.
/// Raw scores, s_total, rank and retained are written into the records.
void fidelity_rank(const Image& source_image, std::span<CandidateRecord> group,
                   std::span<const Image* const> images, const backends::BackendSuite& suite,
                   const RankWeights& weights);

/// Difference-analysis instruction over (source, ground truth). Throws JudgeParseFailure.
std::string generate_dense_instruction(const Image& src, const Image& gt, backends::VisionJudge& judge,
                                       const backends::CallContext& ctx);

/// Objective expression description shown to verifiers next to a candidate.
std::string caption_candidate(const Image& candidate, backends::VisionJudge& judge,
                              const backends::CallContext& ctx);

// --- end to end ------------------------------------------------------------------------------

/// A source-screening predicate: returns a rejection reason, or nullopt to keep the source.
struct ScreeningHook {
  std::string name;
  std::function<std::optional<std::string>(const SourceRecord&, const Image&)> check;
};

ScreeningHook min_resolution_hook(int min_side);

struct PipelineConfig {
  VotingConfig voting;
  RankWeights weights;
  int candidates_per_emotion = 3;
  int min_resolution = 64;
  bool captions = true;
  int workers = 1;
  std::vector<ScreeningHook> extra_screens;

  void check() const;
};

struct PipelineRun {
  std::vector<VerificationTask> tasks;
  std::vector<CandidateRecord> candidates;
  std::vector<AuditEntry> audit;
  std::size_t generated = 0;
  std::size_t emitted = 0;
  std::size_t dropped = 0;
  std::size_t sources_done = 0;
  std::size_t sources_failed = 0;
};

/// Screening, candidate generation, expression filtering, fidelity ranking and captioning for
/// every source, then handoff to verification. Writes under `out_dir`:
///   candidates/<source_id>/<trg>_<variant>.png, candidates.jsonl, pending_verification.jsonl,
///   audit.jsonl.
/// Source image refs resolve against `sources_root`. Sources fail independently.
PipelineRun run_pipeline(std::span<const SourceRecord> sources, const std::filesystem::path& sources_root,
                         const PipelineConfig& config, const backends::BackendSuite& suite,
                         const std::filesystem::path& out_dir);

struct DensifyRun {
  std::vector<BenchmarkSample> samples;
  std::vector<std::string> failures;  // "<sample_id>: <reason>"
};

/// Fills dense_instruction for every sample that lacks one. Failed samples keep it absent.
DensifyRun densify_benchmark(std::span<const BenchmarkSample> samples, const std::filesystem::path& root,
                             const backends::BackendSuite& suite, int workers = 1);

}  // namespace fed::pipeline
