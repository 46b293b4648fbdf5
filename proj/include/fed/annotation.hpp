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

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fed/datamodel.hpp"
#include "fed/humanstudy.hpp"
#include "fed/pipeline.hpp"

namespace fed::annotation {

enum class TaskKind { verification, pairwise };
enum class VerificationChoice { candidate_1, candidate_2, reject_both };

std::string_view to_string(TaskKind k) noexcept;
std::string_view to_string(VerificationChoice c) noexcept;
TaskKind parse_task_kind(std::string_view text);
VerificationChoice parse_verification_choice(std::string_view text);

struct VerificationVote {
  std::string task_id;
  std::string annotator_id;
  VerificationChoice choice = VerificationChoice::candidate_1;
  std::string timestamp;

  friend bool operator==(const VerificationVote&, const VerificationVote&) = default;
};

std::string to_record_line(const VerificationVote& r);
void from_record_line(std::string_view line, VerificationVote& r);
void validate(const VerificationVote& r);

enum class Outcome { open, accepted, rejected, unresolved };
std::string_view to_string(Outcome o) noexcept;

struct VerificationOutcome {
  Outcome outcome = Outcome::open;
  std::optional<std::size_t> chosen;  // candidate index when accepted
};

/// Plurality over exactly three votes by distinct annotators; a 1-1-1 split is unresolved.
/// Throws WrongVoteCount, DuplicateAnnotator.
VerificationOutcome finalize_verification(std::span<const VerificationVote> votes);

/// "<pair_id>/<perspective>"
std::string pairwise_unit_id(std::string_view pair_id, study::Perspective p);

inline constexpr std::size_t kVotesPerTask = 3;

struct Progress {
  std::size_t verification_total = 0;
  std::size_t verification_closed = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t unresolved = 0;
  std::size_t pairwise_total = 0;
  std::size_t pairwise_closed = 0;
  std::size_t votes = 0;
};

struct Ack {
  std::string unit_id;
  std::size_t votes = 0;
  bool closed = false;
  bool duplicate = false;
};

/// What an annotator is shown next. Exactly one of `verification` / `pair` is set.
struct NextTask {
  TaskKind kind = TaskKind::verification;
  std::string unit_id;
  std::size_t votes = 0;
  const pipeline::VerificationTask* verification = nullptr;
  const study::PairTask* pair = nullptr;
  study::Perspective perspective = study::Perspective::overall;
};

struct ExportSummary {
  std::vector<BenchmarkSample> samples;
  std::vector<pipeline::AuditEntry> audit;
  std::filesystem::path manifest;
};

/// Verification and 2AFC task state backed by an append-only vote log in `data_dir`:
///   pending_verification.jsonl  verification tasks (optional)
///   pairs.jsonl                 2AFC pairs (optional)
///   annotators.txt              registered annotator ids, one per line
///   votes.log                   every accepted vote, in order
///   state.json                  snapshot derived from the log after each vote
/// Opening replays the log. All methods are thread-safe.
class AnnotationStore {
 public:
  using Clock = std::function<std::string()>;

  explicit AnnotationStore(std::filesystem::path data_dir, Clock clock = {});

  const std::filesystem::path& data_dir() const { return data_dir_; }

  void register_annotator(const std::string& annotator_id);
  bool has_annotator(const std::string& annotator_id) const;

  /// An open unit the annotator has not voted on: fewest votes first, then unit id.
  /// Throws UnknownAnnotator.
  std::optional<NextTask> next_task(const std::string& annotator_id, TaskKind kind) const;

  /// Throws UnknownAnnotator, UnknownTask, TaskClosed, DuplicateVote, InvariantViolation.
  Ack record_vote(VerificationVote vote);
  Ack record_vote(study::PreferenceVote vote);

  Progress progress() const;
  VerificationOutcome outcome(const std::string& task_id) const;
  std::vector<VerificationVote> verification_votes(const std::string& task_id) const;
  std::vector<study::PreferenceVote> pairwise_votes() const;
  std::optional<study::Choice> pairwise_consensus(const std::string& unit_id) const;

  /// Benchmark samples for accepted tasks, plus an audit entry for every task left out.
  /// Open or unresolved tasks not listed in `exclude` throw PendingTasks unless `partial`.
  /// Image paths in the manifest are relative to its directory.
  ExportSummary export_verified(const std::filesystem::path& out, bool partial = false,
                                const std::set<std::string>& exclude = {}) const;

  /// The raw vote log, for replay tests.
  std::string vote_log() const;
  /// Derived state as a JSON document (also written to state.json).
  std::string state_json() const;

  /// Sample id derived from a verification task id: "<source_id>-<trg_emotion>".
  static std::string sample_id_for(const pipeline::VerificationTask& task);

 private:
  struct VerificationState {
    pipeline::VerificationTask task;
    std::vector<VerificationVote> votes;
    VerificationOutcome result;
  };
  struct PairwiseState {
    const study::PairTask* pair = nullptr;
    study::Perspective perspective = study::Perspective::overall;
    std::vector<study::PreferenceVote> votes;
    std::optional<study::Choice> result;
  };

  Ack apply(VerificationVote vote, bool persist);
  Ack apply(study::PreferenceVote vote, bool persist);
  void replay();
  void persist_line(const std::string& line);
  std::string state_json_locked() const;
  void require_annotator(const std::string& id) const;

  std::filesystem::path data_dir_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::set<std::string> annotators_;
  std::map<std::string, VerificationState> verification_;
  std::vector<study::PairTask> pairs_;
  std::map<std::string, PairwiseState> pairwise_;
  std::string log_;
};

struct ServerOptions {
  /// Served at "/" when set (the browser UI bundle).
  std::optional<std::filesystem::path> static_dir;
  /// Secret mixed into image tokens. Random when empty.
  std::string token_secret;
};

/// HTTP front end over an AnnotationStore:
///   GET  /api/tasks/next?annotator=<id>&kind=verification|pairwise
///   POST /api/votes
///   GET  /api/progress
///   GET  /api/image/<token>
///   POST /api/export
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, ServerOptions options = {});
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds to an ephemeral port and returns it (0 on failure).
  int bind_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fed::annotation
