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

#include "fed/annotation.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "fed/error.hpp"
#include "fed/hashing.hpp"
#include "fed/manifest.hpp"
#include "json_util.hpp"

namespace fed::annotation {

namespace fs = std::filesystem;
using detail::json;
using fed::to_string;
using study::to_string;

namespace {

constexpr std::string_view kVoteSchema = "fed.vote.v1";

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view to_string(TaskKind k) noexcept { return k == TaskKind::verification ? "verification" : "pairwise"; }

std::string_view to_string(VerificationChoice c) noexcept {
  switch (c) {
    case VerificationChoice::candidate_1: return "candidate_1";
    case VerificationChoice::candidate_2: return "candidate_2";
    case VerificationChoice::reject_both: return "reject_both";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "verification") return TaskKind::verification;
  if (text == "pairwise") return TaskKind::pairwise;
  throw Error(ErrorCode::UsageError, fmt::format("unknown task kind '{}' (verification or pairwise)", text));
}

VerificationChoice parse_verification_choice(std::string_view text) {
  for (auto c : {VerificationChoice::candidate_1, VerificationChoice::candidate_2, VerificationChoice::reject_both}) {
    if (to_string(c) == text) return c;
  }
  throw Error(ErrorCode::UnknownLabel,
              fmt::format("unknown verification choice '{}' (candidate_1, candidate_2 or reject_both)", text));
}

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::open: return "open";
    case Outcome::accepted: return "accepted";
    case Outcome::rejected: return "rejected";
    case Outcome::unresolved: return "unresolved";
  }
  return "?";
}

std::string to_record_line(const VerificationVote& r) {
  json j{{"schema", kVoteSchema},
         {"kind", "verification"},
         {"task_id", r.task_id},
         {"annotator_id", r.annotator_id},
         {"choice", to_string(r.choice)}};
  if (!r.timestamp.empty()) j["timestamp"] = r.timestamp;
  return j.dump();
}

void from_record_line(std::string_view line, VerificationVote& r) {
  const json j = detail::parse_object(line);
  detail::check_schema(j, kVoteSchema);
  if (detail::field<std::string>(j, "kind") != "verification") {
    throw Error(ErrorCode::MalformedRecord, "not a verification vote");
  }
  r = VerificationVote{};
  r.task_id = detail::field<std::string>(j, "task_id");
  r.annotator_id = detail::field<std::string>(j, "annotator_id");
  r.choice = detail::parse_label_field(j, "choice", parse_verification_choice);
  r.timestamp = detail::optional_field<std::string>(j, "timestamp").value_or("");
}

void validate(const VerificationVote& r) {
  if (r.task_id.empty() || r.annotator_id.empty()) {
    throw Error(ErrorCode::InvariantViolation, "vote without task_id or annotator_id");
  }
}

VerificationOutcome finalize_verification(std::span<const VerificationVote> votes) {
  if (votes.size() != kVotesPerTask) {
    throw Error(ErrorCode::WrongVoteCount, fmt::format("finalize needs exactly 3 votes, got {}", votes.size()));
  }
  std::set<std::string> annotators;
  int counts[3] = {0, 0, 0};
  for (const auto& v : votes) {
    if (!annotators.insert(v.annotator_id).second) {
      throw Error(ErrorCode::DuplicateAnnotator, fmt::format("{}: annotator '{}' voted twice", v.task_id, v.annotator_id));
    }
    ++counts[static_cast<int>(v.choice)];
  }
  for (int c = 0; c < 3; ++c) {
    if (counts[c] < 2) continue;
    const auto choice = static_cast<VerificationChoice>(c);
    if (choice == VerificationChoice::reject_both) return {Outcome::rejected, std::nullopt};
    return {Outcome::accepted, static_cast<std::size_t>(c)};
  }
  return {Outcome::unresolved, std::nullopt};
}

std::string pairwise_unit_id(std::string_view pair_id, study::Perspective p) {
  return fmt::format("{}/{}", pair_id, to_string(p));
}

// --- store ---------------------------------------------------------------------------------

AnnotationStore::AnnotationStore(fs::path data_dir, Clock clock) : data_dir_(std::move(data_dir)), clock_(std::move(clock)) {
  if (!clock_) clock_ = utc_now;
  if (!fs::is_directory(data_dir_)) {
    throw Error(ErrorCode::MissingFile, fmt::format("annotation data directory '{}' does not exist", data_dir_.string()));
  }
  if (fs::exists(data_dir_ / "pending_verification.jsonl")) {
    for (auto& t : load_records<pipeline::VerificationTask>(data_dir_ / "pending_verification.jsonl")) {
      const std::string id = t.task_id;
      if (!verification_.emplace(id, VerificationState{std::move(t), {}, {}}).second) {
        throw Error(ErrorCode::InvariantViolation, fmt::format("duplicate verification task '{}'", id));
      }
    }
  }
  if (fs::exists(data_dir_ / "pairs.jsonl")) {
    pairs_ = load_records<study::PairTask>(data_dir_ / "pairs.jsonl");
    for (const auto& p : pairs_) {
      for (auto persp : p.perspectives) {
        if (!pairwise_.emplace(pairwise_unit_id(p.pair_id, persp), PairwiseState{&p, persp, {}, {}}).second) {
          throw Error(ErrorCode::InvariantViolation, fmt::format("duplicate pair '{}'", p.pair_id));
        }
      }
    }
  }
  if (fs::exists(data_dir_ / "annotators.txt")) {
    std::ifstream in(data_dir_ / "annotators.txt");
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (!line.empty() && line[0] != '#') annotators_.insert(line);
    }
  }
  replay();
}

void AnnotationStore::replay() {
  const fs::path path = data_dir_ / "votes.log";
  if (!fs::exists(path)) return;
  const std::string text = read_file_bytes(path.string());
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    const bool complete = end != std::string::npos;
    const std::string line = text.substr(pos, complete ? end - pos : std::string::npos);
    ++line_no;
    try {
      if (!trim(line).empty()) {
        const json j = detail::parse_object(line);
        if (detail::field<std::string>(j, "kind") == "verification") {
          VerificationVote v;
          from_record_line(line, v);
          apply(std::move(v), false);
        } else {
          study::PreferenceVote v;
          study::from_record_line(line, v);
          apply(std::move(v), false);
        }
        log_ += line;
        log_ += '\n';
      }
    } catch (const Error& e) {
      if (!complete && e.code() == ErrorCode::MalformedRecord) {
        // torn final append: drop it
        write_file_atomic(path.string(), log_);
        break;
      }
      throw Error(ErrorCode::InvariantViolation, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    if (!complete) {
      write_file_atomic(path.string(), log_);
      break;
    }
    pos = end + 1;
  }
  write_file_atomic((data_dir_ / "state.json").string(), state_json_locked());
}

void AnnotationStore::register_annotator(const std::string& annotator_id) {
  const std::string id = trim(annotator_id);
  if (id.empty() || id.find_first_of(" \t\r\n#") != std::string::npos) {
    throw Error(ErrorCode::UsageError, fmt::format("invalid annotator id '{}'", annotator_id));
  }
  std::lock_guard lock(mutex_);
  if (!annotators_.insert(id).second) return;
  std::ofstream out(data_dir_ / "annotators.txt", std::ios::app);
  out << id << '\n';
  if (!out) throw Error(ErrorCode::WriteFailure, "cannot append to annotators.txt");
}

bool AnnotationStore::has_annotator(const std::string& annotator_id) const {
  std::lock_guard lock(mutex_);
  return annotators_.contains(annotator_id);
}

void AnnotationStore::require_annotator(const std::string& id) const {
  if (!annotators_.contains(id)) throw Error(ErrorCode::UnknownAnnotator, fmt::format("annotator '{}' is not registered", id));
}

std::optional<NextTask> AnnotationStore::next_task(const std::string& annotator_id, TaskKind kind) const {
  std::lock_guard lock(mutex_);
  require_annotator(annotator_id);
  std::optional<NextTask> best;
  auto consider = [&](NextTask candidate) {
    if (!best || candidate.votes < best->votes) best = std::move(candidate);
  };
  if (kind == TaskKind::verification) {
    for (const auto& [id, s] : verification_) {
      if (s.votes.size() >= kVotesPerTask) continue;
      if (std::any_of(s.votes.begin(), s.votes.end(), [&](const auto& v) { return v.annotator_id == annotator_id; })) continue;
      NextTask t;
      t.kind = kind;
      t.unit_id = id;
      t.votes = s.votes.size();
      t.verification = &s.task;
      consider(std::move(t));
    }
  } else {
    for (const auto& [id, s] : pairwise_) {
      if (s.votes.size() >= kVotesPerTask) continue;
      if (std::any_of(s.votes.begin(), s.votes.end(), [&](const auto& v) { return v.annotator_id == annotator_id; })) continue;
      NextTask t;
      t.kind = kind;
      t.unit_id = id;
      t.votes = s.votes.size();
      t.pair = s.pair;
      t.perspective = s.perspective;
      consider(std::move(t));
    }
  }
  return best;
}

void AnnotationStore::persist_line(const std::string& line) {
  const fs::path path = data_dir_ / "votes.log";
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << line << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::WriteFailure, fmt::format("cannot append to '{}'", path.string()));
  log_ += line;
  log_ += '\n';
}

Ack AnnotationStore::apply(VerificationVote vote, bool persist) {
  validate(vote);
  if (persist) require_annotator(vote.annotator_id);
  const auto it = verification_.find(vote.task_id);
  if (it == verification_.end()) throw Error(ErrorCode::UnknownTask, fmt::format("no verification task '{}'", vote.task_id));
  VerificationState& s = it->second;
  if (vote.choice == VerificationChoice::candidate_2 && s.task.candidates.size() < 2) {
    throw Error(ErrorCode::InvariantViolation, fmt::format("{}: task has a single candidate", vote.task_id));
  }
  for (const auto& v : s.votes) {
    if (v.annotator_id != vote.annotator_id) continue;
    if (v.choice == vote.choice) return {vote.task_id, s.votes.size(), s.votes.size() >= kVotesPerTask, true};
    throw Error(ErrorCode::DuplicateVote,
                fmt::format("{}: annotator '{}' already chose {}", vote.task_id, vote.annotator_id, to_string(v.choice)));
  }
  if (s.votes.size() >= kVotesPerTask) throw Error(ErrorCode::TaskClosed, fmt::format("{} already has 3 votes", vote.task_id));
  if (persist) {
    if (vote.timestamp.empty()) vote.timestamp = clock_();
    persist_line(to_record_line(vote));
  }
  s.votes.push_back(std::move(vote));
  if (s.votes.size() == kVotesPerTask) s.result = finalize_verification(s.votes);
  if (persist) write_file_atomic((data_dir_ / "state.json").string(), state_json_locked());
  return {it->first, s.votes.size(), s.votes.size() == kVotesPerTask, false};
}

Ack AnnotationStore::apply(study::PreferenceVote vote, bool persist) {
  study::validate(vote);
  if (persist) require_annotator(vote.annotator_id);
  const std::string unit = pairwise_unit_id(vote.pair_id, vote.perspective);
  const auto it = pairwise_.find(unit);
  if (it == pairwise_.end()) throw Error(ErrorCode::UnknownTask, fmt::format("no pairwise task '{}'", unit));
  PairwiseState& s = it->second;
  for (const auto& v : s.votes) {
    if (v.annotator_id != vote.annotator_id) continue;
    if (v.choice == vote.choice) return {unit, s.votes.size(), s.votes.size() >= kVotesPerTask, true};
    throw Error(ErrorCode::DuplicateVote,
                fmt::format("{}: annotator '{}' already chose {}", unit, vote.annotator_id, to_string(v.choice)));
  }
  if (s.votes.size() >= kVotesPerTask) throw Error(ErrorCode::TaskClosed, fmt::format("{} already has 3 votes", unit));
  if (persist) {
    if (vote.timestamp.empty()) vote.timestamp = clock_();
    persist_line(study::to_record_line(vote));
  }
  s.votes.push_back(std::move(vote));
  if (s.votes.size() == kVotesPerTask) s.result = study::consensus(s.votes);
  if (persist) write_file_atomic((data_dir_ / "state.json").string(), state_json_locked());
  return {unit, s.votes.size(), s.votes.size() == kVotesPerTask, false};
}

Ack AnnotationStore::record_vote(VerificationVote vote) {
  std::lock_guard lock(mutex_);
  return apply(std::move(vote), true);
}

Ack AnnotationStore::record_vote(study::PreferenceVote vote) {
  std::lock_guard lock(mutex_);
  return apply(std::move(vote), true);
}

Progress AnnotationStore::progress() const {
  std::lock_guard lock(mutex_);
  Progress p;
  for (const auto& [id, s] : verification_) {
    ++p.verification_total;
    p.votes += s.votes.size();
    if (s.votes.size() < kVotesPerTask) continue;
    ++p.verification_closed;
    p.accepted += s.result.outcome == Outcome::accepted;
    p.rejected += s.result.outcome == Outcome::rejected;
    p.unresolved += s.result.outcome == Outcome::unresolved;
  }
  for (const auto& [id, s] : pairwise_) {
    ++p.pairwise_total;
    p.votes += s.votes.size();
    p.pairwise_closed += s.votes.size() >= kVotesPerTask;
  }
  return p;
}

VerificationOutcome AnnotationStore::outcome(const std::string& task_id) const {
  std::lock_guard lock(mutex_);
  const auto it = verification_.find(task_id);
  if (it == verification_.end()) throw Error(ErrorCode::UnknownTask, fmt::format("no verification task '{}'", task_id));
  return it->second.result;
}

std::vector<VerificationVote> AnnotationStore::verification_votes(const std::string& task_id) const {
  std::lock_guard lock(mutex_);
  const auto it = verification_.find(task_id);
  if (it == verification_.end()) throw Error(ErrorCode::UnknownTask, fmt::format("no verification task '{}'", task_id));
  return it->second.votes;
}

std::vector<study::PreferenceVote> AnnotationStore::pairwise_votes() const {
  std::lock_guard lock(mutex_);
  std::vector<study::PreferenceVote> out;
  for (const auto& [id, s] : pairwise_) out.insert(out.end(), s.votes.begin(), s.votes.end());
  return out;
}

std::optional<study::Choice> AnnotationStore::pairwise_consensus(const std::string& unit_id) const {
  std::lock_guard lock(mutex_);
  const auto it = pairwise_.find(unit_id);
  if (it == pairwise_.end()) throw Error(ErrorCode::UnknownTask, fmt::format("no pairwise task '{}'", unit_id));
  return it->second.result;
}

std::string AnnotationStore::sample_id_for(const pipeline::VerificationTask& task) {
  return fmt::format("{}-{}", task.source_id, to_string(task.trg_emotion));
}

ExportSummary AnnotationStore::export_verified(const fs::path& out, bool partial, const std::set<std::string>& exclude) const {
  std::lock_guard lock(mutex_);
  for (const auto& id : exclude) {
    if (!verification_.contains(id)) throw Error(ErrorCode::UnknownTask, fmt::format("cannot exclude unknown task '{}'", id));
  }
  ExportSummary summary;
  summary.manifest = out;
  const fs::path out_root = out.has_parent_path() ? out.parent_path() : fs::path(".");
  std::vector<std::string> pending;
  std::set<std::string> sample_ids;
  for (const auto& [id, s] : verification_) {
    auto drop = [&](std::string reason) {
      summary.audit.push_back({s.task.source_id, "verification", pipeline::AuditAction::drop, std::move(reason), id});
    };
    if (exclude.contains(id)) {
      drop("excluded from export");
      continue;
    }
    switch (s.result.outcome) {
      case Outcome::open:
        pending.push_back(id);
        drop(fmt::format("pending: {} of 3 votes", s.votes.size()));
        continue;
      case Outcome::unresolved:
        pending.push_back(id);
        drop("unresolved three-way split; needs re-adjudication");
        continue;
      case Outcome::rejected:
        drop("rejected by majority");
        continue;
      case Outcome::accepted: break;
    }
    const auto& chosen = s.task.candidates.at(*s.result.chosen);
    BenchmarkSample sample;
    sample.sample_id = sample_id_for(s.task);
    sample.source = rebase(s.task.source, data_dir_, out_root);
    sample.src_emotion = s.task.src_emotion;
    sample.trg_emotion = s.task.trg_emotion;
    sample.simple_instruction = s.task.instruction;
    sample.ground_truth = rebase(chosen.image, data_dir_, out_root);
    if (!sample_ids.insert(sample.sample_id).second) {
      throw Error(ErrorCode::InvariantViolation, fmt::format("two tasks export as sample '{}'", sample.sample_id));
    }
    summary.audit.push_back({s.task.source_id, "verification", pipeline::AuditAction::emit,
                             fmt::format("accepted {} as ground truth", to_string(static_cast<VerificationChoice>(*s.result.chosen))),
                             id});
    summary.samples.push_back(std::move(sample));
  }
  if (!pending.empty() && !partial) {
    throw Error(ErrorCode::PendingTasks,
                fmt::format("{} task(s) are open or unresolved (first: {}); finish them, exclude them or export partially",
                            pending.size(), pending.front()));
  }
  save_records(summary.samples, out);
  fs::path audit = out;
  audit.replace_extension(".audit.jsonl");
  save_records(summary.audit, audit);
  return summary;
}

std::string AnnotationStore::vote_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::string AnnotationStore::state_json() const {
  std::lock_guard lock(mutex_);
  return state_json_locked();
}

std::string AnnotationStore::state_json_locked() const {
  json units = json::array();
  for (const auto& [id, s] : verification_) {
    json votes = json::array();
    for (const auto& v : s.votes) votes.push_back({{"annotator_id", v.annotator_id}, {"choice", to_string(v.choice)}});
    json u{{"unit_id", id}, {"kind", "verification"}, {"votes", std::move(votes)}, {"outcome", to_string(s.result.outcome)}};
    if (s.result.chosen) u["chosen"] = to_string(static_cast<VerificationChoice>(*s.result.chosen));
    units.push_back(std::move(u));
  }
  for (const auto& [id, s] : pairwise_) {
    json votes = json::array();
    for (const auto& v : s.votes) votes.push_back({{"annotator_id", v.annotator_id}, {"choice", to_string(v.choice)}});
    json u{{"unit_id", id}, {"kind", "pairwise"}, {"votes", std::move(votes)}};
    u["consensus"] = s.result ? json(to_string(*s.result)) : json(nullptr);
    units.push_back(std::move(u));
  }
  return json{{"schema", "fed.annotation_state.v1"}, {"units", std::move(units)}}.dump(1) + "\n";
}

}  // namespace fed::annotation
