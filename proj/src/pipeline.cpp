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

#include "fed/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "fed/hashing.hpp"
#include "fed/manifest.hpp"
#include "fed/metrics.hpp"
#include "fed/parallel.hpp"
#include "fed/prompts.hpp"
#include "json_util.hpp"

namespace fed::pipeline {

namespace fs = std::filesystem;
using namespace fed::backends;
using detail::json;
using backends::to_string;
using fed::to_string;

namespace {

constexpr std::string_view kCandidateSchema = "fed.candidate.v1";
constexpr std::string_view kVerificationSchema = "fed.verification.v1";
constexpr std::string_view kAuditSchema = "fed.audit.v1";

[[noreturn]] void violation(const std::string& id, const std::string& reason) {
  throw Error(ErrorCode::InvariantViolation, fmt::format("{}: {}", id.empty() ? "<unnamed>" : id, reason));
}

std::string error_text(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  return fmt::format("{}: {}", err ? to_string(err->code()) : std::string_view("Exception"), e.what());
}

bool path_safe(std::string_view id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

ExpressionLabel parse_label(const std::string& text, LabelGranularity g) {
  if (g == LabelGranularity::fine) return parse_emotion(text);
  return parse_coarse(text);
}

ExpressionLabel expected_label(EmotionLabel trg, LabelGranularity g) {
  if (g == LabelGranularity::fine) return trg;
  return coarse_map(trg);
}

}  // namespace

std::optional<ExpressionLabel> vote(std::span<const ExpressionLabel> labels) {
  if (labels.empty()) throw Error(ErrorCode::PreconditionViolation, "vote over an empty list");
  const LabelGranularity g = granularity_of(labels.front());
  for (const auto& l : labels) {
    if (granularity_of(l) != g) {
      throw Error(ErrorCode::MixedGranularity, fmt::format("vote mixes {} and {} labels", to_string(g),
                                                           to_string(granularity_of(l))));
    }
  }
  return vote<ExpressionLabel>(labels);
}

std::vector<ExpressionClassifier*> VotingConfig::select(const BackendSuite& suite) const {
  std::vector<ExpressionClassifier*> out;
  if (ensemble.empty()) {
    for (const auto& c : suite.classifiers)
      if (c) out.push_back(c.get());
  } else {
    for (const auto& name : ensemble) {
      ExpressionClassifier* found = nullptr;
      for (const auto& c : suite.classifiers) {
        if (c && (c->id().name == name || c->id().str() == name)) found = c.get();
      }
      if (!found) throw Error(ErrorCode::ConfigError, fmt::format("ensemble member '{}' is not configured", name));
      if (std::find(out.begin(), out.end(), found) != out.end()) {
        throw Error(ErrorCode::ConfigError, fmt::format("ensemble lists '{}' twice", name));
      }
      out.push_back(found);
    }
  }
  if (out.size() < 3 || out.size() % 2 == 0) {
    throw Error(ErrorCode::ConfigError,
                fmt::format("the voting ensemble needs an odd number (>= 3) of classifiers, got {}", out.size()));
  }
  return out;
}

std::string candidate_id(std::string_view source_id, EmotionLabel trg, std::uint32_t variant) {
  return fmt::format("{}/{}/{}", source_id, to_string(trg), variant);
}

std::string_view to_string(AuditAction a) noexcept {
  switch (a) {
    case AuditAction::emit: return "emit";
    case AuditAction::drop: return "drop";
    case AuditAction::error: return "error";
  }
  return "?";
}

// --- codecs -------------------------------------------------------------------------------

std::string to_record_line(const CandidateRecord& r) {
  std::optional<LabelGranularity> g;
  if (r.voted_label) g = granularity_of(*r.voted_label);
  for (const auto& v : r.votes)
    if (!g && v.label) g = granularity_of(*v.label);
  json votes = json::array();
  for (const auto& v : r.votes) {
    json jv{{"classifier", v.classifier}, {"label", v.label ? json(to_string(*v.label)) : json("abstain")}};
    if (!v.note.empty()) jv["note"] = v.note;
    votes.push_back(std::move(jv));
  }
  json j{{"schema", kCandidateSchema},
         {"source_id", r.source_id},
         {"candidate_id", r.candidate_id},
         {"trg_emotion", to_string(r.trg_emotion)},
         {"variant", r.variant},
         {"instruction", r.instruction},
         {"candidate", detail::image_ref_json(r.candidate)},
         {"label_granularity", g ? json(to_string(*g)) : json(nullptr)},
         {"votes", std::move(votes)},
         {"voted_label", r.voted_label ? json(to_string(*r.voted_label)) : json(nullptr)},
         {"passed_expression_filter", r.passed_expression_filter},
         {"s_id_raw", r.s_id_raw},
         {"s_bg_raw", r.s_bg_raw},
         {"s_total", r.s_total},
         {"rank", r.rank ? json(*r.rank) : json(nullptr)},
         {"retained", r.retained}};
  return j.dump();
}

void from_record_line(std::string_view line, CandidateRecord& r) {
  const json j = detail::parse_object(line);
  detail::check_schema(j, kCandidateSchema);
  r = CandidateRecord{};
  r.source_id = detail::field<std::string>(j, "source_id");
  r.candidate_id = detail::field<std::string>(j, "candidate_id");
  r.trg_emotion = detail::parse_label_field(j, "trg_emotion", parse_emotion);
  r.variant = detail::field<std::uint32_t>(j, "variant");
  r.instruction = detail::field<std::string>(j, "instruction");
  r.candidate = detail::image_ref_field(j, "candidate");
  const auto g = detail::optional_field<std::string>(j, "label_granularity");
  const LabelGranularity granularity = g ? parse_label_granularity(*g) : LabelGranularity::coarse;
  const auto& votes = j.at("votes");
  if (!votes.is_array()) throw Error(ErrorCode::MalformedRecord, "field 'votes' is not an array");
  for (const auto& jv : votes) {
    ClassifierVote v;
    v.classifier = detail::field<std::string>(jv, "classifier");
    const auto label = detail::field<std::string>(jv, "label");
    if (label != "abstain") v.label = parse_label(label, granularity);
    v.note = detail::optional_field<std::string>(jv, "note").value_or("");
    r.votes.push_back(std::move(v));
  }
  if (auto voted = detail::optional_field<std::string>(j, "voted_label")) r.voted_label = parse_label(*voted, granularity);
  r.passed_expression_filter = detail::field<bool>(j, "passed_expression_filter");
  r.s_id_raw = detail::field<double>(j, "s_id_raw");
  r.s_bg_raw = detail::field<double>(j, "s_bg_raw");
  r.s_total = detail::field<double>(j, "s_total");
  r.rank = detail::optional_field<int>(j, "rank");
  r.retained = detail::field<bool>(j, "retained");
}

void validate(const CandidateRecord& r) {
  if (r.source_id.empty()) violation(r.candidate_id, "source_id is empty");
  if (r.candidate_id != candidate_id(r.source_id, r.trg_emotion, r.variant)) {
    violation(r.candidate_id, "candidate_id does not match (source_id, trg_emotion, variant)");
  }
  if (r.passed_expression_filter) {
    if (!r.voted_label) violation(r.candidate_id, "passed the filter without a voted label");
    if (*r.voted_label != expected_label(r.trg_emotion, granularity_of(*r.voted_label))) {
      violation(r.candidate_id, "passed the filter with a voted label that does not match the target");
    }
  }
  if (r.rank && *r.rank < 1) violation(r.candidate_id, "rank must start at 1");
  if (r.retained && (!r.passed_expression_filter || !r.rank || *r.rank > kRetainedPerGroup)) {
    violation(r.candidate_id, "retained candidates must pass the filter and rank in the top two");
  }
  for (double v : {r.s_id_raw, r.s_bg_raw, r.s_total})
    if (!std::isfinite(v)) violation(r.candidate_id, "non-finite fidelity score");
}

std::string to_record_line(const VerificationTask& r) {
  json candidates = json::array();
  for (const auto& c : r.candidates) {
    candidates.push_back(json{{"candidate_id", c.candidate_id},
                              {"image", detail::image_ref_json(c.image)},
                              {"reference_caption", c.reference_caption}});
  }
  return json{{"schema", kVerificationSchema},
              {"task_id", r.task_id},
              {"source_id", r.source_id},
              {"source", detail::image_ref_json(r.source)},
              {"src_emotion", to_string(r.src_emotion)},
              {"trg_emotion", to_string(r.trg_emotion)},
              {"instruction", r.instruction},
              {"candidates", std::move(candidates)}}
      .dump();
}

void from_record_line(std::string_view line, VerificationTask& r) {
  const json j = detail::parse_object(line);
  detail::check_schema(j, kVerificationSchema);
  r = VerificationTask{};
  r.task_id = detail::field<std::string>(j, "task_id");
  r.source_id = detail::field<std::string>(j, "source_id");
  r.source = detail::image_ref_field(j, "source");
  r.src_emotion = detail::parse_label_field(j, "src_emotion", parse_emotion);
  r.trg_emotion = detail::parse_label_field(j, "trg_emotion", parse_emotion);
  r.instruction = detail::field<std::string>(j, "instruction");
  const auto& candidates = j.at("candidates");
  if (!candidates.is_array()) throw Error(ErrorCode::MalformedRecord, "field 'candidates' is not an array");
  for (const auto& jc : candidates) {
    VerificationCandidate c;
    c.candidate_id = detail::field<std::string>(jc, "candidate_id");
    c.image = detail::image_ref_field(jc, "image");
    c.reference_caption = detail::field<std::string>(jc, "reference_caption");
    r.candidates.push_back(std::move(c));
  }
}

void validate(const VerificationTask& r) {
  if (r.task_id != fmt::format("{}:{}", r.source_id, to_string(r.trg_emotion))) {
    violation(r.task_id, "task_id must be <source_id>:<trg_emotion>");
  }
  if (r.src_emotion == r.trg_emotion) violation(r.task_id, "source and target emotion are equal");
  if (r.candidates.empty() || r.candidates.size() > 2) {
    violation(r.task_id, fmt::format("{} candidates (expected 1 or 2)", r.candidates.size()));
  }
  if (r.candidates.size() == 2 && r.candidates[0].candidate_id == r.candidates[1].candidate_id) {
    violation(r.task_id, "duplicate candidate");
  }
}

std::string to_record_line(const AuditEntry& r) {
  json j{{"schema", kAuditSchema},
         {"source_id", r.source_id},
         {"stage", r.stage},
         {"action", to_string(r.action)},
         {"reason", r.reason}};
  if (r.candidate_id) j["candidate_id"] = *r.candidate_id;
  return j.dump();
}

void from_record_line(std::string_view line, AuditEntry& r) {
  const json j = detail::parse_object(line);
  detail::check_schema(j, kAuditSchema);
  r = AuditEntry{};
  r.source_id = detail::field<std::string>(j, "source_id");
  r.stage = detail::field<std::string>(j, "stage");
  const auto action = detail::field<std::string>(j, "action");
  if (action == "emit") {
    r.action = AuditAction::emit;
  } else if (action == "drop") {
    r.action = AuditAction::drop;
  } else if (action == "error") {
    r.action = AuditAction::error;
  } else {
    throw Error(ErrorCode::MalformedRecord, fmt::format("unknown audit action '{}'", action));
  }
  r.reason = detail::field<std::string>(j, "reason");
  r.candidate_id = detail::optional_field<std::string>(j, "candidate_id");
}

void validate(const AuditEntry& r) {
  if (r.stage.empty()) violation(r.source_id, "audit entry without a stage");
}

// --- stages ---------------------------------------------------------------------------------

Generation generate_candidates(const SourceRecord& source, const Image& source_image, ImageEditor& editor,
                               std::uint32_t variant, const CallContext& ctx) {
  Generation out;
  for (EmotionLabel trg : kAllEmotions) {
    if (trg == source.labeled_emotion) continue;
    const std::string instruction = render_instruction(source.labeled_emotion, trg);
    try {
      Image edited = edit_image(editor, source_image, instruction, variant, ctx);
      GeneratedCandidate c;
      c.record.source_id = source.source_id;
      c.record.candidate_id = candidate_id(source.source_id, trg, variant);
      c.record.trg_emotion = trg;
      c.record.variant = variant;
      c.record.instruction = instruction;
      c.record.candidate.content_hash = image_hash(edited);
      c.record.candidate.width = edited.width;
      c.record.candidate.height = edited.height;
      c.image = std::move(edited);
      out.candidates.push_back(std::move(c));
    } catch (const Error& e) {
      out.failures.push_back({trg, variant, error_text(e)});
    }
  }
  return out;
}

void expression_filter(CandidateRecord& candidate, const Image& image, const VotingConfig& config,
                       std::span<ExpressionClassifier* const> classifiers, const CallContext& ctx) {
  candidate.votes.clear();
  candidate.voted_label.reset();
  candidate.passed_expression_filter = false;
  std::vector<ExpressionLabel> labels;
  for (ExpressionClassifier* c : classifiers) {
    ClassifierVote v;
    v.classifier = c->id().str();
    try {
      v.label = classify_expression(*c, image, config.granularity, ctx);
      labels.push_back(*v.label);
    } catch (const Error& e) {
      v.note = error_text(e);
    }
    candidate.votes.push_back(std::move(v));
  }
  if (labels.size() < 3 || labels.size() % 2 == 0) return;
  candidate.voted_label = vote(std::span<const ExpressionLabel>(labels));
  candidate.passed_expression_filter =
      candidate.voted_label && *candidate.voted_label == expected_label(candidate.trg_emotion, config.granularity);
}

double min_max(double value, double lo, double hi) {
  if (!(hi > lo)) return 1.0;
  return (value - lo) / (hi - lo);
}

std::vector<RankedEntry> rank_by_fidelity(std::span<const RankInput> group, const RankWeights& weights) {
  if (group.empty()) throw Error(ErrorCode::EmptyGroup, "fidelity ranking over an empty group");
  double id_lo = group[0].cosine, id_hi = id_lo;
  double bg_lo = -group[0].rmse, bg_hi = bg_lo;
  for (const auto& g : group) {
    if (!std::isfinite(g.cosine) || !std::isfinite(g.rmse)) {
      throw Error(ErrorCode::NonFiniteValue, fmt::format("{}: non-finite fidelity input", g.candidate_id));
    }
    id_lo = std::min(id_lo, g.cosine);
    id_hi = std::max(id_hi, g.cosine);
    bg_lo = std::min(bg_lo, -g.rmse);
    bg_hi = std::max(bg_hi, -g.rmse);
  }
  std::vector<RankedEntry> out(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    out[i].index = i;
    out[i].norm_id = min_max(group[i].cosine, id_lo, id_hi);
    out[i].norm_bg = min_max(-group[i].rmse, bg_lo, bg_hi);
    out[i].s_total = weights.id * out[i].norm_id + weights.bg * out[i].norm_bg;
  }
  std::sort(out.begin(), out.end(), [&](const RankedEntry& a, const RankedEntry& b) {
    if (a.s_total != b.s_total) return a.s_total > b.s_total;
    const auto& ga = group[a.index];
    const auto& gb = group[b.index];
    return std::tie(ga.content_hash, ga.candidate_id) < std::tie(gb.content_hash, gb.candidate_id);
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
  return out;
}

void fidelity_rank(const Image& source_image, std::span<CandidateRecord> group, std::span<const Image* const> images,
                   const BackendSuite& suite, const RankWeights& weights) {
  if (group.empty()) throw Error(ErrorCode::EmptyGroup, "fidelity ranking over an empty group");
  if (images.size() != group.size()) {
    throw Error(ErrorCode::PreconditionViolation, "one image per candidate is required");
  }
  const FaceRegion region = locate_face(suite.need_localizer(), source_image, suite.calls);
  std::vector<RankInput> inputs;
  for (std::size_t i = 0; i < group.size(); ++i) {
    CandidateRecord& c = group[i];
    c.s_id_raw = metrics::compute_id(source_image, *images[i], suite.need_embedder(), suite.calls);
    c.s_bg_raw = metrics::compute_bg_rmse(source_image, *images[i], region);
    inputs.push_back({c.s_id_raw, c.s_bg_raw, c.candidate.content_hash, c.candidate_id});
  }
  for (const RankedEntry& e : rank_by_fidelity(inputs, weights)) {
    CandidateRecord& c = group[e.index];
    c.s_total = e.s_total;
    c.rank = e.rank;
    c.retained = e.rank <= kRetainedPerGroup;
  }
}

std::string generate_dense_instruction(const Image& src, const Image& gt, VisionJudge& judge,
                                       const CallContext& ctx) {
  const Image* images[] = {&src, &gt};
  return describe(judge, prompts::render(prompts::kDenseInstruction), images, ctx);
}

std::string caption_candidate(const Image& candidate, VisionJudge& judge, const CallContext& ctx) {
  const Image* images[] = {&candidate};
  return describe(judge, prompts::render(prompts::kCaption), images, ctx);
}

// --- end to end ------------------------------------------------------------------------------

ScreeningHook min_resolution_hook(int min_side) {
  return {"min_resolution", [min_side](const SourceRecord&, const Image& image) -> std::optional<std::string> {
            if (image.width < min_side || image.height < min_side) {
              return fmt::format("{}x{} is below the {}px minimum", image.width, image.height, min_side);
            }
            return std::nullopt;
          }};
}

void PipelineConfig::check() const {
  if (candidates_per_emotion < 1) throw Error(ErrorCode::ConfigError, "pipeline.candidates_per_emotion must be >= 1");
  if (min_resolution < 1) throw Error(ErrorCode::ConfigError, "pipeline.min_resolution must be >= 1");
  if (!(weights.id >= 0) || !(weights.bg >= 0) || !(weights.id + weights.bg > 0)) {
    throw Error(ErrorCode::ConfigError, "pipeline.weights must be non-negative and not both zero");
  }
  if (workers < 1) throw Error(ErrorCode::ConfigError, "concurrency.workers must be >= 1");
}

namespace {

struct SourceOutcome {
  std::vector<VerificationTask> tasks;
  std::vector<CandidateRecord> candidates;
  std::vector<AuditEntry> audit;
  std::size_t generated = 0;
  bool failed = false;
};

class SourceRun {
 public:
  SourceRun(const SourceRecord& source, const fs::path& sources_root, const PipelineConfig& config,
            const BackendSuite& suite, std::span<ExpressionClassifier* const> ensemble, const fs::path& out_dir)
      : source_(source),
        sources_root_(sources_root),
        config_(config),
        suite_(suite),
        ensemble_(ensemble),
        out_dir_(out_dir) {}

  SourceOutcome run() {
    try {
      execute();
    } catch (const std::exception& e) {
      SourceOutcome failed;
      failed.failed = true;
      failed.audit.push_back({source_.source_id, "source", AuditAction::error, error_text(e), std::nullopt});
      return failed;
    }
    return std::move(out_);
  }

 private:
  void note(std::string stage, AuditAction action, std::string reason, std::optional<std::string> id = {}) {
    out_.audit.push_back({source_.source_id, std::move(stage), action, std::move(reason), std::move(id)});
  }

  void execute() {
    if (!path_safe(source_.source_id)) {
      throw Error(ErrorCode::InvariantViolation,
                  fmt::format("source_id '{}' may only use letters, digits, '-', '_' and '.'", source_.source_id));
    }
    source_image_ = load_image(source_.image, sources_root_);
    const Image& source_image = *source_image_;
    for (const ScreeningHook& hook : screens()) {
      if (auto reason = hook.check(source_, source_image)) {
        note("screening", AuditAction::drop, fmt::format("{}: {}", hook.name, *reason));
        return;
      }
    }
    const std::string ext = fs::path(source_.image.path).extension().string();
    const std::string source_rel = fmt::format("sources/{}{}", source_.source_id, ext);
    write_file_atomic((out_dir_ / source_rel).string(),
                      read_file_bytes((sources_root_ / source_.image.path).string()));
    source_ref_ = source_.image;
    source_ref_.path = source_rel;

    std::vector<GeneratedCandidate> generated;
    for (int v = 0; v < config_.candidates_per_emotion; ++v) {
      Generation g = generate_candidates(source_, source_image, suite_.need_editor(), static_cast<std::uint32_t>(v),
                                         suite_.calls);
      for (const auto& f : g.failures) {
        note("generation", AuditAction::error, f.reason, candidate_id(source_.source_id, f.trg_emotion, f.variant));
      }
      for (auto& c : g.candidates) generated.push_back(std::move(c));
    }
    std::sort(generated.begin(), generated.end(), [](const GeneratedCandidate& a, const GeneratedCandidate& b) {
      return std::tie(a.record.trg_emotion, a.record.variant) < std::tie(b.record.trg_emotion, b.record.variant);
    });
    out_.generated = generated.size();

    for (auto& c : generated) {
      const std::string rel = fmt::format("candidates/{}/{}_{}.png", source_.source_id,
                                          to_string(c.record.trg_emotion), c.record.variant);
      c.record.candidate = store_image(c.image, out_dir_, rel);
      expression_filter(c.record, c.image, config_.voting, ensemble_, suite_.calls);
      if (!c.record.passed_expression_filter) {
        note("expression_filter", AuditAction::drop, filter_reason(c.record), c.record.candidate_id);
      }
    }

    for (EmotionLabel trg : kAllEmotions) {
      std::vector<GeneratedCandidate*> group;
      for (auto& c : generated)
        if (c.record.trg_emotion == trg && c.record.passed_expression_filter) group.push_back(&c);
      if (!group.empty()) rank_group(trg, group);
    }

    for (auto& c : generated) out_.candidates.push_back(std::move(c.record));
  }

  std::vector<ScreeningHook> screens() const {
    std::vector<ScreeningHook> hooks{min_resolution_hook(config_.min_resolution)};
    hooks.insert(hooks.end(), config_.extra_screens.begin(), config_.extra_screens.end());
    return hooks;
  }

  std::string filter_reason(const CandidateRecord& r) const {
    std::size_t answered = 0;
    for (const auto& v : r.votes) answered += v.label.has_value();
    if (answered < 3 || answered % 2 == 0) {
      return fmt::format("{} of {} classifiers answered; the vote needs an odd count of at least 3", answered,
                         r.votes.size());
    }
    const auto needed = expected_label(r.trg_emotion, config_.voting.granularity);
    if (!r.voted_label) return fmt::format("tied vote; needed {}", to_string(needed));
    return fmt::format("voted {}; needed {}", to_string(*r.voted_label), to_string(needed));
  }

  void rank_group(EmotionLabel trg, std::vector<GeneratedCandidate*>& group) {
    std::vector<CandidateRecord> records;
    std::vector<const Image*> images;
    for (auto* c : group) {
      records.push_back(c->record);
      images.push_back(&c->image);
    }
    try {
      fidelity_rank(source_image(), records, images, suite_, config_.weights);
    } catch (const Error& e) {
      for (auto* c : group) note("fidelity_rank", AuditAction::drop, error_text(e), c->record.candidate_id);
      return;
    }
    std::vector<std::size_t> order(group.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return *records[a].rank < *records[b].rank; });

    VerificationTask task;
    task.task_id = fmt::format("{}:{}", source_.source_id, to_string(trg));
    task.source_id = source_.source_id;
    task.source = source_ref_;
    task.src_emotion = source_.labeled_emotion;
    task.trg_emotion = trg;
    task.instruction = render_instruction(source_.labeled_emotion, trg);
    std::vector<std::string> emitted;
    for (std::size_t i : order) {
      CandidateRecord& r = records[i];
      if (!r.retained) {
        note("fidelity_rank", AuditAction::drop,
             fmt::format("rank {} of {} (s_total {:.6f})", *r.rank, group.size(), r.s_total), r.candidate_id);
        continue;
      }
      std::string caption;
      if (config_.captions) {
        try {
          caption = caption_candidate(*images[i], suite_.need_judge(), suite_.calls);
        } catch (const Error& e) {
          r.retained = false;
          note("caption", AuditAction::drop, error_text(e), r.candidate_id);
          continue;
        }
      }
      task.candidates.push_back({r.candidate_id, r.candidate, std::move(caption)});
      emitted.push_back(r.candidate_id);
    }
    for (std::size_t i = 0; i < group.size(); ++i) group[i]->record = std::move(records[i]);
    if (task.candidates.empty()) return;
    for (const auto& id : emitted) note("verification", AuditAction::emit, "pending human verification", id);
    out_.tasks.push_back(std::move(task));
  }

  const Image& source_image() const { return *source_image_; }

  const SourceRecord& source_;
  const fs::path& sources_root_;
  const PipelineConfig& config_;
  const BackendSuite& suite_;
  std::span<ExpressionClassifier* const> ensemble_;
  const fs::path& out_dir_;
  std::optional<Image> source_image_;
  ImageRef source_ref_;
  SourceOutcome out_;
};

}  // namespace

PipelineRun run_pipeline(std::span<const SourceRecord> sources, const fs::path& sources_root,
                         const PipelineConfig& config, const BackendSuite& suite, const fs::path& out_dir) {
  config.check();
  const std::vector<ExpressionClassifier*> ensemble = config.voting.select(suite);
  suite.need_editor();
  suite.need_embedder();
  suite.need_localizer();
  if (config.captions) suite.need_judge();
  std::set<std::string> seen;
  for (const auto& s : sources) {
    validate(s);
    if (!seen.insert(s.source_id).second) {
      throw Error(ErrorCode::InvariantViolation, fmt::format("duplicate source_id '{}'", s.source_id));
    }
  }
  fs::create_directories(out_dir);

  std::vector<std::optional<SourceOutcome>> outcomes(sources.size());
  parallel_for(sources.size(), config.workers, [&](std::size_t i) {
    outcomes[i] = SourceRun(sources[i], sources_root, config, suite, ensemble, out_dir).run();
  });

  PipelineRun run;
  for (auto& o : outcomes) {
    if (!o) continue;
    ++run.sources_done;
    run.sources_failed += o->failed;
    run.generated += o->generated;
    for (const auto& a : o->audit) {
      if (!a.candidate_id) continue;
      run.emitted += a.action == AuditAction::emit;
      run.dropped += a.action == AuditAction::drop;
    }
    std::move(o->tasks.begin(), o->tasks.end(), std::back_inserter(run.tasks));
    std::move(o->candidates.begin(), o->candidates.end(), std::back_inserter(run.candidates));
    std::move(o->audit.begin(), o->audit.end(), std::back_inserter(run.audit));
  }
  save_records(run.candidates, out_dir / "candidates.jsonl");
  save_records(run.tasks, out_dir / "pending_verification.jsonl");
  save_records(run.audit, out_dir / "audit.jsonl");
  return run;
}

DensifyRun densify_benchmark(std::span<const BenchmarkSample> samples, const fs::path& root,
                             const BackendSuite& suite, int workers) {
  VisionJudge& judge = suite.need_judge();
  DensifyRun out;
  out.samples.assign(samples.begin(), samples.end());
  std::vector<std::string> failures(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    BenchmarkSample& s = out.samples[i];
    if (s.dense_instruction) return;
    try {
      const Image src = load_image(s.source, root);
      const Image gt = load_image(s.ground_truth, root);
      s.dense_instruction = generate_dense_instruction(src, gt, judge, suite.calls);
    } catch (const Error& e) {
      failures[i] = fmt::format("{}: {}", s.sample_id, error_text(e));
    }
  });
  for (auto& f : failures)
    if (!f.empty()) out.failures.push_back(std::move(f));
  return out;
}

}  // namespace fed::pipeline
