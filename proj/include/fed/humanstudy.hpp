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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "fed/datamodel.hpp"

namespace fed::study {

enum class Perspective { identity, magnitude, overall };
enum class Choice { left, right };
enum class Preference { left, right, tie };

inline constexpr std::array<Perspective, 3> kAllPerspectives = {Perspective::identity, Perspective::magnitude,
                                                                 Perspective::overall};

std::string_view to_string(Perspective p) noexcept;
std::string_view to_string(Choice c) noexcept;
std::string_view to_string(Preference p) noexcept;
Perspective parse_perspective(std::string_view text);
Choice parse_choice(std::string_view text);

/// Two edits of the same sample by different models, shown left/right.
struct PairTask {
  std::string pair_id;
  std::string sample_id;
  InstructionGranularity granularity = InstructionGranularity::simple;
  EditResult left;
  EditResult right;
  std::vector<Perspective> perspectives{kAllPerspectives.begin(), kAllPerspectives.end()};

  friend bool operator==(const PairTask&, const PairTask&) = default;
};

/// One forced-choice judgement. There is no abstain value.
struct PreferenceVote {
  std::string pair_id;
  std::string annotator_id;
  Perspective perspective = Perspective::overall;
  Choice choice = Choice::left;
  std::string timestamp;

  friend bool operator==(const PreferenceVote&, const PreferenceVote&) = default;
};

std::string to_record_line(const PairTask& r);
std::string to_record_line(const PreferenceVote& r);
void from_record_line(std::string_view line, PairTask& r);
void from_record_line(std::string_view line, PreferenceVote& r);
void validate(const PairTask& r);
void validate(const PreferenceVote& r);

/// Reads the pairwise votes of a vote log, skipping records of other kinds.
std::vector<PreferenceVote> load_preference_votes(const std::filesystem::path& path);

/// n distinct pairs drawn uniformly from every (sample, granularity, model pair) that has two
/// successful results, with left/right randomized. Reproducible from `seed`.
/// Throws InsufficientResults.
std::vector<PairTask> sample_pairs(std::span<const EditResult> results, std::size_t n, std::uint64_t seed);

/// Majority of exactly three votes by distinct annotators on one pair and perspective.
/// Throws WrongVoteCount, DuplicateAnnotator, PreconditionViolation (mixed pairs/perspectives).
Choice consensus(std::span<const PreferenceVote> votes);

struct MetricOrientation {
  std::string name;
  bool higher_is_better = true;
};

/// The side a metric prefers; exact equality is a tie. Throws NonFiniteValue.
Preference metric_preference(double left, double right, bool higher_is_better);

struct Agreement {
  std::size_t matches = 0;
  std::size_t ties = 0;
  std::size_t total = 0;

  /// (matches + 0.5 * ties) / total.
  double accuracy() const;
};

/// Compares metric preferences with the human consensus, pair by pair.
/// Throws MissingConsensus when a pair has no consensus, EmptyGroup when there are no pairs.
Agreement agreement(const std::map<std::string, Preference>& metric,
                    const std::map<std::string, Choice>& human);
double agreement_accuracy(const std::map<std::string, Preference>& metric,
                          const std::map<std::string, Choice>& human);

enum class FedVariant { full, no_rule, no_reg, no_fidelity, no_alignment, no_model };
inline constexpr std::array<FedVariant, 6> kAllVariants = {FedVariant::no_rule,     FedVariant::no_reg,
                                                           FedVariant::no_fidelity, FedVariant::no_alignment,
                                                           FedVariant::no_model,    FedVariant::full};

std::string_view to_string(FedVariant v) noexcept;
/// Throws UnknownVariant.
FedVariant parse_variant(std::string_view text);

///   full          s_fid * s_align * s_reg
///   no_reg        s_fid * s_align
///   no_fidelity   s_align * s_reg
///   no_alignment  s_fid * s_reg
///   no_model      mean(id01, bg01) * s_reg
///   no_rule       pq01 * mean(sc01, gta01)
double fed_variant(const ScoreCard& card, FedVariant variant);

using CardKey = std::tuple<std::string, std::string, InstructionGranularity>;  // model, sample, granularity

/// A metric compared against human preferences under one perspective.
struct StudyMetric {
  std::string panel;
  std::string name;
  Perspective perspective = Perspective::overall;
  bool higher_is_better = true;
  /// nullopt when the metric has no value for this result.
  std::function<std::optional<double>(const CardKey&, const ScoreCard*)> value;
};

/// ID fidelity, expression gain, overall score and the ablation variants.
std::vector<StudyMetric> builtin_metrics();

/// External metric values, one line per (metric, model, sample, granularity).
std::vector<StudyMetric> load_plugin_metrics(const std::filesystem::path& path);

struct StudyRow {
  std::string panel;
  std::string metric;
  Perspective perspective = Perspective::overall;
  double accuracy = 0;
  std::size_t n_pairs = 0;
  std::size_t n_matches = 0;
  std::size_t n_ties = 0;
};

struct StudyReport {
  std::vector<StudyRow> rows;
  std::vector<std::string> warnings;
};

/// One agreement row per metric. Metrics whose perspective has no pairs are omitted with a
/// warning. Throws MissingConsensus, WrongVoteCount, DuplicateAnnotator, PreconditionViolation.
StudyReport run_study_report(std::span<const PairTask> pairs, std::span<const ScoreCard> cards,
                             std::span<const PreferenceVote> votes, std::span<const StudyMetric> metrics);

std::string render_study_markdown(const StudyReport& report);
std::string render_study_records(const StudyReport& report);

}  // namespace fed::study
