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

#include "fed/humanstudy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <fmt/format.h>

#include "fed/error.hpp"
#include "json_util.hpp"

namespace fed::study {

namespace fs = std::filesystem;
using detail::json;
using fed::to_string;

namespace {

constexpr std::string_view kPairSchema = "fed.pair.v1";
constexpr std::string_view kVoteSchema = "fed.vote.v1";
constexpr std::string_view kMetricValueSchema = "fed.metric_value.v1";
constexpr std::string_view kStudyRowSchema = "fed.study_row.v1";

/// Unbiased draw from [0, n) using raw engine output, so results do not depend on the
/// standard library's distribution implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const std::uint64_t x = rng();
    if (x < limit) return x % n;
  }
}

json result_json(const EditResult& r) { return json::parse(fed::to_record_line(r)); }

EditResult result_from(const json& j) {
  EditResult r;
  fed::from_record_line(j.dump(), r);
  return r;
}

}  // namespace

std::string_view to_string(Perspective p) noexcept {
  switch (p) {
    case Perspective::identity: return "identity";
    case Perspective::magnitude: return "magnitude";
    case Perspective::overall: return "overall";
  }
  return "?";
}

std::string_view to_string(Choice c) noexcept { return c == Choice::left ? "left" : "right"; }

std::string_view to_string(Preference p) noexcept {
  switch (p) {
    case Preference::left: return "left";
    case Preference::right: return "right";
    case Preference::tie: return "tie";
  }
  return "?";
}

Perspective parse_perspective(std::string_view text) {
  for (Perspective p : kAllPerspectives)
    if (to_string(p) == text) return p;
  throw Error(ErrorCode::UnknownLabel, fmt::format("unknown perspective '{}'", text));
}

Choice parse_choice(std::string_view text) {
  if (text == "left") return Choice::left;
  if (text == "right") return Choice::right;
  throw Error(ErrorCode::UnknownLabel, fmt::format("unknown 2AFC choice '{}' (left or right)", text));
}

// --- codecs --------------------------------------------------------------------------------

std::string to_record_line(const PairTask& r) {
  json perspectives = json::array();
  for (Perspective p : r.perspectives) perspectives.push_back(to_string(p));
  return json{{"schema", kPairSchema},
              {"pair_id", r.pair_id},
              {"sample_id", r.sample_id},
              {"granularity", to_string(r.granularity)},
              {"left", result_json(r.left)},
              {"right", result_json(r.right)},
              {"perspectives", std::move(perspectives)}}
      .dump();
}

void from_record_line(std::string_view line, PairTask& r) {
  const json j = detail::parse_object(line);
  detail::check_schema(j, kPairSchema);
  r = PairTask{};
  r.pair_id = detail::field<std::string>(j, "pair_id");
  r.sample_id = detail::field<std::string>(j, "sample_id");
  r.granularity = detail::parse_label_field(j, "granularity", parse_instruction_granularity);
  r.left = result_from(j.at("left"));
  r.right = result_from(j.at("right"));
  r.perspectives.clear();
  for (const auto& p : detail::field<std::vector<std::string>>(j, "perspectives")) {
    r.perspectives.push_back(parse_perspective(p));
  }
}

void validate(const PairTask& r) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::InvariantViolation, fmt::format("{}: {}", r.pair_id, why));
  };
  if (r.pair_id.empty()) fail("pair_id is empty");
  if (r.left.model_id == r.right.model_id) fail("both sides come from the same model");
  if (r.left.sample_id != r.sample_id || r.right.sample_id != r.sample_id) fail("sides belong to another sample");
  if (r.left.granularity != r.granularity || r.right.granularity != r.granularity) fail("granularity mismatch");
  if (r.perspectives.empty()) fail("no perspectives");
  std::set<Perspective> seen(r.perspectives.begin(), r.perspectives.end());
  if (seen.size() != r.perspectives.size()) fail("repeated perspective");
}

std::string to_record_line(const PreferenceVote& r) {
  json j{{"schema", kVoteSchema},
         {"kind", "pairwise"},
         {"pair_id", r.pair_id},
         {"annotator_id", r.annotator_id},
         {"perspective", to_string(r.perspective)},
         {"choice", to_string(r.choice)}};
  if (!r.timestamp.empty()) j["timestamp"] = r.timestamp;
  return j.dump();
}

void from_record_line(std::string_view line, PreferenceVote& r) {
  const json j = detail::parse_object(line);
  detail::check_schema(j, kVoteSchema);
  if (detail::field<std::string>(j, "kind") != "pairwise") {
    throw Error(ErrorCode::MalformedRecord, "not a pairwise vote");
  }
  r = PreferenceVote{};
  r.pair_id = detail::field<std::string>(j, "pair_id");
  r.annotator_id = detail::field<std::string>(j, "annotator_id");
  r.perspective = detail::parse_label_field(j, "perspective", parse_perspective);
  r.choice = detail::parse_label_field(j, "choice", parse_choice);
  r.timestamp = detail::optional_field<std::string>(j, "timestamp").value_or("");
}

void validate(const PreferenceVote& r) {
  if (r.pair_id.empty() || r.annotator_id.empty()) {
    throw Error(ErrorCode::InvariantViolation, "vote without pair_id or annotator_id");
  }
}

std::vector<PreferenceVote> load_preference_votes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, fmt::format("cannot open '{}'", path.string()));
  std::vector<PreferenceVote> votes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = detail::parse_object(line);
      if (detail::optional_field<std::string>(j, "kind").value_or("") != "pairwise") continue;
      PreferenceVote v;
      from_record_line(line, v);
      validate(v);
      votes.push_back(std::move(v));
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRecord, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return votes;
}

// --- sampling and consensus ---------------------------------------------------------------

std::vector<PairTask> sample_pairs(std::span<const EditResult> results, std::size_t n, std::uint64_t seed) {
  std::map<std::pair<std::string, InstructionGranularity>, std::map<std::string, const EditResult*>> by_sample;
  for (const auto& r : results) {
    if (!r.ok()) continue;
    by_sample[{r.sample_id, r.granularity}].emplace(r.model_id, &r);
  }
  std::vector<std::pair<const EditResult*, const EditResult*>> eligible;
  for (const auto& [key, models] : by_sample) {
    for (auto a = models.begin(); a != models.end(); ++a) {
      for (auto b = std::next(a); b != models.end(); ++b) eligible.emplace_back(a->second, b->second);
    }
  }
  if (eligible.empty() || n > eligible.size()) {
    throw Error(ErrorCode::InsufficientResults,
                fmt::format("{} pairs requested but only {} (sample, model pair) combinations exist", n,
                            eligible.size()));
  }
  std::mt19937_64 rng(seed);
  std::vector<PairTask> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + uniform_below(rng, eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
    const bool swap_sides = (rng() >> 63) != 0;
    PairTask t;
    t.pair_id = fmt::format("pair-{:05d}", i + 1);
    t.left = swap_sides ? *eligible[i].second : *eligible[i].first;
    t.right = swap_sides ? *eligible[i].first : *eligible[i].second;
    t.sample_id = t.left.sample_id;
    t.granularity = t.left.granularity;
    out.push_back(std::move(t));
  }
  return out;
}

Choice consensus(std::span<const PreferenceVote> votes) {
  if (votes.size() != 3) {
    throw Error(ErrorCode::WrongVoteCount, fmt::format("consensus needs exactly 3 votes, got {}", votes.size()));
  }
  std::set<std::string> annotators;
  int left = 0;
  for (const auto& v : votes) {
    if (v.pair_id != votes[0].pair_id || v.perspective != votes[0].perspective) {
      throw Error(ErrorCode::PreconditionViolation, "consensus over votes for different pairs or perspectives");
    }
    if (!annotators.insert(v.annotator_id).second) {
      throw Error(ErrorCode::DuplicateAnnotator,
                  fmt::format("{}: annotator '{}' voted twice", v.pair_id, v.annotator_id));
    }
    left += v.choice == Choice::left;
  }
  return left >= 2 ? Choice::left : Choice::right;
}

Preference metric_preference(double left, double right, bool higher_is_better) {
  if (!std::isfinite(left) || !std::isfinite(right)) {
    throw Error(ErrorCode::NonFiniteValue, fmt::format("metric values ({}, {}) are not finite", left, right));
  }
  if (left == right) return Preference::tie;
  return (left > right) == higher_is_better ? Preference::left : Preference::right;
}

double Agreement::accuracy() const {
  if (total == 0) throw Error(ErrorCode::EmptyGroup, "agreement over zero pairs");
  return (static_cast<double>(matches) + 0.5 * static_cast<double>(ties)) / static_cast<double>(total);
}

Agreement agreement(const std::map<std::string, Preference>& metric, const std::map<std::string, Choice>& human) {
  if (metric.empty()) throw Error(ErrorCode::EmptyGroup, "agreement over zero pairs");
  Agreement a;
  for (const auto& [pair_id, pref] : metric) {
    const auto it = human.find(pair_id);
    if (it == human.end()) throw Error(ErrorCode::MissingConsensus, fmt::format("{}: no human consensus", pair_id));
    ++a.total;
    if (pref == Preference::tie) {
      ++a.ties;
    } else if ((pref == Preference::left) == (it->second == Choice::left)) {
      ++a.matches;
    }
  }
  return a;
}

double agreement_accuracy(const std::map<std::string, Preference>& metric, const std::map<std::string, Choice>& human) {
  return agreement(metric, human).accuracy();
}

// --- variants ------------------------------------------------------------------------------

std::string_view to_string(FedVariant v) noexcept {
  switch (v) {
    case FedVariant::full: return "full";
    case FedVariant::no_rule: return "no_rule";
    case FedVariant::no_reg: return "no_reg";
    case FedVariant::no_fidelity: return "no_fidelity";
    case FedVariant::no_alignment: return "no_alignment";
    case FedVariant::no_model: return "no_model";
  }
  return "?";
}

FedVariant parse_variant(std::string_view text) {
  for (FedVariant v : kAllVariants)
    if (to_string(v) == text) return v;
  throw Error(ErrorCode::UnknownVariant, fmt::format("unknown FED-Score variant '{}'", text));
}

double fed_variant(const ScoreCard& card, FedVariant variant) {
  if (!card.ok()) {
    throw Error(ErrorCode::PreconditionViolation, fmt::format("{}: score card carries an error", card.sample_id));
  }
  switch (variant) {
    case FedVariant::full: return card.s_fid * card.s_align * card.s_reg;
    case FedVariant::no_reg: return card.s_fid * card.s_align;
    case FedVariant::no_fidelity: return card.s_align * card.s_reg;
    case FedVariant::no_alignment: return card.s_fid * card.s_reg;
    case FedVariant::no_model: return (card.id01 + card.bg01) / 2.0 * card.s_reg;
    case FedVariant::no_rule: return card.pq01 * (card.sc01 + card.gta01) / 2.0;
  }
  throw Error(ErrorCode::UnknownVariant, "unknown FED-Score variant");
}

// --- metric suites --------------------------------------------------------------------------

namespace {

StudyMetric card_metric(std::string panel, std::string name, Perspective p, bool higher,
                        std::function<double(const ScoreCard&)> get) {
  StudyMetric m;
  m.panel = std::move(panel);
  m.name = std::move(name);
  m.perspective = p;
  m.higher_is_better = higher;
  m.value = [get = std::move(get)](const CardKey&, const ScoreCard* card) -> std::optional<double> {
    if (!card || !card->ok()) return std::nullopt;
    return get(*card);
  };
  return m;
}

}  // namespace

std::vector<StudyMetric> builtin_metrics() {
  std::vector<StudyMetric> out;
  out.push_back(card_metric("id_fidelity", "ID", Perspective::identity, true, [](const ScoreCard& c) { return c.id_raw; }));
  out.push_back(card_metric("reg", "REG", Perspective::magnitude, true, [](const ScoreCard& c) { return c.s_reg; }));
  out.push_back(card_metric("overall", "FED-Score", Perspective::overall, true, [](const ScoreCard& c) { return c.fed; }));
  for (FedVariant v : kAllVariants) {
    const std::string name = v == FedVariant::full ? "FED-Score" : fmt::format("FED-Score {}", to_string(v));
    out.push_back(card_metric("ablation", name, Perspective::overall, true,
                              [v](const ScoreCard& c) { return fed_variant(c, v); }));
  }
  return out;
}

std::vector<StudyMetric> load_plugin_metrics(const fs::path& path) {
  struct Plugin {
    std::string panel;
    Perspective perspective;
    bool higher;
    std::map<CardKey, double> values;
  };
  std::map<std::string, Plugin> plugins;
  std::vector<std::string> order;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, fmt::format("cannot open '{}'", path.string()));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = detail::parse_object(line);
      detail::check_schema(j, kMetricValueSchema);
      const auto name = detail::field<std::string>(j, "metric");
      const auto panel = detail::field<std::string>(j, "panel");
      const auto perspective = detail::parse_label_field(j, "perspective", parse_perspective);
      const auto higher = detail::field<bool>(j, "higher_is_better");
      const CardKey key{detail::field<std::string>(j, "model_id"), detail::field<std::string>(j, "sample_id"),
                        detail::parse_label_field(j, "granularity", parse_instruction_granularity)};
      const auto value = detail::field<double>(j, "value");
      auto [it, fresh] = plugins.try_emplace(name, Plugin{panel, perspective, higher, {}});
      if (fresh) order.push_back(name);
      Plugin& p = it->second;
      if (p.panel != panel || p.perspective != perspective || p.higher != higher) {
        throw Error(ErrorCode::MalformedRecord, fmt::format("metric '{}' changes panel or orientation", name));
      }
      if (!p.values.emplace(key, value).second) {
        throw Error(ErrorCode::MalformedRecord, fmt::format("metric '{}' repeats a value", name));
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRecord, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  std::vector<StudyMetric> out;
  for (const auto& name : order) {
    auto shared = std::make_shared<Plugin>(std::move(plugins.at(name)));
    StudyMetric m;
    m.panel = shared->panel;
    m.name = name;
    m.perspective = shared->perspective;
    m.higher_is_better = shared->higher;
    m.value = [shared](const CardKey& key, const ScoreCard*) -> std::optional<double> {
      const auto it = shared->values.find(key);
      if (it == shared->values.end()) return std::nullopt;
      return it->second;
    };
    out.push_back(std::move(m));
  }
  return out;
}

// --- report -----------------------------------------------------------------------------------

StudyReport run_study_report(std::span<const PairTask> pairs, std::span<const ScoreCard> cards,
                             std::span<const PreferenceVote> votes, std::span<const StudyMetric> metrics) {
  std::map<CardKey, const ScoreCard*> by_key;
  for (const auto& c : cards) by_key[{c.model_id, c.sample_id, c.granularity}] = &c;

  std::map<std::pair<std::string, Perspective>, std::vector<PreferenceVote>> grouped;
  for (const auto& v : votes) grouped[{v.pair_id, v.perspective}].push_back(v);

  StudyReport report;
  std::map<Perspective, std::map<std::string, Choice>> human;
  std::map<Perspective, std::vector<const PairTask*>> pairs_by_perspective;
  for (const auto& p : pairs) {
    validate(p);
    for (Perspective persp : p.perspectives) {
      pairs_by_perspective[persp].push_back(&p);
      const auto it = grouped.find({p.pair_id, persp});
      if (it == grouped.end()) continue;
      human[persp][p.pair_id] = consensus(it->second);
    }
  }

  for (const StudyMetric& m : metrics) {
    const auto& scope = pairs_by_perspective[m.perspective];
    if (scope.empty()) {
      report.warnings.push_back(
          fmt::format("{} / {}: no pairs carry the {} perspective; row omitted", m.panel, m.name, to_string(m.perspective)));
      continue;
    }
    std::map<std::string, Preference> prefs;
    for (const PairTask* p : scope) {
      auto value_of = [&](const EditResult& side) {
        const CardKey key{side.model_id, p->sample_id, p->granularity};
        const auto it = by_key.find(key);
        const auto v = m.value(key, it == by_key.end() ? nullptr : it->second);
        if (!v) {
          throw Error(ErrorCode::PreconditionViolation,
                      fmt::format("metric '{}' has no value for model '{}' on {}", m.name, side.model_id, p->pair_id));
        }
        return *v;
      };
      prefs[p->pair_id] = metric_preference(value_of(p->left), value_of(p->right), m.higher_is_better);
    }
    const Agreement a = agreement(prefs, human[m.perspective]);
    report.rows.push_back({m.panel, m.name, m.perspective, a.accuracy(), a.total, a.matches, a.ties});
  }
  return report;
}

std::string render_study_markdown(const StudyReport& report) {
  std::string out = "# Human alignment\n";
  std::optional<std::string> panel;
  for (const auto& r : report.rows) {
    if (r.panel != panel) {
      panel = r.panel;
      out += fmt::format("\n## {}\n\n| Metric | Perspective | Acc. | Pairs | Matches | Ties |\n|---|---|---:|---:|---:|---:|\n",
                         r.panel);
    }
    out += fmt::format("| {} | {} | {:.4f} | {} | {} | {} |\n", r.metric, to_string(r.perspective), r.accuracy,
                       r.n_pairs, r.n_matches, r.n_ties);
  }
  if (report.rows.empty()) out += "\nNo metric could be compared.\n";
  if (!report.warnings.empty()) {
    out += "\n## Warnings\n\n";
    for (const auto& w : report.warnings) out += fmt::format("- {}\n", w);
  }
  return out;
}

std::string render_study_records(const StudyReport& report) {
  std::string out;
  for (const auto& r : report.rows) {
    out += json{{"schema", kStudyRowSchema},
                {"panel", r.panel},
                {"metric", r.metric},
                {"perspective", to_string(r.perspective)},
                {"accuracy", r.accuracy},
                {"n_pairs", r.n_pairs},
                {"n_matches", r.n_matches},
                {"n_ties", r.n_ties}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace fed::study
