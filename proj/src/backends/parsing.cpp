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

#include "fed/backends/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <utility>

#include <fmt/format.h>

#include "fed/error.hpp"

namespace fed::backends {

namespace {

// A digit run followed by ".<digit>" is a decimal, not an integer score.
bool is_decimal_continuation(std::string_view text, std::size_t end) {
  return end + 1 < text.size() && text[end] == '.' &&
         std::isdigit(static_cast<unsigned char>(text[end + 1]));
}

std::optional<int> first_in_range(std::string_view text, const std::regex& pattern) {
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), pattern); it != std::sregex_iterator(); ++it) {
    const auto& group = (*it)[1];
    const auto begin = static_cast<std::size_t>(group.first - s.begin());
    const auto end = static_cast<std::size_t>(group.second - s.begin());
    if (is_decimal_continuation(text, end) || group.length() > 3) continue;
    if (begin >= 2 && text[begin - 1] == '.' && std::isdigit(static_cast<unsigned char>(text[begin - 2]))) continue;
    const int value = std::stoi(group.str());
    if (value >= 0 && value <= 10) return value;
  }
  return std::nullopt;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

}  // namespace

int parse_judge_response(std::string_view text) {
  static const std::regex kScoreMarker(R"(score\s*\**\s*:\s*\**\s*(\d+))", std::regex::icase);
  static const std::regex kOutOfTen(R"((\d+)\s*/\s*10(?![0-9]))");
  if (auto v = first_in_range(text, kScoreMarker)) return *v;
  if (auto v = first_in_range(text, kOutOfTen)) return *v;

  const std::string body = trim(text);
  std::size_t digits = 0;
  while (digits < body.size() && std::isdigit(static_cast<unsigned char>(body[digits]))) ++digits;
  if (digits > 0 && digits <= 2) {
    const bool lone = digits == body.size() ||
                      (!std::isalnum(static_cast<unsigned char>(body[digits])) &&
                       !is_decimal_continuation(body, digits));
    const int value = std::stoi(body.substr(0, digits));
    if (lone && value <= 10) return value;
  }
  std::string excerpt = body.substr(0, 80);
  std::replace(excerpt.begin(), excerpt.end(), '\n', ' ');
  throw Error(ErrorCode::JudgeParseFailure, fmt::format("no 0-10 score in judge reply: \"{}\"", excerpt));
}

JudgeVerdict parse_judge_verdict(std::string_view text) {
  JudgeVerdict verdict;
  verdict.score = parse_judge_response(text);
  verdict.raw_response = std::string(text);
  static const std::regex kScoreLine(R"((^|\n)[ \t]*\**\s*score\s*\**\s*:[^\n]*)", std::regex::icase);
  verdict.rationale = trim(std::regex_replace(std::string(text), kScoreLine, "$1"));
  return verdict;
}

ExpressionLabel parse_expression_label(std::string_view text, LabelGranularity granularity) {
  static const std::pair<std::string_view, EmotionLabel> kFineWords[] = {
      {"angry", EmotionLabel::angry},       {"anger", EmotionLabel::angry},
      {"disgust", EmotionLabel::disgust},   {"disgusted", EmotionLabel::disgust},
      {"fear", EmotionLabel::fear},         {"fearful", EmotionLabel::fear},
      {"afraid", EmotionLabel::fear},       {"scared", EmotionLabel::fear},
      {"happy", EmotionLabel::happy},       {"happiness", EmotionLabel::happy},
      {"joy", EmotionLabel::happy},         {"neutral", EmotionLabel::neutral},
      {"sad", EmotionLabel::sad},           {"sadness", EmotionLabel::sad},
      {"surprise", EmotionLabel::surprise}, {"surprised", EmotionLabel::surprise},
  };
  static const std::regex kWord("[a-z]+");
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

  std::optional<EmotionLabel> first_fine;
  for (auto it = std::sregex_iterator(lowered.begin(), lowered.end(), kWord); it != std::sregex_iterator(); ++it) {
    const std::string word = it->str();
    if (granularity == LabelGranularity::coarse) {
      if (word == "positive") return CoarseLabel::positive;
      if (word == "negative") return CoarseLabel::negative;
      if (word == "neutral") return CoarseLabel::neutral;
    }
    if (!first_fine) {
      for (const auto& [w, label] : kFineWords) {
        if (word == w) {
          first_fine = label;
          break;
        }
      }
      if (first_fine && granularity == LabelGranularity::fine) return *first_fine;
    }
  }
  if (first_fine) return coarse_map(*first_fine);
  throw Error(ErrorCode::ClassifierParseFailure,
              fmt::format("no {} expression label in classifier reply: \"{}\"", to_string(granularity),
                          trim(text).substr(0, 80)));
}

}  // namespace fed::backends
