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

#include <string>
#include <string_view>

#include "fed/backends/interfaces.hpp"

namespace fed::backends {

/// Extracts a 0-10 judge score. Markers are tried in precedence order:
///   1. "SCORE: <n>" (case-insensitive),
///   2. "<n>/10",
///   3. a lone integer at the start of the reply.
/// The first integer in range next to the highest-precedence marker wins.
/// Throws JudgeParseFailure.
int parse_judge_response(std::string_view text);

/// Score plus the reply without its SCORE line.
JudgeVerdict parse_judge_verdict(std::string_view text);

/// First label word of the requested granularity in a classifier reply. A coarse request
/// also accepts a fine label and maps it. Throws ClassifierParseFailure.
ExpressionLabel parse_expression_label(std::string_view text, LabelGranularity granularity);

}  // namespace fed::backends
