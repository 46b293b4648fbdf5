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

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fed::prompts {

// Names of the shipped templates (templates/<name>.txt).
inline constexpr std::string_view kPerceptualQuality = "pq_v1";
inline constexpr std::string_view kSemanticConsistency = "sc_v1";
inline constexpr std::string_view kGroundTruthAlignment = "gta_v1";
inline constexpr std::string_view kDenseInstruction = "dense_instruction_v1";
inline constexpr std::string_view kCaption = "caption_v1";
inline constexpr std::string_view kClassifyFine = "classify_fine_v1";
inline constexpr std::string_view kClassifyCoarse = "classify_coarse_v1";

std::vector<std::string_view> template_names();
/// Throws ConfigError for an unknown name.
std::string_view get(std::string_view name);
/// Substitutes `{key}` placeholders. Unused values and unknown placeholders are errors.
std::string render(std::string_view name, const std::map<std::string, std::string>& values = {});

}  // namespace fed::prompts
