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

#include "fed/prompts.hpp"

#include <regex>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "fed/error.hpp"

namespace fed::prompts {

namespace {

const std::pair<std::string_view, std::string_view> kTemplates[] = {
#include "fed/prompt_templates.inc"
};

}  // namespace

std::vector<std::string_view> template_names() {
  std::vector<std::string_view> names;
  for (const auto& [name, _] : kTemplates) names.push_back(name);
  return names;
}

std::string_view get(std::string_view name) {
  for (const auto& [n, text] : kTemplates)
    if (n == name) return text;
  throw Error(ErrorCode::ConfigError, fmt::format("no prompt template named '{}'", name));
}

std::string render(std::string_view name, const std::map<std::string, std::string>& values) {
  const std::string text(get(name));
  static const std::regex kPlaceholder(R"(\{([a-z_]+)\})");
  std::string out;
  std::set<std::string> used;
  auto last = text.cbegin();
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kPlaceholder); it != std::sregex_iterator(); ++it) {
    const std::string key = (*it)[1].str();
    const auto value = values.find(key);
    if (value == values.end()) {
      throw Error(ErrorCode::PreconditionViolation, fmt::format("template '{}' needs '{}'", name, key));
    }
    out.append(last, (*it)[0].first);
    out += value->second;
    last = (*it)[0].second;
    used.insert(key);
  }
  out.append(last, text.cend());
  for (const auto& [key, _] : values) {
    if (!used.contains(key)) {
      throw Error(ErrorCode::PreconditionViolation, fmt::format("template '{}' has no '{{{}}}'", name, key));
    }
  }
  return out;
}

}  // namespace fed::prompts
