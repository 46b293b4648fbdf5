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

#include <optional>
#include <string>
#include <string_view>

#include <fmt/format.h>
#include <json.hpp>

#include "fed/datamodel.hpp"
#include "fed/error.hpp"

namespace fed::detail {

using json = nlohmann::json;

inline json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedRecord, fmt::format("invalid JSON: {}", e.what()));
  }
}

inline json parse_object(std::string_view text) {
  json j = parse_json(text);
  if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, "record is not a JSON object");
  return j;
}

template <class T>
T field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) throw Error(ErrorCode::MalformedRecord, fmt::format("missing field '{}'", name));
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::MalformedRecord, fmt::format("field '{}' has the wrong type", name));
  }
}

template <class T>
std::optional<T> optional_field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return field<T>(j, name);
}

inline void check_schema(const json& j, std::string_view expected) {
  const auto schema = field<std::string>(j, "schema");
  if (schema != expected) {
    throw Error(ErrorCode::MalformedRecord,
                fmt::format("schema '{}' where '{}' was expected", schema, expected));
  }
}

/// Rejects keys outside `allowed`.
inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                       std::string_view where) {
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw Error(ErrorCode::MalformedRecord, fmt::format("unknown key '{}' in {}", key, where));
  }
}

inline json image_ref_json(const ImageRef& r) {
  return json{{"path", r.path}, {"content_hash", r.content_hash}, {"width", r.width}, {"height", r.height}};
}

inline ImageRef image_ref_from(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, "image reference is not an object");
  ImageRef r;
  r.path = field<std::string>(j, "path");
  r.content_hash = field<std::string>(j, "content_hash");
  r.width = field<int>(j, "width");
  r.height = field<int>(j, "height");
  return r;
}

inline ImageRef image_ref_field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) throw Error(ErrorCode::MalformedRecord, fmt::format("missing field '{}'", name));
  return image_ref_from(*it);
}

template <class Parse>
auto parse_label_field(const json& j, const char* name, Parse parse) {
  const auto text = field<std::string>(j, name);
  try {
    return parse(text);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedRecord, fmt::format("field '{}': {}", name, e.what()));
  }
}

}  // namespace fed::detail
