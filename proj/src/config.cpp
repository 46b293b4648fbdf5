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

#include "fed/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

#include "fed/backends/mocks.hpp"
#include "fed/backends/remote.hpp"
#include "fed/error.hpp"
#include "fed/hashing.hpp"

namespace fed::config {

namespace fs = std::filesystem;
using namespace fed::backends;

namespace {

[[noreturn]] void bad(const std::string& message) { throw Error(ErrorCode::ConfigError, message); }

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) bad(fmt::format("{} must be an object", where));
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      bad(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

template <class T>
T get(const json& j, const char* key, T fallback, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    bad(fmt::format("{}.{} has the wrong type", where, key));
  }
}

std::string spec_type(const BackendSpec& spec, std::string_view where) {
  if (!spec.is_object()) bad(fmt::format("{} must be an object with a 'type'", where));
  const auto it = spec.find("type");
  if (it == spec.end() || !it->is_string()) bad(fmt::format("{} needs a string 'type'", where));
  return it->get<std::string>();
}

std::string default_key_env(BackendKind kind) {
  switch (kind) {
    case BackendKind::judge: return "FED_JUDGE_API_KEY";
    case BackendKind::editor: return "FED_EDITOR_API_KEY";
    default: return "FED_API_KEY";
  }
}

RemoteEndpoint endpoint(const BackendSpec& spec, BackendKind kind, const ToolkitConfig& config, std::string_view where) {
  check_keys(spec, {"type", "name", "version", "url", "api_key_env", "timeout_s", "max_concurrency", "supports_coarse"},
             where);
  RemoteEndpoint e;
  e.name = get<std::string>(spec, "name", "", where);
  e.base_url = get<std::string>(spec, "url", "", where);
  if (e.name.empty() || e.base_url.empty()) bad(fmt::format("{}: remote backends need 'name' and 'url'", where));
  e.version = get<std::string>(spec, "version", "1", where);
  const auto key_env = get<std::string>(spec, "api_key_env", default_key_env(kind), where);
  if (const char* key = std::getenv(key_env.c_str())) e.api_key = key;
  const int timeout = get<int>(spec, "timeout_s", 120, where);
  if (timeout < 1) bad(fmt::format("{}.timeout_s must be >= 1", where));
  e.timeout = std::chrono::seconds(timeout);
  e.max_concurrency = get<int>(spec, "max_concurrency", config.remote_concurrency, where);
  if (e.max_concurrency < 1) bad(fmt::format("{}.max_concurrency must be >= 1", where));
  return e;
}

[[noreturn]] void unknown_type(const std::string& type, std::string_view where) {
  bad(fmt::format("{}: unknown backend type '{}'", where, type));
}

}  // namespace

std::shared_ptr<FaceEmbedder> make_embedder(const BackendSpec& spec, const ToolkitConfig& config) {
  constexpr std::string_view where = "embedder";
  const auto type = spec_type(spec, where);
  if (type == "hash-seeded") {
    check_keys(spec, {"type", "seed", "dim", "strict"}, where);
    const int dim = get<int>(spec, "dim", 64, where);
    if (dim < 2) bad("embedder.dim must be >= 2");
    return std::make_shared<HashSeededEmbedder>(get<std::uint64_t>(spec, "seed", config.seed, where), dim,
                                                get<bool>(spec, "strict", false, where));
  }
  if (type == "remote") return make_remote_embedder(endpoint(spec, BackendKind::embedder, config, where));
  unknown_type(type, where);
}

std::shared_ptr<FaceLocalizer> make_localizer(const BackendSpec& spec, const ToolkitConfig& config) {
  constexpr std::string_view where = "localizer";
  const auto type = spec_type(spec, where);
  if (type == "centered-box") {
    check_keys(spec, {"type", "min_side"}, where);
    return std::make_shared<CenteredBoxLocalizer>(get<int>(spec, "min_side", 4, where));
  }
  if (type == "remote") return make_remote_localizer(endpoint(spec, BackendKind::localizer, config, where));
  unknown_type(type, where);
}

std::shared_ptr<PerceptualMetric> make_perceptual(const BackendSpec& spec, const ToolkitConfig& config) {
  constexpr std::string_view where = "perceptual";
  const auto type = spec_type(spec, where);
  if (type == "mean-abs-diff") {
    check_keys(spec, {"type"}, where);
    return std::make_shared<MeanAbsDiffPerceptual>();
  }
  if (type == "remote") return make_remote_perceptual(endpoint(spec, BackendKind::perceptual, config, where));
  unknown_type(type, where);
}

std::shared_ptr<VisionJudge> make_judge(const BackendSpec& spec, const ToolkitConfig& config) {
  constexpr std::string_view where = "judge";
  const auto type = spec_type(spec, where);
  if (type == "scripted-judge") {
    check_keys(spec, {"type", "name", "rules", "default_reply"}, where);
    std::vector<ScriptedJudge::Rule> rules;
    const json rule_list = get<json>(spec, "rules", json::array(), where);
    if (!rule_list.is_array()) bad("judge.rules must be an array");
    for (const auto& r : rule_list) {
      check_keys(r, {"prompt_contains", "first_image_hash", "reply"}, "judge.rules[]");
      ScriptedJudge::Rule rule;
      rule.prompt_contains = get<std::string>(r, "prompt_contains", "", where);
      if (r.contains("first_image_hash")) rule.first_image_hash = get<std::string>(r, "first_image_hash", "", where);
      rule.reply = get<std::string>(r, "reply", "", where);
      rules.push_back(std::move(rule));
    }
    std::optional<std::string> fallback;
    if (spec.contains("default_reply")) fallback = get<std::string>(spec, "default_reply", "", where);
    return std::make_shared<ScriptedJudge>(std::move(rules), fallback, get<std::string>(spec, "name", "scripted", where));
  }
  if (type == "remote") return make_remote_judge(endpoint(spec, BackendKind::judge, config, where));
  unknown_type(type, where);
}

std::shared_ptr<ExpressionClassifier> make_classifier(const BackendSpec& spec, const ToolkitConfig& config) {
  constexpr std::string_view where = "classifiers[]";
  const auto type = spec_type(spec, where);
  if (type == "scripted-classifier") {
    check_keys(spec, {"type", "name", "default_reply", "table", "supports_coarse"}, where);
    const auto name = get<std::string>(spec, "name", "", where);
    if (name.empty()) bad("classifiers[]: scripted classifiers need a 'name'");
    std::optional<std::string> fallback;
    if (spec.contains("default_reply")) fallback = get<std::string>(spec, "default_reply", "", where);
    auto c = std::make_shared<ScriptedClassifier>(name, fallback, get<bool>(spec, "supports_coarse", true, where));
    const json table = get<json>(spec, "table", json::object(), where);
    if (!table.is_object()) bad("classifiers[].table must map image hashes to replies");
    for (const auto& [hash, reply] : table.items()) {
      if (!reply.is_string()) bad("classifiers[].table values must be strings");
      c->set(hash, reply.get<std::string>());
    }
    return c;
  }
  if (type == "remote") {
    return make_remote_classifier(endpoint(spec, BackendKind::classifier, config, where),
                                  get<bool>(spec, "supports_coarse", true, where));
  }
  unknown_type(type, where);
}

std::shared_ptr<ImageEditor> make_editor(const BackendSpec& spec, const ToolkitConfig& config) {
  constexpr std::string_view where = "editor";
  const auto type = spec_type(spec, where);
  if (type == "identity") {
    check_keys(spec, {"type"}, where);
    return std::make_shared<IdentityEditor>();
  }
  if (type == "patch") {
    check_keys(spec, {"type", "alpha", "fail_on"}, where);
    const double alpha = get<double>(spec, "alpha", 0.5, where);
    if (!(alpha >= 0 && alpha <= 1)) bad("editor.alpha must lie in [0, 1]");
    return std::make_shared<PatchEditor>(alpha, get<std::vector<std::string>>(spec, "fail_on", {}, where));
  }
  if (type == "remote") return make_remote_editor(endpoint(spec, BackendKind::editor, config, where));
  unknown_type(type, where);
}

json ToolkitConfig::canonical() const {
  auto opt = [](const std::optional<BackendSpec>& s) { return s ? *s : json(nullptr); };
  json models_json = json::object();
  for (const auto& [id, spec] : models) models_json[id] = spec;
  return json{{"embedder", opt(embedder)},
              {"localizer", opt(localizer)},
              {"perceptual", opt(perceptual)},
              {"judge", opt(judge)},
              {"classifiers", classifiers},
              {"editor", opt(editor)},
              {"models", std::move(models_json)},
              {"metrics", {{"sigma", metrics.sigma}, {"bg_tau", metrics.bg_tau}}},
              {"pipeline",
               {{"ensemble", voting.ensemble},
                {"granularity", to_string(voting.granularity)},
                {"weights", {{"id", weights.id}, {"bg", weights.bg}}},
                {"candidates_per_emotion", candidates_per_emotion},
                {"min_resolution", min_resolution},
                {"captions", captions}}},
              {"paths", {{"cache", cache_dir.generic_string()}, {"data", data_dir.generic_string()}, {"output", output_dir.generic_string()}}},
              {"concurrency", {{"workers", workers}, {"remote_concurrency", remote_concurrency}}},
              {"seed", seed}};
}

std::string ToolkitConfig::hash() const { return sha256_hex(canonical().dump()); }

pipeline::PipelineConfig ToolkitConfig::pipeline_config() const {
  pipeline::PipelineConfig p;
  p.voting = voting;
  p.weights = weights;
  p.candidates_per_emotion = candidates_per_emotion;
  p.min_resolution = min_resolution;
  p.captions = captions;
  p.workers = workers;
  return p;
}

ToolkitConfig parse_config(const json& doc) {
  check_keys(doc, {"embedder", "localizer", "perceptual", "judge", "classifiers", "editor", "models", "metrics", "pipeline",
                   "paths", "concurrency", "seed"},
             "config");
  ToolkitConfig c;
  c.seed = get<std::uint64_t>(doc, "seed", 0, "config");
  if (const auto it = doc.find("concurrency"); it != doc.end()) {
    check_keys(*it, {"workers", "remote_concurrency"}, "concurrency");
    c.workers = get<int>(*it, "workers", c.workers, "concurrency");
    c.remote_concurrency = get<int>(*it, "remote_concurrency", c.remote_concurrency, "concurrency");
    if (c.workers < 1 || c.remote_concurrency < 1) bad("concurrency limits must be >= 1");
  }
  auto spec = [&](const char* key) -> std::optional<BackendSpec> {
    const auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    spec_type(*it, key);
    return *it;
  };
  c.embedder = spec("embedder");
  c.localizer = spec("localizer");
  c.perceptual = spec("perceptual");
  c.judge = spec("judge");
  c.editor = spec("editor");
  if (const auto it = doc.find("classifiers"); it != doc.end()) {
    if (!it->is_array()) bad("classifiers must be an array");
    for (const auto& s : *it) {
      spec_type(s, "classifiers[]");
      c.classifiers.push_back(s);
    }
  }
  if (const auto it = doc.find("models"); it != doc.end()) {
    if (!it->is_object()) bad("models must map model ids to editor specs");
    for (const auto& [id, s] : it->items()) {
      spec_type(s, fmt::format("models.{}", id));
      c.models[id] = s;
    }
  }
  if (const auto it = doc.find("metrics"); it != doc.end()) {
    check_keys(*it, {"sigma", "bg_tau"}, "metrics");
    c.metrics.sigma = get<double>(*it, "sigma", c.metrics.sigma, "metrics");
    c.metrics.bg_tau = get<double>(*it, "bg_tau", c.metrics.bg_tau, "metrics");
  }
  c.metrics.check();
  if (const auto it = doc.find("pipeline"); it != doc.end()) {
    check_keys(*it, {"ensemble", "granularity", "weights", "candidates_per_emotion", "min_resolution", "captions"},
               "pipeline");
    c.voting.ensemble = get<std::vector<std::string>>(*it, "ensemble", {}, "pipeline");
    try {
      c.voting.granularity = parse_label_granularity(get<std::string>(*it, "granularity", "coarse", "pipeline"));
    } catch (const Error& e) {
      bad(fmt::format("pipeline.granularity: {}", e.what()));
    }
    if (const auto w = it->find("weights"); w != it->end()) {
      check_keys(*w, {"id", "bg"}, "pipeline.weights");
      c.weights.id = get<double>(*w, "id", 1.0, "pipeline.weights");
      c.weights.bg = get<double>(*w, "bg", 1.0, "pipeline.weights");
    }
    c.candidates_per_emotion = get<int>(*it, "candidates_per_emotion", c.candidates_per_emotion, "pipeline");
    c.min_resolution = get<int>(*it, "min_resolution", c.min_resolution, "pipeline");
    c.captions = get<bool>(*it, "captions", c.captions, "pipeline");
  }
  c.pipeline_config().check();
  if (const auto it = doc.find("paths"); it != doc.end()) {
    check_keys(*it, {"cache", "data", "output"}, "paths");
    c.cache_dir = get<std::string>(*it, "cache", c.cache_dir.string(), "paths");
    c.data_dir = get<std::string>(*it, "data", c.data_dir.string(), "paths");
    c.output_dir = get<std::string>(*it, "output", c.output_dir.string(), "paths");
  }
  if (const char* env = std::getenv("FED_CACHE_DIR"); env && *env) c.cache_dir = env;

  if (c.embedder) make_embedder(*c.embedder, c);
  if (c.localizer) make_localizer(*c.localizer, c);
  if (c.perceptual) make_perceptual(*c.perceptual, c);
  if (c.judge) make_judge(*c.judge, c);
  if (c.editor) make_editor(*c.editor, c);
  for (const auto& s : c.classifiers) make_classifier(s, c);
  for (const auto& [id, s] : c.models) make_editor(s, c);
  return c;
}

ToolkitConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad(fmt::format("cannot read config '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    bad(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_config(doc);
}

const std::vector<std::pair<std::string, std::string>>& environment_variables() {
  static const std::vector<std::pair<std::string, std::string>> vars = {
      {"FED_CONFIG", "config file used when --config is not given"},
      {"FED_CACHE_DIR", "backend call cache directory (overrides paths.cache)"},
      {"FED_JUDGE_API_KEY", "bearer token for remote judges (default api_key_env of a judge)"},
      {"FED_EDITOR_API_KEY", "bearer token for remote editors (default api_key_env of an editor)"},
      {"FED_API_KEY", "bearer token for other remote backends"},
  };
  return vars;
}

BackendSuite build_suite(const ToolkitConfig& config, CallCache* cache) {
  BackendSuite s;
  if (config.embedder) s.embedder = make_embedder(*config.embedder, config);
  if (config.localizer) s.localizer = make_localizer(*config.localizer, config);
  if (config.perceptual) s.perceptual = make_perceptual(*config.perceptual, config);
  if (config.judge) s.judge = make_judge(*config.judge, config);
  if (config.editor) s.editor = make_editor(*config.editor, config);
  for (const auto& c : config.classifiers) s.classifiers.push_back(make_classifier(c, config));
  s.calls.cache = cache;
  return s;
}

}  // namespace fed::config
