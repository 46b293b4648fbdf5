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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fed/backends/cache.hpp"
#include "fed/backends/suite.hpp"
#include "fed/metrics.hpp"
#include "fed/pipeline.hpp"

namespace fed::config {

using nlohmann::json;

/// One backend selection: {"type": ..., type-specific options}.
///   hash-seeded          embedder   seed, dim, strict
///   centered-box         localizer  min_side
///   mean-abs-diff        perceptual
///   scripted-judge       judge      name, rules [{prompt_contains, reply}], default_reply
///   scripted-classifier  classifier name, default_reply, table {image hash: reply}, supports_coarse
///   identity             editor
///   patch                editor     alpha, fail_on [instruction substrings]
///   remote               any        name, version, url, api_key_env, timeout_s, max_concurrency,
///                                   supports_coarse (classifiers only)
using BackendSpec = json;

struct ToolkitConfig {
  std::optional<BackendSpec> embedder;
  std::optional<BackendSpec> localizer;
  std::optional<BackendSpec> perceptual;
  std::optional<BackendSpec> judge;
  std::vector<BackendSpec> classifiers;
  std::optional<BackendSpec> editor;
  std::map<std::string, BackendSpec> models;  // editors under evaluation, by model id

  metrics::MetricConfig metrics;

  pipeline::VotingConfig voting;
  pipeline::RankWeights weights;
  int candidates_per_emotion = 3;
  int min_resolution = 64;
  bool captions = true;

  std::filesystem::path cache_dir = ".fed-cache";
  std::filesystem::path data_dir = "data";
  std::filesystem::path output_dir = "out";

  int workers = 4;
  int remote_concurrency = 4;
  std::uint64_t seed = 0;

  /// The fully resolved config, keys sorted. Its SHA-256 is the run's config hash.
  json canonical() const;
  std::string hash() const;
  pipeline::PipelineConfig pipeline_config() const;
};

/// Parses and validates a config document. Unknown keys and malformed values throw ConfigError.
ToolkitConfig parse_config(const json& document);
ToolkitConfig load_config(const std::filesystem::path& path);

/// Environment variables the toolkit reads, with a one-line description each.
const std::vector<std::pair<std::string, std::string>>& environment_variables();

/// Instantiates backends from specs. Throws ConfigError.
std::shared_ptr<backends::FaceEmbedder> make_embedder(const BackendSpec& spec, const ToolkitConfig& config);
std::shared_ptr<backends::FaceLocalizer> make_localizer(const BackendSpec& spec, const ToolkitConfig& config);
std::shared_ptr<backends::PerceptualMetric> make_perceptual(const BackendSpec& spec, const ToolkitConfig& config);
std::shared_ptr<backends::VisionJudge> make_judge(const BackendSpec& spec, const ToolkitConfig& config);
std::shared_ptr<backends::ExpressionClassifier> make_classifier(const BackendSpec& spec, const ToolkitConfig& config);
std::shared_ptr<backends::ImageEditor> make_editor(const BackendSpec& spec, const ToolkitConfig& config);

/// Every configured backend, calls routed through `cache` (may be null).
backends::BackendSuite build_suite(const ToolkitConfig& config, backends::CallCache* cache);

}  // namespace fed::config
