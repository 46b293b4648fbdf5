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

#include "fed/manifest.hpp"

#include <unordered_set>

namespace fed {

ManifestRecords load_manifest(const std::filesystem::path& path, ManifestKind kind) {
  switch (kind) {
    case ManifestKind::benchmark: return load_records<BenchmarkSample>(path);
    case ManifestKind::results: return load_records<EditResult>(path);
    case ManifestKind::scorecards: return load_records<ScoreCard>(path);
  }
  throw Error(ErrorCode::MalformedRecord, "unknown manifest kind");
}

void check_results_against(std::span<const BenchmarkSample> benchmark,
                           std::span<const EditResult> results) {
  std::unordered_set<std::string> ids;
  for (const auto& s : benchmark) ids.insert(s.sample_id);
  for (const auto& r : results) {
    if (!ids.contains(r.sample_id)) {
      throw Error(ErrorCode::InvariantViolation,
                  fmt::format("{}: result of model '{}' refers to no benchmark sample", r.sample_id,
                              r.model_id));
    }
  }
}

std::vector<std::string> verify_benchmark_files(std::span<const BenchmarkSample> benchmark,
                                                const std::filesystem::path& root) {
  std::vector<std::string> problems;
  std::unordered_set<std::string> seen;
  for (const auto& s : benchmark) {
    if (!seen.insert(s.sample_id).second) {
      problems.push_back(fmt::format("{}: duplicate sample_id", s.sample_id));
    }
    for (const ImageRef* ref : {&s.source, &s.ground_truth}) {
      try {
        (void)load_image(*ref, root, true);
      } catch (const Error& e) {
        problems.push_back(fmt::format("{}: {}", s.sample_id, e.what()));
      }
    }
  }
  return problems;
}

}  // namespace fed
