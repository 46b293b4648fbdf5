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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fed/datamodel.hpp"

namespace fed::report {

struct ReportSummary {
  std::size_t pages = 0;
  std::vector<std::string> missing_images;  // "<page>: <reason>"
};

/// Static HTML bundle: index.html plus one page per score card with source, ground-truth and
/// edited thumbnails and the sub-metric breakdown. An image that cannot be loaded renders as
/// a placeholder with a MissingImage badge.
ReportSummary write_report(std::span<const ScoreCard> cards, std::span<const BenchmarkSample> benchmark,
                           const std::filesystem::path& benchmark_root, std::span<const EditResult> results,
                           const std::filesystem::path& results_root, const std::filesystem::path& out_dir,
                           int thumbnail_side = 192);

std::string html_escape(std::string_view text);

}  // namespace fed::report
