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
#include <string_view>
#include <vector>

#include "fed/backends/calls.hpp"
#include "fed/datamodel.hpp"

namespace fed::harness {

/// `results.<model_id>.<granularity>.jsonl`
std::string results_file_name(std::string_view model_id, InstructionGranularity g);

/// Edits every sample with `editor` and writes the results manifest plus one PNG per
/// successful sample under `results_dir/images/<model_id>/<granularity>/`. Samples without
/// an instruction of the requested granularity, and editor failures, become failed results.
std::vector<EditResult> run_model(backends::ImageEditor& editor, const std::string& model_id,
                                  std::span<const BenchmarkSample> benchmark,
                                  const std::filesystem::path& benchmark_root, InstructionGranularity granularity,
                                  const std::filesystem::path& results_dir, const backends::CallContext& ctx,
                                  int workers = 1);

struct LeaderboardRow {
  std::string model_id;
  InstructionGranularity granularity = InstructionGranularity::simple;
  double mean_id_raw = 0;
  double mean_bg_rmse = 0;
  double mean_pq_raw = 0;
  double mean_sc_raw = 0;
  double mean_gta_raw = 0;
  double mean_reg_ratio = 0;
  double mean_fed = 0;
  std::size_t n_samples = 0;
  std::size_t n_failed = 0;
};

/// Per (model, granularity) means over successfully scored cards. n_samples counts every
/// card, n_failed the ones that could not be scored. Rows are grouped by granularity and sorted by mean_fed descending,
/// then model_id. Throws EmptyGroup for a group without a single scored card.
std::vector<LeaderboardRow> aggregate(std::span<const ScoreCard> cards);

enum class TableFormat { markdown, csv };
TableFormat parse_table_format(std::string_view text);

/// Decimal places per column. ID and Score drop the leading zero (".58", ".469").
struct NumberStyle {
  int id = 2;
  int bg = 1;
  int judge = 1;
  int reg = 2;
  int fed = 3;
};

std::string format_unit(double value, int decimals);

/// One table per granularity with ID, BG (lower is better), PQ, SC, GTA, REG and Score
/// columns plus sample counts. Throws PreconditionViolation on empty input.
std::string render_leaderboard(std::span<const LeaderboardRow> rows, TableFormat format,
                               const NumberStyle& style = {});

/// Every ScoreCard in `path` (a manifest, or a directory of `scores*.jsonl` manifests).
std::vector<ScoreCard> load_scores(const std::filesystem::path& path);

}  // namespace fed::harness
