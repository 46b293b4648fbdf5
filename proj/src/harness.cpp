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

#include "fed/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include <fmt/format.h>

#include "fed/error.hpp"
#include "fed/manifest.hpp"
#include "fed/parallel.hpp"

namespace fed::harness {

namespace fs = std::filesystem;

namespace {

bool path_safe(std::string_view id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

std::string granularity_title(InstructionGranularity g) {
  return g == InstructionGranularity::simple ? "Simple" : "Dense";
}

}  // namespace

std::string results_file_name(std::string_view model_id, InstructionGranularity g) {
  return fmt::format("results.{}.{}.jsonl", model_id, to_string(g));
}

std::vector<EditResult> run_model(backends::ImageEditor& editor, const std::string& model_id,
                                  std::span<const BenchmarkSample> benchmark, const fs::path& benchmark_root,
                                  InstructionGranularity granularity, const fs::path& results_dir,
                                  const backends::CallContext& ctx, int workers) {
  if (!path_safe(model_id)) {
    throw Error(ErrorCode::ConfigError,
                fmt::format("model id '{}' may only use letters, digits, '-', '_' and '.'", model_id));
  }
  for (const auto& s : benchmark) {
    if (!path_safe(s.sample_id)) {
      throw Error(ErrorCode::InvariantViolation, fmt::format("sample_id '{}' is not usable as a file name", s.sample_id));
    }
  }
  std::vector<std::optional<EditResult>> slots(benchmark.size());
  parallel_for(benchmark.size(), workers, [&](std::size_t i) {
    const BenchmarkSample& s = benchmark[i];
    EditResult r;
    r.sample_id = s.sample_id;
    r.model_id = model_id;
    r.granularity = granularity;
    try {
      const auto instruction = s.instruction_for(granularity);
      if (!instruction) {
        throw Error(ErrorCode::PreconditionViolation, fmt::format("no {} instruction", to_string(granularity)));
      }
      const Image source = load_image(s.source, benchmark_root);
      const Image edited = backends::edit_image(editor, source, *instruction, 0, ctx);
      r.edited = store_image(edited, results_dir,
                             fmt::format("images/{}/{}/{}.png", model_id, to_string(granularity), s.sample_id));
    } catch (const Error& e) {
      r.error = fmt::format("{}: {}", to_string(e.code()), e.what());
    }
    slots[i] = std::move(r);
  });
  std::vector<EditResult> results;
  for (auto& s : slots)
    if (s) results.push_back(std::move(*s));
  save_records(results, results_dir / results_file_name(model_id, granularity));
  return results;
}

std::vector<LeaderboardRow> aggregate(std::span<const ScoreCard> cards) {
  struct Sums {
    double id = 0, bg = 0, pq = 0, sc = 0, gta = 0, reg = 0, fed = 0;
    std::size_t ok = 0, failed = 0;
  };
  std::map<std::pair<InstructionGranularity, std::string>, Sums> groups;
  for (const auto& c : cards) {
    Sums& s = groups[{c.granularity, c.model_id}];
    if (!c.ok()) {
      ++s.failed;
      continue;
    }
    s.id += c.id_raw;
    s.bg += c.bg_rmse;
    s.pq += c.pq_raw;
    s.sc += c.sc_raw;
    s.gta += c.gta_raw;
    s.reg += c.reg_ratio;
    s.fed += c.fed;
    ++s.ok;
  }
  std::vector<LeaderboardRow> rows;
  for (const auto& [key, s] : groups) {
    if (s.ok == 0) {
      throw Error(ErrorCode::EmptyGroup, fmt::format("model '{}' ({}) has no successfully scored sample",
                                                     key.second, to_string(key.first)));
    }
    const double n = static_cast<double>(s.ok);
    LeaderboardRow r;
    r.model_id = key.second;
    r.granularity = key.first;
    r.mean_id_raw = s.id / n;
    r.mean_bg_rmse = s.bg / n;
    r.mean_pq_raw = s.pq / n;
    r.mean_sc_raw = s.sc / n;
    r.mean_gta_raw = s.gta / n;
    r.mean_reg_ratio = s.reg / n;
    r.mean_fed = s.fed / n;
    r.n_samples = s.ok + s.failed;
    r.n_failed = s.failed;
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
    if (a.granularity != b.granularity) return a.granularity < b.granularity;
    if (a.mean_fed != b.mean_fed) return a.mean_fed > b.mean_fed;
    return a.model_id < b.model_id;
  });
  return rows;
}

TableFormat parse_table_format(std::string_view text) {
  if (text == "markdown" || text == "md") return TableFormat::markdown;
  if (text == "csv") return TableFormat::csv;
  throw Error(ErrorCode::UsageError, fmt::format("unknown table format '{}' (markdown or csv)", text));
}

std::string format_unit(double value, int decimals) {
  std::string s = fmt::format("{:.{}f}", value, decimals);
  if (s.starts_with("0.")) {
    s.erase(0, 1);
  } else if (s.starts_with("-0.")) {
    s.erase(1, 1);
  }
  if (s == "-." + std::string(static_cast<std::size_t>(decimals), '0')) s.erase(0, 1);
  return s;
}

std::string render_leaderboard(std::span<const LeaderboardRow> rows, TableFormat format, const NumberStyle& style) {
  if (rows.empty()) throw Error(ErrorCode::PreconditionViolation, "leaderboard without rows");
  auto cells = [&](const LeaderboardRow& r) {
    return std::vector<std::string>{format_unit(r.mean_id_raw, style.id),
                                    fmt::format("{:.{}f}", r.mean_bg_rmse, style.bg),
                                    fmt::format("{:.{}f}", r.mean_pq_raw, style.judge),
                                    fmt::format("{:.{}f}", r.mean_sc_raw, style.judge),
                                    fmt::format("{:.{}f}", r.mean_gta_raw, style.judge),
                                    fmt::format("{:.{}f}", r.mean_reg_ratio, style.reg),
                                    format_unit(r.mean_fed, style.fed),
                                    std::to_string(r.n_samples),
                                    std::to_string(r.n_failed)};
  };
  std::string out;
  if (format == TableFormat::csv) {
    out = "granularity,model,ID,BG_lower_is_better,PQ,SC,GTA,REG,Score,n_samples,n_failed\n";
    for (const auto& r : rows) {
      out += fmt::format("{},{},{}\n", to_string(r.granularity), r.model_id, fmt::join(cells(r), ","));
    }
    return out;
  }
  std::optional<InstructionGranularity> current;
  for (const auto& r : rows) {
    if (r.granularity != current) {
      current = r.granularity;
      if (!out.empty()) out += '\n';
      out += fmt::format("## {}\n\n", granularity_title(r.granularity));
      out += "| Model | ID | BG↓ | PQ | SC | GTA | REG | Score | Samples | Failed |\n";
      out += "|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
    }
    out += fmt::format("| {} | {} |\n", r.model_id, fmt::join(cells(r), " | "));
  }
  return out;
}

std::vector<ScoreCard> load_scores(const fs::path& path) {
  if (!fs::is_directory(path)) return load_records<ScoreCard>(path);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("scores") && name.ends_with(".jsonl")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::MissingFile, fmt::format("no scores*.jsonl in '{}'", path.string()));
  std::vector<ScoreCard> cards;
  for (const auto& f : files) {
    auto part = load_records<ScoreCard>(f);
    std::move(part.begin(), part.end(), std::back_inserter(cards));
  }
  return cards;
}

}  // namespace fed::harness
