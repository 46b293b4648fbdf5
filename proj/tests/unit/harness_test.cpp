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

#include <gtest/gtest.h>

#include "fed/backends/mocks.hpp"
#include "fed/harness.hpp"
#include "fed/manifest.hpp"
#include "fixtures.hpp"

namespace fed::harness {
namespace {

using fed::testing::code_of;
using fed::testing::make_card;
using fed::testing::TempDir;

TEST(RunModel, WritesResultsAndImages) {
  TempDir dir;
  auto samples = fed::testing::write_benchmark(dir.path(), 4, 3);
  samples[3].dense_instruction.reset();
  backends::PatchEditor editor(0.5, {"surprise"});
  const auto results = run_model(editor, "patch-v1", samples, dir.path(), InstructionGranularity::dense,
                                 dir / "results", {nullptr, backends::RetryPolicy::immediate()}, 2);
  ASSERT_EQ(results.size(), 4u);
  EXPECT_EQ(load_records<EditResult>(dir / "results" / results_file_name("patch-v1", InstructionGranularity::dense)),
            results);
  EXPECT_EQ(results_file_name("m", InstructionGranularity::simple), "results.m.simple.jsonl");
  for (std::size_t i = 0; i < results.size(); ++i) {
    EXPECT_EQ(results[i].sample_id, samples[i].sample_id);
    EXPECT_NO_THROW(validate(results[i]));
  }
  ASSERT_TRUE(results[0].edited);
  EXPECT_EQ(results[0].edited->path, "images/patch-v1/dense/s000.png");
  EXPECT_NO_THROW(load_image(*results[0].edited, dir / "results"));
  ASSERT_TRUE(results[3].error);
  EXPECT_EQ(results[3].error->rfind("PreconditionViolation: ", 0), 0u);
  EXPECT_EQ(code_of([&] {
              run_model(editor, "../x", samples, dir.path(), InstructionGranularity::simple, dir / "r", {}, 1);
            }),
            ErrorCode::ConfigError);
}

TEST(RunModel, EditorFailuresBecomeFailedResults) {
  TempDir dir;
  const auto samples = fed::testing::write_benchmark(dir.path(), 3, 3);
  backends::PatchEditor editor(0.5, {"to happy"});
  const auto results = run_model(editor, "m", samples, dir.path(), InstructionGranularity::simple, dir / "r",
                                 {nullptr, backends::RetryPolicy::immediate()});
  std::size_t failed = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const bool happy = samples[i].trg_emotion == EmotionLabel::happy;
    EXPECT_EQ(results[i].error.has_value(), happy);
    if (happy) EXPECT_EQ(results[i].error->rfind("EditorFailure: ", 0), 0u) << *results[i].error;
    failed += happy;
  }
  EXPECT_GT(failed, 0u);
}

TEST(Aggregate, MeansGroupsAndOrder) {
  std::vector<ScoreCard> cards{
      make_card("low", "s1", 0.2, 30, 3, 3, 3, 1.5),
      make_card("high", "s1", 0.9, 2, 9, 9, 9, 1.0),
      make_card("high", "s2", 0.7, 4, 7, 7, 7, 1.1),
      make_card("dense", "s1", 0.5, 10, 5, 5, 5, 1.0, InstructionGranularity::dense),
  };
  ScoreCard failed;
  failed.model_id = "low";
  failed.sample_id = "s2";
  failed.error = "EditorFailure: no";
  cards.push_back(failed);

  const auto rows = aggregate(cards);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].model_id, "high");
  EXPECT_EQ(rows[1].model_id, "low");
  EXPECT_EQ(rows[2].granularity, InstructionGranularity::dense);
  EXPECT_DOUBLE_EQ(rows[0].mean_id_raw, 0.8);
  EXPECT_DOUBLE_EQ(rows[0].mean_bg_rmse, 3.0);
  EXPECT_DOUBLE_EQ(rows[0].mean_pq_raw, 8.0);
  EXPECT_DOUBLE_EQ(rows[0].mean_reg_ratio, 1.05);
  EXPECT_DOUBLE_EQ(rows[0].mean_fed, (cards[1].fed + cards[2].fed) / 2);
  EXPECT_EQ(rows[0].n_samples, 2u);
  EXPECT_EQ(rows[1].n_samples, 2u);
  EXPECT_EQ(rows[1].n_failed, 1u);

  std::vector<ScoreCard> only_failed{failed};
  EXPECT_EQ(code_of([&] { aggregate(only_failed); }), ErrorCode::EmptyGroup);
}

TEST(Aggregate, TiesBreakOnModelId) {
  std::vector<ScoreCard> cards{make_card("b", "s", 0.5, 5, 5, 5, 5, 1.0), make_card("a", "s", 0.5, 5, 5, 5, 5, 1.0)};
  const auto rows = aggregate(cards);
  EXPECT_EQ(rows[0].model_id, "a");
}

TEST(Format, UnitValuesDropLeadingZero) {
  EXPECT_EQ(format_unit(0.469, 3), ".469");
  EXPECT_EQ(format_unit(0.0012, 3), ".001");
  EXPECT_EQ(format_unit(1.0, 2), "1.00");
  EXPECT_EQ(format_unit(-0.25, 2), "-.25");
  EXPECT_EQ(format_unit(-0.0001, 3), ".000");
  EXPECT_EQ(parse_table_format("csv"), TableFormat::csv);
  EXPECT_EQ(code_of([] { parse_table_format("xlsx"); }), ErrorCode::UsageError);
}

TEST(Render, MarkdownAndCsv) {
  LeaderboardRow r;
  r.model_id = "m1";
  r.mean_id_raw = 0.58;
  r.mean_bg_rmse = 12.34;
  r.mean_pq_raw = 7.25;
  r.mean_sc_raw = 6;
  r.mean_gta_raw = 5.5;
  r.mean_reg_ratio = 0.876;
  r.mean_fed = 0.4691;
  r.n_samples = 10;
  r.n_failed = 1;
  LeaderboardRow d = r;
  d.granularity = InstructionGranularity::dense;
  const std::vector<LeaderboardRow> rows{r, d};
  const std::string md = render_leaderboard(rows, TableFormat::markdown);
  EXPECT_NE(md.find("| m1 | .58 | 12.3 | 7.2 | 6.0 | 5.5 | 0.88 | .469 | 10 | 1 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| Model | ID | BG↓ |"), std::string::npos);
  std::size_t tables = 0;
  for (std::size_t p = md.find("## "); p != std::string::npos; p = md.find("## ", p + 1)) ++tables;
  EXPECT_EQ(tables, 2u);
  const std::string csv = render_leaderboard(rows, TableFormat::csv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "granularity,model,ID,BG_lower_is_better,PQ,SC,GTA,REG,Score,n_samples,n_failed");
  EXPECT_NE(csv.find("dense,m1,.58,12.3,7.2,6.0,5.5,0.88,.469,10,1\n"), std::string::npos) << csv;
  EXPECT_EQ(code_of([] { render_leaderboard({}, TableFormat::csv); }), ErrorCode::PreconditionViolation);
}

TEST(LoadScores, FileOrDirectory) {
  TempDir dir;
  const std::vector<ScoreCard> a{make_card("a", "s1", 0.5, 5, 5, 5, 5, 1.0)};
  const std::vector<ScoreCard> b{make_card("b", "s1", 0.6, 5, 5, 5, 5, 1.0)};
  save_records(b, dir / "scores.b.simple.jsonl");
  save_records(a, dir / "scores.a.simple.jsonl");
  save_records(a, dir / "other.jsonl");
  const auto all = load_scores(dir.path());
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].model_id, "a");
  EXPECT_EQ(load_scores(dir / "other.jsonl").size(), 1u);
  TempDir empty;
  EXPECT_EQ(code_of([&] { load_scores(empty.path()); }), ErrorCode::MissingFile);
}

}  // namespace
}  // namespace fed::harness
