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

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fed/backends/cache.hpp"
#include "fed/backends/mocks.hpp"
#include "fed/harness.hpp"
#include "fed/hashing.hpp"
#include "fed/humanstudy.hpp"
#include "fed/manifest.hpp"
#include "fed/metrics.hpp"
#include "fed/pipeline.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace fed;
using fed::testing::below;
using fed::testing::TempDir;
using fed::testing::uniform01;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Result of one criterion: pass flag plus a one-line detail.
struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

backends::CallContext immediate(backends::CallCache* cache = nullptr) {
  return {cache, backends::RetryPolicy::immediate()};
}

// --- REG penalty ---------------------------------------------------------------------------

Verdict reg_penalty_sweep() {
  Verdict v;
  const auto start = Clock::now();
  metrics::MetricConfig cfg;
  cfg.sigma = 0.5;
  double max_err = 0, max_asym = 0;
  int points = 0;
  for (int i = 0; i <= 3000; ++i) {
    const double r = i * 0.001;
    const double expected = std::exp(-(r - 1) * (r - 1) / 0.5);
    const double got = metrics::reg_penalty(r, cfg);
    max_err = std::max(max_err, std::abs(got - expected));
    if (i != 1000) v.require(got < 1.0, fmt::format("penalty {} at r={} is not below the peak", got, r));
    ++points;
  }
  for (int i = 0; i <= 1000; ++i) {
    const double d = i * 0.001;
    max_asym = std::max(max_asym, std::abs(metrics::reg_penalty(1 - d, cfg) - metrics::reg_penalty(1 + d, cfg)));
  }
  const double elapsed = seconds_since(start);
  v.require(metrics::reg_penalty(1.0, cfg) == 1.0, "peak at r=1 is not exactly 1");
  v.require(max_err <= 1e-12, fmt::format("max error {:.3e} > 1e-12", max_err));
  v.require(max_asym <= 1e-12, fmt::format("max asymmetry {:.3e} > 1e-12", max_asym));
  v.require(elapsed < 1.0, fmt::format("took {:.3f}s", elapsed));
  if (v.pass) {
    v.detail = fmt::format("{} points, max_err={:.1e}, max_asym={:.1e}, {:.4f}s", points, max_err, max_asym, elapsed);
  }
  return v;
}

// --- lazy editing --------------------------------------------------------------------------

Verdict lazy_editing_penalty() {
  Verdict v;
  const double floor = std::exp(-2.0);
  std::size_t scored = 0;
  double worst = 0;
  for (int judge_score : {10, 6, 0}) {
    TempDir dir;
    const auto bench = fed::testing::write_benchmark(dir.path(), 12, 31);
    auto mocks = fed::testing::make_mocks(judge_score, {}, std::make_shared<backends::IdentityEditor>());
    const auto suite = mocks.suite();
    const auto results = harness::run_model(*mocks.editor, "identity", bench, dir.path(), InstructionGranularity::simple,
                                            dir / "results", suite.calls);
    const auto cards = metrics::score_batch(bench, results, dir.path(), dir / "results", suite, {});
    for (const auto& c : cards) {
      v.require(c.ok(), fmt::format("{} failed: {}", c.sample_id, c.error.value_or("")));
      if (!c.ok()) continue;
      ++scored;
      v.require(c.reg_ratio == 0.0, fmt::format("{}: reg_ratio={}", c.sample_id, c.reg_ratio));
      v.require(std::abs(c.s_reg - floor) <= 1e-6, fmt::format("{}: s_reg={}", c.sample_id, c.s_reg));
      v.require(c.fed <= floor + 1e-12, fmt::format("{}: fed={} above exp(-2)", c.sample_id, c.fed));
      worst = std::max(worst, c.fed);
    }
  }
  if (v.pass) v.detail = fmt::format("{} cards, s_reg=exp(-2)={:.6f}, max fed={:.6f}", scored, floor, worst);
  return v;
}

// --- FED composition -----------------------------------------------------------------------

double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

Image shift_region(const Image& base, const BBox& box, int face_shift, int background_shift) {
  Image out = base;
  for (int y = 0; y < base.height; ++y)
    for (int x = 0; x < base.width; ++x) {
      const bool face = x >= box.x && x < box.x + box.w && y >= box.y && y < box.y + box.h;
      for (int c = 0; c < Image::kChannels; ++c) out.at(x, y, c) = static_cast<std::uint8_t>(base.at(x, y, c) + (face ? face_shift : background_shift));
    }
  return out;
}

Verdict fed_composition() {
  Verdict v;
  std::mt19937_64 rng(2026);
  constexpr int kSide = 32;
  const BBox box = backends::CenteredBoxLocalizer::box_for(kSide, kSide);
  double max_err = 0;
  int configs = 0;
  for (int trial = 0; trial < 40; ++trial) {
    TempDir dir;
    Image src(kSide, kSide);
    for (auto& p : src.pixels) p = static_cast<std::uint8_t>(70 + below(rng, 111));
    const int t = static_cast<int>(below(rng, 41));
    const int g = 10 + static_cast<int>(below(rng, 31));
    const int b = 1 + static_cast<int>(below(rng, 40));
    const int pq = static_cast<int>(below(rng, 11));
    const int sc = trial % 10 == 0 ? 0 : static_cast<int>(below(rng, 11));
    const int gta = trial % 10 == 0 ? 0 : static_cast<int>(below(rng, 11));
    const Image trg = shift_region(src, box, t, b);
    const Image gt = shift_region(src, box, g, 0);

    std::vector<double> u(8), w(8);
    for (auto& x : u) x = uniform01(rng) - 0.3;
    for (auto& x : w) x = uniform01(rng) - 0.3;
    auto embedder = std::make_shared<backends::ScriptedEmbedder>();
    embedder->set(src, u);
    embedder->set(trg, w);

    using Rule = backends::ScriptedJudge::Rule;
    backends::BackendSuite suite;
    suite.embedder = embedder;
    suite.localizer = std::make_shared<backends::CenteredBoxLocalizer>();
    suite.perceptual = std::make_shared<backends::MeanAbsDiffPerceptual>();
    suite.judge = std::make_shared<backends::ScriptedJudge>(std::vector<Rule>{
        {"perceptual quality", std::nullopt, fmt::format("Clean.\nSCORE: {}", pq)},
        {"instruction following", std::nullopt, fmt::format("Partial.\nSCORE: {}", sc)},
        {"facial expression similarity", std::nullopt, fmt::format("Close.\nSCORE: {}", gta)}});
    suite.calls = immediate();

    BenchmarkSample sample;
    sample.sample_id = fmt::format("c{:02}", trial);
    sample.src_emotion = EmotionLabel::neutral;
    sample.trg_emotion = EmotionLabel::happy;
    sample.simple_instruction = render_instruction(sample.src_emotion, sample.trg_emotion);
    sample.source = store_image(src, dir.path(), "src.png");
    sample.ground_truth = store_image(gt, dir.path(), "gt.png");
    EditResult result{sample.sample_id, "m", InstructionGranularity::simple, std::nullopt, std::nullopt};
    result.edited = store_image(trg, dir.path(), "trg.png");

    const ScoreCard card = metrics::score_sample(sample, result, dir.path(), dir.path(), suite, {});

    const double id01 = std::max(oracle_cosine(u, w), 0.0);
    const double bg01 = std::exp(-b / 25.0);
    const double ratio = static_cast<double>(t) / g;
    const double s_fid = (id01 + bg01 + pq / 10.0) / 3.0;
    const double s_align = (sc / 10.0 + gta / 10.0) / 2.0;
    const double s_reg = std::exp(-(ratio - 1) * (ratio - 1) / (2 * 0.25));
    const double expected = s_fid * s_align * s_reg;
    const double err = std::abs(card.fed - expected);
    max_err = std::max(max_err, err);
    ++configs;
    v.require(err <= 1e-9, fmt::format("config {}: fed={} expected {}", trial, card.fed, expected));
    v.require(std::abs(card.bg_rmse - b) <= 1e-9, fmt::format("config {}: bg_rmse={} expected {}", trial, card.bg_rmse, b));
    v.require(std::abs(card.reg_ratio - ratio) <= 1e-9, fmt::format("config {}: reg_ratio={} expected {}", trial, card.reg_ratio, ratio));
    if (sc == 0 && gta == 0) v.require(card.fed == 0.0, fmt::format("config {}: zero alignment gave fed={}", trial, card.fed));
  }
  int annihilated = 0;
  for (int i = 0; i < 300; ++i) {
    const double a = uniform01(rng), b = uniform01(rng);
    v.require(metrics::fed_score(0.0, a, b) == 0.0 && metrics::fed_score(a, 0.0, b) == 0.0 &&
                  metrics::fed_score(a, b, 0.0) == 0.0,
              "a zero factor did not annihilate the product");
    annihilated += 3;
  }
  if (v.pass) v.detail = fmt::format("{} configurations, max_err={:.1e}; {} zero-factor cases", configs, max_err, annihilated);
  return v;
}

// --- BG oracle -----------------------------------------------------------------------------

Verdict bg_oracle() {
  Verdict v;
  std::mt19937_64 rng(99);
  double max_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Image a = fed::testing::random_image(rng, 16, 16);
    const Image b = fed::testing::random_image(rng, 16, 16);
    backends::FaceRegion region = backends::FaceRegion::from_bbox(16, 16, {4, 4, 8, 8});
    for (auto& m : region.mask) m = below(rng, 2);
    region.mask[static_cast<std::size_t>(below(rng, region.mask.size()))] = 0;
    double sum = 0;
    long n = 0;
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        if (region.mask[static_cast<std::size_t>(y * 16 + x)]) continue;
        for (int c = 0; c < 3; ++c) {
          const double d = double(a.at(x, y, c)) - double(b.at(x, y, c));
          sum += d * d;
          ++n;
        }
      }
    const double expected = std::sqrt(sum / double(n));
    const double err = std::abs(metrics::compute_bg_rmse(a, b, region) - expected);
    max_err = std::max(max_err, err);
    v.require(err <= 1e-6, fmt::format("fixture {}: error {:.3e}", trial, err));
  }
  if (v.pass) v.detail = fmt::format("100 fixtures, max_err={:.1e}", max_err);
  return v;
}

// --- voting --------------------------------------------------------------------------------

Verdict voting_oracle() {
  Verdict v;
  constexpr std::array<CoarseLabel, 3> kLabels{CoarseLabel::positive, CoarseLabel::neutral, CoarseLabel::negative};
  int vectors = 0, ties = 0;
  for (int code = 0; code < 243; ++code) {
    std::vector<CoarseLabel> labels;
    std::vector<backends::ExpressionLabel> wrapped;
    std::array<int, 3> counts{};
    int rest = code;
    for (int k = 0; k < 5; ++k) {
      labels.push_back(kLabels[static_cast<std::size_t>(rest % 3)]);
      wrapped.emplace_back(labels.back());
      ++counts[static_cast<std::size_t>(rest % 3)];
      rest /= 3;
    }
    const int top = *std::max_element(counts.begin(), counts.end());
    std::optional<CoarseLabel> expected;
    int holders = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (counts[i] == top) {
        ++holders;
        expected = kLabels[i];
      }
    }
    if (holders > 1) {
      expected.reset();
      ++ties;
    }
    const auto got = pipeline::vote(std::span<const CoarseLabel>(labels));
    const auto got_wrapped = pipeline::vote(std::span<const backends::ExpressionLabel>(wrapped));
    v.require(got == expected, fmt::format("vector {} disagrees with brute force", code));
    v.require(got_wrapped.has_value() == expected.has_value() &&
                  (!expected || std::get<CoarseLabel>(*got_wrapped) == *expected),
              fmt::format("vector {} disagrees with brute force (label overload)", code));
    ++vectors;
  }
  std::mt19937_64 rng(7);
  int fine = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<EmotionLabel> labels;
    std::array<int, 7> counts{};
    for (int k = 0; k < 5; ++k) {
      const auto i = static_cast<std::size_t>(below(rng, 7));
      labels.push_back(kAllEmotions[i]);
      ++counts[i];
    }
    const int top = *std::max_element(counts.begin(), counts.end());
    std::optional<EmotionLabel> expected;
    if (std::count(counts.begin(), counts.end(), top) == 1)
      expected = kAllEmotions[static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin())];
    v.require(pipeline::vote(std::span<const EmotionLabel>(labels)) == expected,
              fmt::format("fine vector {} disagrees with brute force", trial));
    ++fine;
  }
  const std::array<std::pair<EmotionLabel, CoarseLabel>, 7> table{{{EmotionLabel::happy, CoarseLabel::positive},
                                                                   {EmotionLabel::neutral, CoarseLabel::neutral},
                                                                   {EmotionLabel::angry, CoarseLabel::negative},
                                                                   {EmotionLabel::disgust, CoarseLabel::negative},
                                                                   {EmotionLabel::fear, CoarseLabel::negative},
                                                                   {EmotionLabel::sad, CoarseLabel::negative},
                                                                   {EmotionLabel::surprise, CoarseLabel::negative}}};
  int mapped = 0;
  for (const auto& [e, c] : table) {
    v.require(coarse_map(e) == c, fmt::format("coarse_map({}) is wrong", to_string(e)));
    mapped += coarse_map(e) == c;
  }
  if (v.pass) v.detail = fmt::format("{}/243 coarse vectors ({} ties), {} sampled fine vectors, coarse_map {}/7", vectors,
                                   ties, fine, mapped);
  return v;
}

// --- fidelity ranking ----------------------------------------------------------------------

/// Independent ranking: selection of the best remaining entry each round.
std::vector<std::size_t> oracle_rank(const std::vector<pipeline::RankInput>& group, const pipeline::RankWeights& w) {
  double ilo = INFINITY, ihi = -INFINITY, blo = INFINITY, bhi = -INFINITY;
  for (const auto& g : group) {
    ilo = std::min(ilo, g.cosine);
    ihi = std::max(ihi, g.cosine);
    blo = std::min(blo, -g.rmse);
    bhi = std::max(bhi, -g.rmse);
  }
  auto norm = [](double x, double lo, double hi) { return hi > lo ? (x - lo) / (hi - lo) : 1.0; };
  std::vector<double> score(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    score[i] = w.id * norm(group[i].cosine, ilo, ihi) + w.bg * norm(-group[i].rmse, blo, bhi);
  }
  auto better = [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    if (group[a].content_hash != group[b].content_hash) return group[a].content_hash < group[b].content_hash;
    return group[a].candidate_id < group[b].candidate_id;
  };
  std::vector<std::size_t> left(group.size()), order;
  for (std::size_t i = 0; i < left.size(); ++i) left[i] = i;
  while (!left.empty()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < left.size(); ++k)
      if (better(left[k], left[best])) best = k;
    order.push_back(left[best]);
    left.erase(left.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return order;
}

Verdict fidelity_rank_oracle() {
  Verdict v;
  std::mt19937_64 rng(1234);
  int hash_ties = 0, id_ties = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + below(rng, 5);
    std::vector<pipeline::RankInput> group;
    for (std::size_t i = 0; i < n; ++i) {
      pipeline::RankInput in;
      if (i > 0 && below(rng, 3) == 0) {
        in = group[below(rng, i)];
        if (below(rng, 2) == 0) in.content_hash = sha256_hex(fmt::format("{}-{}", trial, i));
      } else {
        in.cosine = static_cast<double>(below(rng, 9)) / 8.0 - 0.25;
        in.rmse = static_cast<double>(below(rng, 6)) * 2.5;
        in.content_hash = sha256_hex(fmt::format("{}-{}", trial, i));
      }
      in.candidate_id = fmt::format("src/happy/{}", i);
      group.push_back(in);
    }
    pipeline::RankWeights w;
    if (trial % 4 == 1) w = {0.7, 0.3};
    if (trial % 4 == 2) w = {1.0, 0.0};
    const auto ranked = pipeline::rank_by_fidelity(group, w);
    const auto expected = oracle_rank(group, w);
    for (std::size_t k = 0; k < n; ++k) {
      v.require(ranked[k].index == expected[k], fmt::format("group {} differs at position {}", trial, k));
      v.require(ranked[k].rank == static_cast<int>(k) + 1, fmt::format("group {} has a wrong rank", trial));
      if (k > 0 && ranked[k].s_total == ranked[k - 1].s_total) {
        const auto& a = group[ranked[k - 1].index];
        const auto& b = group[ranked[k].index];
        (a.content_hash == b.content_hash ? id_ties : hash_ties) += 1;
      }
    }
  }
  v.require(hash_ties > 0 && id_ties > 0, "the generator produced no tie-break cases");

  // End to end through fidelity_rank: retention never exceeds two and follows the rank.
  backends::BackendSuite suite;
  suite.embedder = std::make_shared<backends::HashSeededEmbedder>(3, 16);
  suite.localizer = std::make_shared<backends::CenteredBoxLocalizer>();
  suite.calls = immediate();
  std::size_t groups = 0, max_retained = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Image source = fed::testing::random_image(rng, 12, 12);
    const std::size_t n = 2 + below(rng, 5);
    std::vector<Image> images;
    std::vector<pipeline::CandidateRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
      images.push_back(i > 0 && below(rng, 4) == 0 ? images[below(rng, i)] : fed::testing::random_image(rng, 12, 12));
      pipeline::CandidateRecord r;
      r.source_id = "src";
      r.variant = static_cast<std::uint32_t>(i);
      r.candidate_id = pipeline::candidate_id("src", EmotionLabel::happy, r.variant);
      r.candidate.content_hash = image_hash(images.back());
      records.push_back(r);
    }
    std::vector<const Image*> pointers;
    for (const auto& im : images) pointers.push_back(&im);
    pipeline::fidelity_rank(source, records, pointers, suite, {});
    std::vector<pipeline::RankInput> inputs;
    for (const auto& r : records) inputs.push_back({r.s_id_raw, r.s_bg_raw, r.candidate.content_hash, r.candidate_id});
    const auto expected = oracle_rank(inputs, {});
    std::size_t retained = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& r = records[expected[k]];
      v.require(r.rank == static_cast<int>(k) + 1, fmt::format("end-to-end group {} ranks differ from the oracle", trial));
      v.require(r.retained == (k < 2), fmt::format("end-to-end group {} retains the wrong candidates", trial));
      retained += r.retained;
    }
    v.require(retained <= 2, fmt::format("end-to-end group {} retained {}", trial, retained));
    max_retained = std::max(max_retained, retained);
    ++groups;
  }
  if (v.pass) {
    v.detail = fmt::format("1000 groups ({} hash and {} id tie-breaks) + {} end-to-end groups, max retained {}",
                           hash_ties, id_ties, groups, max_retained);
  }
  return v;
}

// --- pipeline ------------------------------------------------------------------------------

const std::vector<std::string> kPipelineFiles{"pending_verification.jsonl", "candidates.jsonl", "audit.jsonl"};

Verdict pipeline_end_to_end() {
  Verdict v;
  TempDir dir;
  const auto sources = fed::testing::write_sources(dir / "sources", 5, 77);
  std::vector<pipeline::PipelineRun> runs;
  double slowest = 0;
  for (const char* name : {"run_a", "run_b"}) {
    auto mocks = fed::testing::make_hash_vote_mocks(6, 5, std::make_shared<backends::PatchEditor>(0.5));
    const auto start = Clock::now();
    runs.push_back(pipeline::run_pipeline(sources, dir / "sources", {}, mocks.suite(), dir / name));
    slowest = std::max(slowest, seconds_since(start));
  }
  for (const auto& f : kPipelineFiles) {
    v.require(read_file_bytes((dir / "run_a" / f).string()) == read_file_bytes((dir / "run_b" / f).string()),
              f + " differs between runs");
  }
  const auto& r = runs[0];
  std::size_t emitted = 0, dropped = 0;
  for (const auto& a : r.audit) {
    if (!a.candidate_id) continue;
    emitted += a.action == pipeline::AuditAction::emit;
    dropped += a.action != pipeline::AuditAction::emit;
  }
  v.require(r.sources_done == 5, fmt::format("{} of 5 sources finished", r.sources_done));
  v.require(r.generated == r.emitted + r.dropped,
            fmt::format("generated {} != emitted {} + dropped {}", r.generated, r.emitted, r.dropped));
  v.require(emitted == r.emitted && dropped == r.dropped, "audit log counts disagree with the run summary");
  v.require(!r.tasks.empty(), "no verification tasks were produced");
  v.require(slowest < 30.0, fmt::format("a run took {:.1f}s", slowest));
  if (v.pass) {
    v.detail = fmt::format("generated={} emitted={} dropped={} tasks={}, byte-identical, slowest run {:.2f}s",
                           r.generated, r.emitted, r.dropped, r.tasks.size(), slowest);
  }
  return v;
}

// --- human study ---------------------------------------------------------------------------

Verdict human_study_arithmetic() {
  Verdict v;
  const auto f = fed::testing::make_study_fixture(100, 77, 0);
  const auto report = study::run_study_report(f.pairs, f.cards, f.votes, study::builtin_metrics());
  double fed_accuracy = -1;
  for (const auto& row : report.rows) {
    if (row.metric == "FED-Score" && row.panel == "overall") fed_accuracy = row.accuracy;
  }
  v.require(fed_accuracy == 0.77, fmt::format("FED-Score agreement is {}", fed_accuracy));
  v.require(fmt::format("{:.4f}", fed_accuracy) == "0.7700", "FED-Score agreement does not print as 0.7700");

  using study::Choice;
  using study::Preference;
  const std::map<std::string, Choice> human{{"a", Choice::left}, {"b", Choice::right}, {"c", Choice::left}, {"d", Choice::right}};
  struct Case {
    std::map<std::string, Preference> metric;
    double expected;
  };
  const std::vector<Case> cases{
      {{{"a", Preference::tie}, {"b", Preference::tie}, {"c", Preference::tie}, {"d", Preference::tie}}, 0.5},
      {{{"a", Preference::left}, {"b", Preference::tie}, {"c", Preference::right}, {"d", Preference::tie}}, 0.5},
      {{{"a", Preference::left}, {"b", Preference::right}, {"c", Preference::tie}, {"d", Preference::left}}, 0.625},
      {{{"a", Preference::right}, {"b", Preference::left}, {"c", Preference::tie}, {"d", Preference::tie}}, 0.25},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const double got = study::agreement_accuracy(cases[i].metric, human);
    v.require(got == cases[i].expected, fmt::format("tie case {}: {} != {}", i, got, cases[i].expected));
  }
  const auto tied = fed::testing::make_study_fixture(10, 6, 2);
  const auto tied_report = study::run_study_report(tied.pairs, tied.cards, tied.votes, study::builtin_metrics());
  for (const auto& row : tied_report.rows) {
    if (row.metric == "FED-Score" && row.panel == "overall") {
      v.require(row.n_ties == 2 && row.accuracy == 0.7, fmt::format("tied fixture gave {}", row.accuracy));
    }
  }

  int patterns = 0;
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<study::PreferenceVote> votes;
    int lefts = 0;
    for (int a = 0; a < 3; ++a) {
      const bool left = (mask >> a) & 1;
      lefts += left;
      votes.push_back({"pair-00001", fmt::format("ann{}", a), study::Perspective::overall, left ? Choice::left : Choice::right, ""});
    }
    const Choice expected = lefts >= 2 ? Choice::left : Choice::right;
    v.require(study::consensus(votes) == expected, fmt::format("consensus wrong for pattern {}", mask));
    ++patterns;
  }
  if (v.pass) {
    v.detail = fmt::format("FED-Score agreement {:.4f} on 100 pairs, {} tie cases + tied fixture, {}/8 consensus patterns",
                           fed_accuracy, cases.size(), patterns);
  }
  return v;
}

// --- leaderboard fixture -------------------------------------------------------------------

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

Verdict leaderboard_reference_dense() {
  Verdict v;
  std::ifstream in(fs::path(FED_ACCEPTANCE_DATA) / "reference_dense.csv");
  v.require(static_cast<bool>(in), "cannot open reference_dense.csv");
  if (!v.pass) return v;
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> printed;
  std::vector<ScoreCard> cards;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    const int pq = static_cast<int>(std::lround(std::stod(cells[3]) * 10));
    const int sc = static_cast<int>(std::lround(std::stod(cells[4]) * 10));
    const int gta = static_cast<int>(std::lround(std::stod(cells[5]) * 10));
    for (int k = 0; k < 10; ++k) {
      ScoreCard c;
      c.model_id = cells[0];
      c.sample_id = fmt::format("s{}", k);
      c.granularity = InstructionGranularity::dense;
      c.id_raw = std::stod(cells[1]);
      c.bg_rmse = std::stod(cells[2]);
      c.pq_raw = pq / 10 + (k < pq % 10);
      c.sc_raw = sc / 10 + (k < sc % 10);
      c.gta_raw = gta / 10 + (k < gta % 10);
      c.reg_ratio = std::stod(cells[6]);
      c.fed = std::stod(cells[7]);
      cards.push_back(c);
    }
    printed.push_back(cells);
  }
  std::map<std::string, std::size_t> reference_position;
  for (std::size_t i = 0; i < printed.size(); ++i) reference_position[printed[i][0]] = i;
  std::map<std::string, double> score;
  for (const auto& c : cards) score[c.model_id] = c.fed;

  std::reverse(cards.begin(), cards.end());
  const auto rows = harness::aggregate(cards);
  v.require(rows.size() == 18, fmt::format("{} rows instead of 18", rows.size()));
  if (!v.pass) return v;
  std::size_t exact_ties = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1].model_id;
    const auto& b = rows[i].model_id;
    if (score[a] == score[b]) {
      ++exact_ties;
      continue;
    }
    v.require(reference_position[a] < reference_position[b], fmt::format("{} is ranked above {}", a, b));
  }
  const std::string csv = harness::render_leaderboard(rows, harness::TableFormat::csv);
  std::stringstream ss(csv);
  std::getline(ss, line);
  std::size_t reproduced = 0;
  while (std::getline(ss, line)) {
    const auto cells = split_csv(line);
    const auto& expected_row = printed[reference_position.at(cells[1])];
    bool same = true;
    for (std::size_t k = 1; k <= 7; ++k) same = same && cells[k + 1] == expected_row[k];
    v.require(same, fmt::format("rendered row for {} differs from the printed values: {}", cells[1], line));
    reproduced += same;
  }
  v.require(rows.front().model_id == "Qwen-image-edit-plus" && harness::format_unit(rows.front().mean_fed, 3) == ".469",
            "first row is not Qwen-image-edit-plus at .469");
  v.require(rows.back().model_id == "InstructPix2Pix" && harness::format_unit(rows.back().mean_fed, 3) == ".001",
            "last row is not InstructPix2Pix at .001");
  if (v.pass) {
    v.detail = fmt::format("18 rows, Qwen-image-edit-plus .469 first, InstructPix2Pix .001 last, {} exact tie(s), "
                           "{}/18 rows match the reference",
                           exact_ties, reproduced);
  }
  return v;
}

// --- cache ---------------------------------------------------------------------------------

std::size_t total_calls(const fed::testing::MockBackends& m, const backends::CallCounter& editor) {
  return m.embedder->calls() + m.localizer->calls() + m.perceptual->calls() + m.judge->calls() + m.classifier_calls() +
         editor.calls();
}

Verdict cache_warm_rerun() {
  Verdict v;
  TempDir dir;
  const auto sources = fed::testing::write_sources(dir / "sources", 3, 5);
  const auto bench = fed::testing::write_benchmark(dir / "bench", 6, 8);
  backends::CallCache cache(dir / "cache");
  std::array<std::size_t, 2> calls{};
  const std::vector<std::string> outputs{"build/pending_verification.jsonl", "build/candidates.jsonl", "build/audit.jsonl",
                                         "eval/results.patch.dense.jsonl", "eval/scores.jsonl"};
  for (int pass = 0; pass < 2; ++pass) {
    auto editor = std::make_shared<backends::PatchEditor>(0.6);
    auto mocks = fed::testing::make_hash_vote_mocks(7, 3, editor);
    const auto suite = mocks.suite(&cache);
    const fs::path out = dir / fmt::format("pass{}", pass);
    pipeline::run_pipeline(sources, dir / "sources", {}, suite, out / "build");
    const auto results = harness::run_model(*editor, "patch", bench, dir / "bench", InstructionGranularity::dense,
                                            out / "eval", suite.calls);
    const auto cards = metrics::score_batch(bench, results, dir / "bench", out / "eval", suite, {});
    save_records(cards, out / "eval/scores.jsonl");
    calls[static_cast<std::size_t>(pass)] = total_calls(mocks, *editor);
  }
  v.require(calls[0] > 0, "the cold run made no backend calls");
  v.require(calls[1] == 0, fmt::format("the warm run made {} backend calls", calls[1]));
  for (const auto& f : outputs) {
    v.require(read_file_bytes((dir / "pass0" / f).string()) == read_file_bytes((dir / "pass1" / f).string()),
              f + " differs between the cold and warm runs");
  }
  if (v.pass) {
    v.detail = fmt::format("cold run {} calls, warm run 0 calls, {} outputs byte-identical", calls[0], outputs.size());
  }
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"reg_penalty_sweep", reg_penalty_sweep},
      {"lazy_editing_penalty", lazy_editing_penalty},
      {"fed_score_composition", fed_composition},
      {"bg_oracle", bg_oracle},
      {"voting_oracle", voting_oracle},
      {"fidelity_rank_oracle", fidelity_rank_oracle},
      {"pipeline_end_to_end", pipeline_end_to_end},
      {"human_study_arithmetic", human_study_arithmetic},
      {"leaderboard_reference_dense", leaderboard_reference_dense},
      {"cache_warm_rerun", cache_warm_rerun},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = fmt::format("exception: {}", e.what());
    }
    failed += !v.pass;
    std::printf("%s %-26s %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
