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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fed/backends/mocks.hpp"
#include "fed/manifest.hpp"
#include "fed/metrics.hpp"
#include "fixtures.hpp"

namespace fed::metrics {
namespace {

using namespace fed::backends;
using fed::testing::code_of;
using fed::testing::TempDir;

// Scalar reference: walks every pixel of every channel in the mask complement.
double reference_bg_rmse(const Image& a, const Image& b, const std::vector<std::uint8_t>& mask) {
  double sum = 0;
  long n = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      if (mask[static_cast<std::size_t>(y * a.width + x)]) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = double(a.at(x, y, c)) - double(b.at(x, y, c));
        sum += d * d;
        ++n;
      }
    }
  return std::sqrt(sum / double(n));
}

TEST(Bg, MatchesScalarReferenceOnRandomMasks) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 3 + int(fed::testing::below(rng, 14)), h = 3 + int(fed::testing::below(rng, 14));
    const Image a = fed::testing::random_image(rng, w, h);
    const Image b = fed::testing::random_image(rng, w, h);
    FaceRegion region = FaceRegion::from_bbox(w, h, {1, 1, 1, 1});
    for (auto& m : region.mask) m = fed::testing::below(rng, 3) == 0;
    region.mask[0] = 0;
    EXPECT_NEAR(compute_bg_rmse(a, b, region), reference_bg_rmse(a, b, region.mask), 1e-9);
  }
}

TEST(Bg, IdentitySymmetryAndErrors) {
  std::mt19937_64 rng(2);
  const Image a = fed::testing::random_image(rng, 8, 8);
  const Image b = fed::testing::random_image(rng, 8, 8);
  const FaceRegion region = FaceRegion::from_bbox(8, 8, {2, 2, 4, 4});
  EXPECT_EQ(compute_bg_rmse(a, a, region), 0.0);
  EXPECT_EQ(compute_bg_rmse(a, b, region), compute_bg_rmse(b, a, region));
  Image c = a;
  c.at(3, 3, 0) ^= 0xff;
  EXPECT_EQ(compute_bg_rmse(a, c, region), 0.0);
  EXPECT_EQ(code_of([&] { compute_bg_rmse(a, Image(7, 8), region); }), ErrorCode::ShapeMismatch);
  FaceRegion full = region;
  std::fill(full.mask.begin(), full.mask.end(), 1);
  EXPECT_EQ(code_of([&] { compute_bg_rmse(a, b, full); }), ErrorCode::EmptyBackground);
}

TEST(Bg, NormalizationIsMonotone) {
  const MetricConfig cfg;
  EXPECT_EQ(normalize_bg(0, cfg), 1.0);
  EXPECT_NEAR(normalize_bg(25, cfg), std::exp(-1.0), 1e-15);
  double prev = 2;
  for (double r = 0; r < 300; r += 0.5) {
    const double v = normalize_bg(r, cfg);
    EXPECT_LT(v, prev);
    EXPECT_GT(v, 0);
    prev = v;
  }
}

TEST(Id, CosineScaleInvarianceAndClamp) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(16), b(16);
    for (auto& v : a) v = fed::testing::uniform01(rng) - 0.5;
    for (auto& v : b) v = fed::testing::uniform01(rng) - 0.5;
    const double k = 0.01 + 100 * fed::testing::uniform01(rng);
    std::vector<double> ak = a;
    for (auto& v : ak) v *= k;
    EXPECT_NEAR(cosine_similarity(a, b), cosine_similarity(ak, b), 1e-12);
    EXPECT_GE(normalize_id(cosine_similarity(a, b)), 0.0);
  }
  const std::vector<double> x{1, 0}, y{-1, 0};
  EXPECT_EQ(cosine_similarity(x, y), -1.0);
  EXPECT_EQ(normalize_id(-1.0), 0.0);
  EXPECT_EQ(code_of([&] { cosine_similarity(x, std::vector<double>{1}); }), ErrorCode::ShapeMismatch);
}

TEST(Id, ScriptedEmbedderScaleDoesNotMatter) {
  ScriptedEmbedder e1, e2;
  const Image s(8, 8, 1), t(8, 8, 2);
  e1.set(s, {1, 2, 3});
  e1.set(t, {3, 2, 1});
  e2.set(s, {10, 20, 30});
  e2.set(t, {0.3, 0.2, 0.1});
  EXPECT_NEAR(compute_id(s, t, e1, {}), compute_id(s, t, e2, {}), 1e-12);
  EXPECT_NEAR(compute_id(s, t, e1, {}), 10.0 / 14.0, 1e-12);
}

TEST(Reg, PenaltyShape) {
  const MetricConfig cfg;
  EXPECT_EQ(reg_penalty(1.0, cfg), 1.0);
  EXPECT_NEAR(reg_penalty(0.0, cfg), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(reg_penalty(0.5, cfg), reg_penalty(1.5, cfg), 1e-15);
  MetricConfig wide;
  wide.sigma = 1.0;
  EXPECT_GT(reg_penalty(2.0, wide), reg_penalty(2.0, cfg));
  MetricConfig bad;
  bad.sigma = 0;
  EXPECT_EQ(code_of([&] { bad.check(); }), ErrorCode::ConfigError);
}

TEST(Reg, RatioUsesSourceBoxOnAllImages) {
  const Image src = fed::testing::synthetic_face(1, 32, 32);
  const Image gt = fed::testing::alter_face(src, 40);
  const Image half = fed::testing::alter_face(src, 20);
  const FaceRegion region = FaceRegion::from_bbox(32, 32, CenteredBoxLocalizer::box_for(32, 32));
  MeanAbsDiffPerceptual p;
  EXPECT_NEAR(compute_reg_ratio(src, gt, gt, region, p, {}), 1.0, 1e-12);
  EXPECT_EQ(compute_reg_ratio(src, src, gt, region, p, {}), 0.0);
  const double r = compute_reg_ratio(src, half, gt, region, p, {});
  EXPECT_GT(r, 0.3);
  EXPECT_LT(r, 0.7);

  Image outside = src;
  outside.at(0, 0, 0) ^= 0x80;
  EXPECT_EQ(compute_reg_ratio(src, outside, gt, region, p, {}), 0.0);
  EXPECT_EQ(code_of([&] { compute_reg_ratio(src, half, outside, region, p, {}); }),
            ErrorCode::DegenerateGroundTruth);
}

TEST(Aggregation, Formulas) {
  EXPECT_DOUBLE_EQ(fidelity_score(0.3, 0.6, 0.9), 0.6);
  EXPECT_DOUBLE_EQ(alignment_score(0.2, 0.4), 0.3);
  EXPECT_DOUBLE_EQ(fed_score(0.5, 0.5, 0.5), 0.125);
  EXPECT_EQ(fed_score(0.9, 0.0, 1.0), 0.0);
}

class ScoreFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    samples = fed::testing::write_benchmark(dir.path(), 4, 21);
    mocks = fed::testing::make_mocks(8, {}, std::make_shared<PatchEditor>(0.6));
    for (const auto& s : samples) {
      const Image src = load_image(s.source, dir.path());
      EditResult r{s.sample_id, "patch", InstructionGranularity::simple, std::nullopt, std::nullopt};
      r.edited = store_image(mocks.editor->edit_image(src, s.simple_instruction, 0), dir.path(),
                             "out/" + s.sample_id + ".png");
      results.push_back(r);
    }
  }

  TempDir dir;
  std::vector<BenchmarkSample> samples;
  std::vector<EditResult> results;
  fed::testing::MockBackends mocks;
};

TEST_F(ScoreFixture, CardIsConsistent) {
  const ScoreCard c = score_sample(samples[0], results[0], dir.path(), dir.path(), mocks.suite(), {});
  EXPECT_NO_THROW(validate(c));
  EXPECT_EQ(c.pq_raw, 8);
  EXPECT_EQ(c.sc_raw, 8);
  EXPECT_EQ(c.gta_raw, 8);
  EXPECT_EQ(c.bg_rmse, 0.0);
  EXPECT_EQ(c.bg01, 1.0);
  EXPECT_GT(c.reg_ratio, 0.0);
  EXPECT_DOUBLE_EQ(c.fed, c.s_fid * c.s_align * c.s_reg);
}

TEST_F(ScoreFixture, GtaSendsTargetThenGroundTruth) {
  (void)score_sample(samples[1], results[1], dir.path(), dir.path(), mocks.suite(), {});
  const Image edited = load_image(*results[1].edited, dir.path());
  const Image gt = load_image(samples[1].ground_truth, dir.path());
  bool seen = false;
  for (const auto& call : mocks.judge->log()) {
    if (call.image_hashes.size() != 2) continue;
    seen = true;
    EXPECT_EQ(call.image_hashes[0], image_hash(edited));
    EXPECT_EQ(call.image_hashes[1], image_hash(gt));
  }
  EXPECT_TRUE(seen);
}

TEST_F(ScoreFixture, DenseUsesDenseInstruction) {
  EditResult dense = results[0];
  dense.granularity = InstructionGranularity::dense;
  (void)score_sample(samples[0], dense, dir.path(), dir.path(), mocks.suite(), {});
  bool seen = false;
  for (const auto& call : mocks.judge->log()) seen = seen || call.prompt.find(*samples[0].dense_instruction) != std::string::npos;
  EXPECT_TRUE(seen);
  BenchmarkSample no_dense = samples[0];
  no_dense.dense_instruction.reset();
  EXPECT_EQ(code_of([&] { score_sample(no_dense, dense, dir.path(), dir.path(), mocks.suite(), {}); }),
            ErrorCode::PreconditionViolation);
}

TEST_F(ScoreFixture, BatchTurnsFailuresIntoErrorCards) {
  results[2].edited.reset();
  results[2].error = "EditorFailure: refused";
  results[3].edited->content_hash = std::string(64, '0');
  EditResult other = results[0];
  other.model_id = "another";
  results.push_back(other);
  const auto cards = score_batch(samples, results, dir.path(), dir.path(), mocks.suite(), {}, 3);
  ASSERT_EQ(cards.size(), 5u);
  EXPECT_EQ(cards[0].model_id, "another");
  EXPECT_EQ(cards[1].sample_id, "s000");
  EXPECT_TRUE(cards[1].ok());
  EXPECT_TRUE(cards[2].ok());
  ASSERT_FALSE(cards[3].ok());
  EXPECT_EQ(cards[3].error->rfind("EditorFailure: ", 0), 0u) << *cards[3].error;
  ASSERT_FALSE(cards[4].ok());
  EXPECT_EQ(cards[4].error->rfind("InvariantViolation: ", 0), 0u) << *cards[4].error;
}

TEST_F(ScoreFixture, DegenerateGroundTruthIsReported) {
  BenchmarkSample s = samples[0];
  s.ground_truth = s.source;
  EXPECT_EQ(code_of([&] { score_sample(s, results[0], dir.path(), dir.path(), mocks.suite(), {}); }),
            ErrorCode::DegenerateGroundTruth);
}

}  // namespace
}  // namespace fed::metrics
