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

#include "fed/backends/suite.hpp"
#include "fed/datamodel.hpp"

namespace fed::metrics {

struct MetricConfig {
  double sigma = 0.5;     // width of the expression-gain penalty
  double bg_tau = 25.0;   // background RMSE scale (0-255 pixel units)
  int judge_scale_max = 10;

  /// Throws ConfigError unless sigma > 0 and bg_tau > 0.
  void check() const;
};

// --- fidelity ---------------------------------------------------------------------

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Cosine of the two identity embeddings, in [-1, 1]. NoFaceFound propagates.
double compute_id(const Image& src, const Image& trg, backends::FaceEmbedder& embedder,
                  const backends::CallContext& ctx);

/// RMSE over every channel of every background pixel (mask == 0), 0-255 scale.
/// Throws ShapeMismatch, EmptyBackground.
double compute_bg_rmse(const Image& src, const Image& trg, const backends::FaceRegion& region);

/// exp(-rmse / bg_tau): 1 at rmse 0, strictly decreasing.
double normalize_bg(double rmse, const MetricConfig& config);

/// max(cosine, 0).
double normalize_id(double cosine);

std::string pq_prompt();
std::string sc_prompt(std::string_view instruction);
std::string gta_prompt();

int compute_pq(const Image& trg, backends::VisionJudge& judge, const backends::CallContext& ctx);

// --- alignment ------------------------------------------------------------------------

/// Throws PreconditionViolation for an empty instruction.
int compute_sc(const Image& trg, std::string_view instruction, backends::VisionJudge& judge,
               const backends::CallContext& ctx);
/// Images are sent in the order (target, ground truth).
int compute_gta(const Image& trg, const Image& gt, backends::VisionJudge& judge,
                const backends::CallContext& ctx);

// --- relative expression gain -----------------------------------------------------------

inline constexpr double kDegenerateGroundTruthEpsilon = 1e-8;

/// d(src_face, trg_face) / d(src_face, gt_face), with the source face bbox applied at the
/// same coordinates to all three images. Throws DegenerateGroundTruth, ShapeMismatch.
double compute_reg_ratio(const Image& src, const Image& trg, const Image& gt,
                         const backends::FaceRegion& region, backends::PerceptualMetric& perceptual,
                         const backends::CallContext& ctx);

/// exp(-(ratio - 1)^2 / (2 sigma^2)); peaks at 1 when ratio == 1.
double reg_penalty(double ratio, const MetricConfig& config);

// --- aggregation ----------------------------------------------------------------------------

double fidelity_score(double id01, double bg01, double pq01);
double alignment_score(double sc01, double gta01);
double fed_score(double s_fid, double s_align, double s_reg);

struct SampleImages {
  Image source;
  Image ground_truth;
  Image edited;
};

/// All sub-metrics for one edited image. Throws on any backend or precondition failure.
ScoreCard score_images(const BenchmarkSample& sample, const EditResult& result,
                       const SampleImages& images, const backends::BackendSuite& backends,
                       const MetricConfig& config);

/// Loads the three images (hash-verified) and scores them. Sample paths resolve against
/// `benchmark_root`, result paths against `results_root`.
ScoreCard score_sample(const BenchmarkSample& sample, const EditResult& result,
                       const std::filesystem::path& benchmark_root,
                       const std::filesystem::path& results_root,
                       const backends::BackendSuite& backends, const MetricConfig& config);

/// Scores every result over a bounded worker pool. A failing sample yields a ScoreCard
/// carrying `error` instead of aborting the batch. Output is ordered by (model_id, sample_id).
std::vector<ScoreCard> score_batch(std::span<const BenchmarkSample> benchmark,
                                   std::span<const EditResult> results,
                                   const std::filesystem::path& benchmark_root,
                                   const std::filesystem::path& results_root,
                                   const backends::BackendSuite& backends, const MetricConfig& config,
                                   int workers = 1);

}  // namespace fed::metrics
