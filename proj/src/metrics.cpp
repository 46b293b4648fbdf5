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

#include "fed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>

#include <fmt/format.h>

#include "fed/error.hpp"
#include "fed/parallel.hpp"
#include "fed/prompts.hpp"

namespace fed::metrics {

using namespace fed::backends;

void MetricConfig::check() const {
  if (!(sigma > 0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::ConfigError, fmt::format("metrics.sigma must be > 0 (got {})", sigma));
  }
  if (!(bg_tau > 0) || !std::isfinite(bg_tau)) {
    throw Error(ErrorCode::ConfigError, fmt::format("metrics.bg_tau must be > 0 (got {})", bg_tau));
  }
  if (judge_scale_max != 10) throw Error(ErrorCode::ConfigError, "judge scale is fixed at 0-10");
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "embeddings differ in length");
  }
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0) || !(nb > 0)) throw Error(ErrorCode::NoFaceFound, "zero embedding");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double compute_id(const Image& src, const Image& trg, FaceEmbedder& embedder, const CallContext& ctx) {
  const FaceEmbedding a = embed_face(embedder, src, ctx);
  const FaceEmbedding b = embed_face(embedder, trg, ctx);
  return cosine_similarity(a.vector, b.vector);
}

double compute_bg_rmse(const Image& src, const Image& trg, const FaceRegion& region) {
  if (!src.same_shape(trg) || region.image_width != src.width || region.image_height != src.height) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("background RMSE over {}x{} vs {}x{} with a {}x{} mask", src.width, src.height,
                            trg.width, trg.height, region.image_width, region.image_height));
  }
  double sum = 0;
  std::size_t count = 0;
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      if (region.is_face(x, y)) continue;
      const std::size_t base = src.offset(x, y);
      for (int c = 0; c < Image::kChannels; ++c) {
        const double d = double(src.pixels[base + c]) - double(trg.pixels[base + c]);
        sum += d * d;
      }
      count += Image::kChannels;
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptyBackground, "face mask covers the whole image");
  return std::sqrt(sum / static_cast<double>(count));
}

double normalize_bg(double rmse, const MetricConfig& config) { return std::exp(-rmse / config.bg_tau); }

double normalize_id(double cosine) { return std::max(cosine, 0.0); }

std::string pq_prompt() { return prompts::render(prompts::kPerceptualQuality); }

std::string sc_prompt(std::string_view instruction) {
  if (instruction.empty()) {
    throw Error(ErrorCode::PreconditionViolation, "semantic consistency needs a non-empty instruction");
  }
  return prompts::render(prompts::kSemanticConsistency, {{"instruction", std::string(instruction)}});
}

std::string gta_prompt() { return prompts::render(prompts::kGroundTruthAlignment); }

int compute_pq(const Image& trg, VisionJudge& judge, const CallContext& ctx) {
  const Image* images[] = {&trg};
  return backends::judge(judge, pq_prompt(), images, ctx).score;
}

int compute_sc(const Image& trg, std::string_view instruction, VisionJudge& judge, const CallContext& ctx) {
  const std::string prompt = sc_prompt(instruction);
  const Image* images[] = {&trg};
  return backends::judge(judge, prompt, images, ctx).score;
}

int compute_gta(const Image& trg, const Image& gt, VisionJudge& judge, const CallContext& ctx) {
  const Image* images[] = {&trg, &gt};
  return backends::judge(judge, gta_prompt(), images, ctx).score;
}

double compute_reg_ratio(const Image& src, const Image& trg, const Image& gt, const FaceRegion& region,
                         PerceptualMetric& perceptual, const CallContext& ctx) {
  if (!src.same_shape(trg) || !src.same_shape(gt)) {
    throw Error(ErrorCode::ShapeMismatch, "source, target and ground truth differ in size");
  }
  const Image src_face = crop(src, region.bbox);
  const Image trg_face = crop(trg, region.bbox);
  const Image gt_face = crop(gt, region.bbox);
  const double expected = perceptual_distance(perceptual, src_face, gt_face, ctx);
  if (!(expected >= kDegenerateGroundTruthEpsilon)) {
    throw Error(ErrorCode::DegenerateGroundTruth,
                fmt::format("ground-truth face is perceptually identical to the source (d={})", expected));
  }
  return perceptual_distance(perceptual, src_face, trg_face, ctx) / expected;
}

double reg_penalty(double ratio, const MetricConfig& config) {
  const double d = ratio - 1.0;
  return std::exp(-(d * d) / (2.0 * config.sigma * config.sigma));
}

double fidelity_score(double id01, double bg01, double pq01) { return (id01 + bg01 + pq01) / 3.0; }

double alignment_score(double sc01, double gta01) { return (sc01 + gta01) / 2.0; }

double fed_score(double s_fid, double s_align, double s_reg) { return s_fid * s_align * s_reg; }

ScoreCard score_images(const BenchmarkSample& sample, const EditResult& result, const SampleImages& images,
                       const BackendSuite& backends, const MetricConfig& config) {
  config.check();
  if (result.sample_id != sample.sample_id) {
    throw Error(ErrorCode::PreconditionViolation,
                fmt::format("result for '{}' scored against sample '{}'", result.sample_id, sample.sample_id));
  }
  const auto instruction = sample.instruction_for(result.granularity);
  if (!instruction) {
    throw Error(ErrorCode::PreconditionViolation,
                fmt::format("{}: no {} instruction", sample.sample_id, to_string(result.granularity)));
  }
  if (!images.source.same_shape(images.edited)) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("{}: edited image is {}x{}, source is {}x{}", sample.sample_id, images.edited.width,
                            images.edited.height, images.source.width, images.source.height));
  }
  const CallContext& ctx = backends.calls;
  const FaceRegion region = locate_face(backends.need_localizer(), images.source, ctx);

  ScoreCard card;
  card.sample_id = sample.sample_id;
  card.model_id = result.model_id;
  card.granularity = result.granularity;
  card.id_raw = compute_id(images.source, images.edited, backends.need_embedder(), ctx);
  card.bg_rmse = compute_bg_rmse(images.source, images.edited, region);
  card.pq_raw = compute_pq(images.edited, backends.need_judge(), ctx);
  card.sc_raw = compute_sc(images.edited, *instruction, backends.need_judge(), ctx);
  card.gta_raw = compute_gta(images.edited, images.ground_truth, backends.need_judge(), ctx);
  card.reg_ratio = compute_reg_ratio(images.source, images.edited, images.ground_truth, region,
                                     backends.need_perceptual(), ctx);

  const double scale = config.judge_scale_max;
  card.id01 = normalize_id(card.id_raw);
  card.bg01 = normalize_bg(card.bg_rmse, config);
  card.pq01 = card.pq_raw / scale;
  card.sc01 = card.sc_raw / scale;
  card.gta01 = card.gta_raw / scale;
  card.s_fid = fidelity_score(card.id01, card.bg01, card.pq01);
  card.s_align = alignment_score(card.sc01, card.gta01);
  card.s_reg = reg_penalty(card.reg_ratio, config);
  card.fed = fed_score(card.s_fid, card.s_align, card.s_reg);
  return card;
}

ScoreCard score_sample(const BenchmarkSample& sample, const EditResult& result,
                       const std::filesystem::path& benchmark_root, const std::filesystem::path& results_root,
                       const BackendSuite& backends, const MetricConfig& config) {
  if (!result.ok()) {
    throw Error(ErrorCode::EditorFailure,
                fmt::format("{}: edit failed: {}", result.sample_id, result.error.value_or("no image")));
  }
  SampleImages images;
  images.source = load_image(sample.source, benchmark_root);
  images.ground_truth = load_image(sample.ground_truth, benchmark_root);
  images.edited = load_image(*result.edited, results_root);
  return score_images(sample, result, images, backends, config);
}

std::vector<ScoreCard> score_batch(std::span<const BenchmarkSample> benchmark, std::span<const EditResult> results,
                                   const std::filesystem::path& benchmark_root,
                                   const std::filesystem::path& results_root, const BackendSuite& backends,
                                   const MetricConfig& config, int workers) {
  config.check();
  std::map<std::string, const BenchmarkSample*> by_id;
  for (const auto& s : benchmark) by_id.emplace(s.sample_id, &s);

  std::vector<std::optional<ScoreCard>> cards(results.size());
  parallel_for(results.size(), workers, [&](std::size_t i) {
    const EditResult& result = results[i];
    try {
      const auto it = by_id.find(result.sample_id);
      if (it == by_id.end()) {
        throw Error(ErrorCode::InvariantViolation, fmt::format("{}: not in the benchmark", result.sample_id));
      }
      cards[i] = score_sample(*it->second, result, benchmark_root, results_root, backends, config);
    } catch (const std::exception& e) {
      ScoreCard failed;
      failed.sample_id = result.sample_id;
      failed.model_id = result.model_id;
      failed.granularity = result.granularity;
      const auto* err = dynamic_cast<const Error*>(&e);
      failed.error = fmt::format("{}: {}", err ? to_string(err->code()) : "Exception", e.what());
      cards[i] = std::move(failed);
    }
  });

  std::vector<ScoreCard> out;
  for (auto& c : cards)
    if (c) out.push_back(std::move(*c));
  std::stable_sort(out.begin(), out.end(), [](const ScoreCard& a, const ScoreCard& b) {
    return std::tie(a.model_id, a.sample_id) < std::tie(b.model_id, b.sample_id);
  });
  return out;
}

}  // namespace fed::metrics
