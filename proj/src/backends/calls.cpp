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

#include "fed/backends/calls.hpp"

#include <algorithm>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "fed/backends/parsing.hpp"
#include "fed/hashing.hpp"

namespace fed::backends {

namespace {

using json = nlohmann::json;

std::string through_cache(const CallContext& ctx, const Backend& backend, std::string_view op,
                          std::span<const std::string> hashes, std::optional<std::string_view> prompt,
                          const std::function<std::string()>& compute) {
  if (!ctx.cache) return compute();
  return ctx.cache->get_or_compute(backend.id(), op, hashes, prompt, compute);
}

std::string encode_region(const FaceRegion& r) {
  std::string mask(r.mask.begin(), r.mask.end());
  return json{{"width", r.image_width},
              {"height", r.image_height},
              {"bbox", {r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h}},
              {"mask", base64_encode(mask)}}
      .dump();
}

FaceRegion decode_region(std::string_view text) {
  try {
    const json j = json::parse(text);
    FaceRegion r;
    r.image_width = j.at("width").get<int>();
    r.image_height = j.at("height").get<int>();
    const auto& b = j.at("bbox");
    r.bbox = BBox{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
    const std::string mask = base64_decode(j.at("mask").get<std::string>());
    r.mask.assign(mask.begin(), mask.end());
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CacheCorruption, fmt::format("bad face region payload: {}", e.what()));
  }
}

void check_judge_inputs(std::string_view prompt, std::span<const Image* const> images) {
  if (prompt.empty()) throw Error(ErrorCode::PreconditionViolation, "judge prompt is empty");
  if (images.empty() || images.size() > 3) {
    throw Error(ErrorCode::PreconditionViolation,
                fmt::format("judge takes 1-3 images, got {}", images.size()));
  }
}

std::vector<std::string> hashes_of(std::span<const Image* const> images) {
  std::vector<std::string> out;
  out.reserve(images.size());
  for (const Image* image : images) out.push_back(image_hash(*image));
  return out;
}

}  // namespace

FaceEmbedding embed_face(FaceEmbedder& embedder, const Image& image, const CallContext& ctx) {
  const std::string hashes[] = {image_hash(image)};
  const std::string payload = through_cache(ctx, embedder, "embed_face", hashes, std::nullopt, [&] {
    const FaceEmbedding e = with_retry(ctx.retry, [&] { return embedder.embed_face(image); });
    e.check();
    return json(e.vector).dump();
  });
  FaceEmbedding out;
  try {
    out.vector = json::parse(payload).get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CacheCorruption, fmt::format("bad embedding payload: {}", e.what()));
  }
  return out;
}

FaceRegion locate_face(FaceLocalizer& localizer, const Image& image, const CallContext& ctx) {
  const std::string hashes[] = {image_hash(image)};
  const std::string payload = through_cache(ctx, localizer, "locate_face", hashes, std::nullopt, [&] {
    FaceRegion r = with_retry(ctx.retry, [&] { return localizer.locate_face(image); });
    r.check();
    return encode_region(r);
  });
  FaceRegion region = decode_region(payload);
  region.check();
  return region;
}

double perceptual_distance(PerceptualMetric& metric, const Image& a, const Image& b,
                           const CallContext& ctx) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("perceptual distance of {}x{} vs {}x{}", a.width, a.height, b.width, b.height));
  }
  // Key on the sorted pair of hashes.
  std::string hashes[] = {image_hash(a), image_hash(b)};
  std::sort(std::begin(hashes), std::end(hashes));
  const std::string payload = through_cache(ctx, metric, "perceptual_distance", hashes, std::nullopt, [&] {
    const double d = with_retry(ctx.retry, [&] { return metric.perceptual_distance(a, b); });
    return fmt::format("{:.17g}", d);
  });
  return std::stod(payload);
}

JudgeVerdict judge(VisionJudge& judge, std::string_view prompt, std::span<const Image* const> images,
                   const CallContext& ctx) {
  check_judge_inputs(prompt, images);
  const auto hashes = hashes_of(images);
  const std::string text = through_cache(ctx, judge, "judge", hashes, prompt, [&] {
    std::initializer_list<ErrorCode> retryable = {ErrorCode::BackendUnavailable};
    std::initializer_list<ErrorCode> retryable_with_parse = {ErrorCode::BackendUnavailable,
                                                             ErrorCode::JudgeParseFailure};
    return with_retry(
        ctx.retry,
        [&] {
          std::string reply = judge.complete(prompt, images);
          (void)parse_judge_response(reply);
          return reply;
        },
        judge.deterministic() ? retryable : retryable_with_parse);
  });
  return parse_judge_verdict(text);
}

std::string describe(VisionJudge& judge, std::string_view prompt,
                     std::span<const Image* const> images, const CallContext& ctx) {
  check_judge_inputs(prompt, images);
  const auto hashes = hashes_of(images);
  return through_cache(ctx, judge, "describe", hashes, prompt, [&] {
    return with_retry(ctx.retry, [&] {
      std::string reply = judge.complete(prompt, images);
      const auto first = reply.find_first_not_of(" \t\r\n");
      if (first == std::string::npos) {
        throw Error(ErrorCode::JudgeParseFailure, "judge returned an empty description");
      }
      const auto last = reply.find_last_not_of(" \t\r\n");
      return reply.substr(first, last - first + 1);
    });
  });
}

ExpressionLabel classify_expression(ExpressionClassifier& classifier, const Image& image,
                                    LabelGranularity granularity, const CallContext& ctx) {
  const LabelGranularity asked =
      granularity == LabelGranularity::coarse && !classifier.supports_coarse() ? LabelGranularity::fine
                                                                               : granularity;
  const std::string hashes[] = {image_hash(image)};
  const std::string op = fmt::format("classify:{}", to_string(asked));
  const std::string reply = through_cache(ctx, classifier, op, hashes, std::nullopt, [&] {
    return with_retry(ctx.retry, [&] {
      std::string text = classifier.classify(image, asked);
      (void)parse_expression_label(text, asked);
      return text;
    });
  });
  const ExpressionLabel label = parse_expression_label(reply, asked);
  if (granularity == LabelGranularity::coarse && std::holds_alternative<EmotionLabel>(label)) {
    return coarse_map(std::get<EmotionLabel>(label));
  }
  return label;
}

Image edit_image(ImageEditor& editor, const Image& image, std::string_view instruction,
                 std::uint32_t variant, const CallContext& ctx) {
  if (instruction.empty()) throw Error(ErrorCode::EditorFailure, "editing instruction is empty");
  const std::string hashes[] = {image_hash(image), fmt::format("variant:{}", variant)};
  const std::string payload = through_cache(ctx, editor, "edit_image", hashes, instruction, [&] {
    const Image out = with_retry(ctx.retry, [&] { return editor.edit_image(image, instruction, variant); });
    if (!out.same_shape(image)) {
      throw Error(ErrorCode::EditorFailure,
                  fmt::format("editor returned {}x{} for a {}x{} input", out.width, out.height,
                              image.width, image.height));
    }
    return encode_ppm(out);
  });
  return decode_image(payload);
}

}  // namespace fed::backends
