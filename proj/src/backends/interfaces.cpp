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

#include "fed/backends/interfaces.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fed/error.hpp"

namespace fed::backends {

std::string_view to_string(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::embedder: return "embedder";
    case BackendKind::localizer: return "localizer";
    case BackendKind::perceptual: return "perceptual";
    case BackendKind::judge: return "judge";
    case BackendKind::classifier: return "classifier";
    case BackendKind::editor: return "editor";
  }
  return "?";
}

BackendKind parse_backend_kind(std::string_view text) {
  for (auto kind : {BackendKind::embedder, BackendKind::localizer, BackendKind::perceptual,
                    BackendKind::judge, BackendKind::classifier, BackendKind::editor}) {
    if (to_string(kind) == text) return kind;
  }
  throw Error(ErrorCode::UnknownLabel, fmt::format("'{}' is not a backend kind", text));
}

std::string BackendId::str() const {
  return fmt::format("{}:{}@{}", to_string(kind), name, version);
}

void FaceEmbedding::check() const {
  double sq = 0;
  for (double v : vector) sq += v * v;
  if (vector.empty() || std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvariantViolation, "face embedding is not unit-norm");
  }
}

FaceEmbedding FaceEmbedding::normalized(std::vector<double> raw) {
  double sq = 0;
  for (double v : raw) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > 0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::NoFaceFound, "embedding has zero norm");
  }
  for (double& v : raw) v /= norm;
  return FaceEmbedding{std::move(raw)};
}

FaceRegion FaceRegion::from_bbox(int width, int height, const BBox& box) {
  FaceRegion region;
  region.image_width = width;
  region.image_height = height;
  region.bbox = box;
  region.mask.assign(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0);
  for (int y = std::max(box.y, 0); y < std::min(box.y + box.h, height); ++y)
    for (int x = std::max(box.x, 0); x < std::min(box.x + box.w, width); ++x)
      region.mask[static_cast<std::size_t>(y) * width + x] = 1;
  return region;
}

std::size_t FaceRegion::face_pixels() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto v) { return v != 0; }));
}

void FaceRegion::check() const {
  if (image_width < 1 || image_height < 1) {
    throw Error(ErrorCode::InvariantViolation, "face region refers to an empty image");
  }
  if (mask.size() != static_cast<std::size_t>(image_width) * image_height) {
    throw Error(ErrorCode::InvariantViolation, "face mask size differs from the image size");
  }
  if (bbox.w < 1 || bbox.h < 1 || bbox.x < 0 || bbox.y < 0 || bbox.x + bbox.w > image_width ||
      bbox.y + bbox.h > image_height) {
    throw Error(ErrorCode::InvariantViolation, "face bbox lies outside the image");
  }
  const auto face = face_pixels();
  if (face == 0) throw Error(ErrorCode::InvariantViolation, "face mask has no face pixel");
  if (face == mask.size()) {
    throw Error(ErrorCode::InvariantViolation, "face mask covers the whole image (no background)");
  }
}

std::string to_string(const ExpressionLabel& label) {
  return std::visit([](auto l) { return std::string(fed::to_string(l)); }, label);
}

}  // namespace fed::backends
