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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fed/datamodel.hpp"
#include "fed/image.hpp"

namespace fed::backends {

enum class BackendKind { embedder, localizer, perceptual, judge, classifier, editor };

std::string_view to_string(BackendKind kind) noexcept;
BackendKind parse_backend_kind(std::string_view text);

/// (kind, name, version) identifies one backend configuration; it is part of every cache key.
struct BackendId {
  BackendKind kind = BackendKind::judge;
  std::string name;
  std::string version;

  std::string str() const;
  friend bool operator==(const BackendId&, const BackendId&) = default;
};

/// Unit-L2 identity vector.
struct FaceEmbedding {
  std::vector<double> vector;

  /// Throws InvariantViolation unless the norm is 1 within 1e-6.
  void check() const;
  /// Returns `raw` scaled to unit norm. Throws NoFaceFound for a zero vector.
  static FaceEmbedding normalized(std::vector<double> raw);
};

/// Face bounding box plus a per-pixel face mask (1 = face). The background set is the
/// complement of the mask.
struct FaceRegion {
  int image_width = 0;
  int image_height = 0;
  BBox bbox;
  std::vector<std::uint8_t> mask;

  static FaceRegion from_bbox(int width, int height, const BBox& box);

  bool is_face(int x, int y) const { return mask[static_cast<std::size_t>(y) * image_width + x] != 0; }
  std::size_t face_pixels() const;
  std::size_t background_pixels() const { return mask.size() - face_pixels(); }
  /// bbox inside the image, mask sized to the image, >= 1 face and >= 1 background pixel.
  /// Throws InvariantViolation.
  void check() const;
};

struct JudgeVerdict {
  int score = 0;
  std::string rationale;
  std::string raw_response;
};

using ExpressionLabel = std::variant<EmotionLabel, CoarseLabel>;

inline LabelGranularity granularity_of(const ExpressionLabel& label) {
  return std::holds_alternative<EmotionLabel>(label) ? LabelGranularity::fine : LabelGranularity::coarse;
}
std::string to_string(const ExpressionLabel& label);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendId id() const = 0;
  /// False for remote models whose answers may vary between calls.
  virtual bool deterministic() const { return true; }
};

class FaceEmbedder : public Backend {
 public:
  /// Throws NoFaceFound / BackendUnavailable.
  virtual FaceEmbedding embed_face(const Image& image) = 0;
};

class FaceLocalizer : public Backend {
 public:
  /// Throws NoFaceFound.
  virtual FaceRegion locate_face(const Image& image) = 0;
};

class PerceptualMetric : public Backend {
 public:
  /// Symmetric, zero on identical inputs. Throws ShapeMismatch.
  virtual double perceptual_distance(const Image& a, const Image& b) = 0;
};

/// A vision-language model answering a text prompt about an ordered list of images.
class VisionJudge : public Backend {
 public:
  /// Raw text reply. Throws BackendUnavailable on transient failure.
  virtual std::string complete(std::string_view prompt, std::span<const Image* const> images) = 0;
};

class ExpressionClassifier : public Backend {
 public:
  /// Raw text reply naming one label of the requested granularity.
  virtual std::string classify(const Image& image, LabelGranularity granularity) = 0;
  /// Fine-only classifiers are asked for fine labels and mapped to polarities by the caller.
  virtual bool supports_coarse() const { return true; }
};

class ImageEditor : public Backend {
 public:
  /// Output has the input's dimensions. `variant` selects among alternative samples for
  /// the same instruction. Throws EditorFailure.
  virtual Image edit_image(const Image& image, std::string_view instruction, std::uint32_t variant) = 0;
};

}  // namespace fed::backends
