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

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "fed/image.hpp"

namespace fed {

enum class EmotionLabel { angry, disgust, fear, happy, neutral, sad, surprise };
enum class CoarseLabel { positive, neutral, negative };

inline constexpr std::array<EmotionLabel, 7> kAllEmotions = {
    EmotionLabel::angry,   EmotionLabel::disgust, EmotionLabel::fear,    EmotionLabel::happy,
    EmotionLabel::neutral, EmotionLabel::sad,     EmotionLabel::surprise};
inline constexpr std::array<CoarseLabel, 3> kAllPolarities = {
    CoarseLabel::positive, CoarseLabel::neutral, CoarseLabel::negative};

std::string_view to_string(EmotionLabel label) noexcept;
std::string_view to_string(CoarseLabel label) noexcept;
/// Case-insensitive. Throws UnknownLabel.
EmotionLabel parse_emotion(std::string_view text);
CoarseLabel parse_coarse(std::string_view text);

/// happy -> positive, neutral -> neutral, the remaining five -> negative.
constexpr CoarseLabel coarse_map(EmotionLabel fine) noexcept {
  switch (fine) {
    case EmotionLabel::happy: return CoarseLabel::positive;
    case EmotionLabel::neutral: return CoarseLabel::neutral;
    default: return CoarseLabel::negative;
  }
}

/// The simple editing instruction for a (source, target) emotion pair. Throws SameEmotion.
std::string render_instruction(EmotionLabel src, EmotionLabel trg);

enum class InstructionGranularity { simple, dense };
enum class LabelGranularity { fine, coarse };

std::string_view to_string(InstructionGranularity g) noexcept;
std::string_view to_string(LabelGranularity g) noexcept;
InstructionGranularity parse_instruction_granularity(std::string_view text);
LabelGranularity parse_label_granularity(std::string_view text);

/// A file on disk referenced by a manifest. `path` is relative to the manifest's directory.
struct ImageRef {
  std::string path;
  std::string content_hash;  // SHA-256 of the file bytes
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

/// Writes `image` under `root / relative_path` and returns a reference to it.
ImageRef store_image(const Image& image, const std::filesystem::path& root,
                     const std::string& relative_path);
/// Describes an existing file without rewriting it.
ImageRef describe_image(const std::filesystem::path& root, const std::string& relative_path);
/// Loads the referenced file. With `verify`, the byte hash and dimensions must match the ref.
Image load_image(const ImageRef& ref, const std::filesystem::path& root, bool verify = true);
/// Expresses `ref` (relative to `from_root`) relative to `to_root`.
ImageRef rebase(ImageRef ref, const std::filesystem::path& from_root,
                const std::filesystem::path& to_root);

struct BenchmarkSample {
  std::string sample_id;
  ImageRef source;
  EmotionLabel src_emotion = EmotionLabel::neutral;
  EmotionLabel trg_emotion = EmotionLabel::happy;
  std::string simple_instruction;
  std::optional<std::string> dense_instruction;
  ImageRef ground_truth;

  /// The instruction text used under granularity `g`; nullopt when a dense one is absent.
  std::optional<std::string> instruction_for(InstructionGranularity g) const {
    return g == InstructionGranularity::simple ? std::optional(simple_instruction) : dense_instruction;
  }
  friend bool operator==(const BenchmarkSample&, const BenchmarkSample&) = default;
};

/// One model output for one benchmark sample. A failed run carries `error` and no image.
struct EditResult {
  std::string sample_id;
  std::string model_id;
  InstructionGranularity granularity = InstructionGranularity::simple;
  std::optional<ImageRef> edited;
  std::optional<std::string> error;

  bool ok() const { return edited.has_value() && !error.has_value(); }
  friend bool operator==(const EditResult&, const EditResult&) = default;
};

/// All raw sub-metrics and normalized scores for one (sample, model, granularity).
struct ScoreCard {
  std::string sample_id;
  std::string model_id;
  InstructionGranularity granularity = InstructionGranularity::simple;
  std::optional<std::string> error;

  double id_raw = 0;
  double bg_rmse = 0;
  int pq_raw = 0;
  int sc_raw = 0;
  int gta_raw = 0;
  double reg_ratio = 0;
  double id01 = 0;
  double bg01 = 0;
  double pq01 = 0;
  double sc01 = 0;
  double gta01 = 0;
  double s_fid = 0;
  double s_align = 0;
  double s_reg = 0;
  double fed = 0;

  bool ok() const { return !error.has_value(); }
  friend bool operator==(const ScoreCard&, const ScoreCard&) = default;
};

struct SourceRecord {
  std::string source_id;
  ImageRef image;
  EmotionLabel labeled_emotion = EmotionLabel::neutral;
  std::string provenance;

  friend bool operator==(const SourceRecord&, const SourceRecord&) = default;
};

// Line-record codecs. `from_record_line` throws MalformedRecord, `validate` InvariantViolation.
std::string to_record_line(const BenchmarkSample& r);
std::string to_record_line(const EditResult& r);
std::string to_record_line(const ScoreCard& r);
std::string to_record_line(const SourceRecord& r);
void from_record_line(std::string_view line, BenchmarkSample& r);
void from_record_line(std::string_view line, EditResult& r);
void from_record_line(std::string_view line, ScoreCard& r);
void from_record_line(std::string_view line, SourceRecord& r);
void validate(const BenchmarkSample& r);
void validate(const EditResult& r);
void validate(const ScoreCard& r);
void validate(const SourceRecord& r);

}  // namespace fed
