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

#include "fed/datamodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "fed/hashing.hpp"
#include "json_util.hpp"

namespace fed {

namespace fs = std::filesystem;
using detail::json;

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

constexpr std::string_view kBenchmarkSchema = "fed.benchmark.v1";
constexpr std::string_view kResultSchema = "fed.result.v1";
constexpr std::string_view kScoreCardSchema = "fed.scorecard.v1";
constexpr std::string_view kSourceSchema = "fed.source.v1";

[[noreturn]] void violation(const std::string& id, const std::string& reason) {
  throw Error(ErrorCode::InvariantViolation, fmt::format("{}: {}", id, reason));
}

void validate_ref(const ImageRef& ref, const std::string& owner, std::string_view role) {
  if (ref.path.empty()) violation(owner, fmt::format("{} image path is empty", role));
  if (fs::path(ref.path).is_absolute()) violation(owner, fmt::format("{} image path must be relative", role));
  if (ref.width < 1 || ref.height < 1) violation(owner, fmt::format("{} image has non-positive size", role));
  const bool hex = ref.content_hash.size() == 64 &&
                   std::all_of(ref.content_hash.begin(), ref.content_hash.end(),
                               [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) && !std::isupper(static_cast<unsigned char>(c)); });
  if (!hex) violation(owner, fmt::format("{} image content_hash is not a SHA-256 hex digest", role));
}

}  // namespace

std::string_view to_string(EmotionLabel label) noexcept {
  switch (label) {
    case EmotionLabel::angry: return "angry";
    case EmotionLabel::disgust: return "disgust";
    case EmotionLabel::fear: return "fear";
    case EmotionLabel::happy: return "happy";
    case EmotionLabel::neutral: return "neutral";
    case EmotionLabel::sad: return "sad";
    case EmotionLabel::surprise: return "surprise";
  }
  return "?";
}

std::string_view to_string(CoarseLabel label) noexcept {
  switch (label) {
    case CoarseLabel::positive: return "positive";
    case CoarseLabel::neutral: return "neutral";
    case CoarseLabel::negative: return "negative";
  }
  return "?";
}

EmotionLabel parse_emotion(std::string_view text) {
  const auto key = lower(text);
  for (auto label : kAllEmotions)
    if (to_string(label) == key) return label;
  throw Error(ErrorCode::UnknownLabel, fmt::format("'{}' is not an emotion label", text));
}

CoarseLabel parse_coarse(std::string_view text) {
  const auto key = lower(text);
  for (auto label : kAllPolarities)
    if (to_string(label) == key) return label;
  throw Error(ErrorCode::UnknownLabel, fmt::format("'{}' is not a coarse polarity", text));
}

std::string render_instruction(EmotionLabel src, EmotionLabel trg) {
  if (src == trg) {
    throw Error(ErrorCode::SameEmotion,
                fmt::format("source and target emotion are both '{}'", to_string(src)));
  }
  return fmt::format("change the expression from {} to {}", to_string(src), to_string(trg));
}

std::string_view to_string(InstructionGranularity g) noexcept {
  return g == InstructionGranularity::simple ? "simple" : "dense";
}

std::string_view to_string(LabelGranularity g) noexcept {
  return g == LabelGranularity::fine ? "fine" : "coarse";
}

InstructionGranularity parse_instruction_granularity(std::string_view text) {
  const auto key = lower(text);
  if (key == "simple") return InstructionGranularity::simple;
  if (key == "dense") return InstructionGranularity::dense;
  throw Error(ErrorCode::UnknownLabel, fmt::format("'{}' is not simple|dense", text));
}

LabelGranularity parse_label_granularity(std::string_view text) {
  const auto key = lower(text);
  if (key == "fine") return LabelGranularity::fine;
  if (key == "coarse") return LabelGranularity::coarse;
  throw Error(ErrorCode::UnknownLabel, fmt::format("'{}' is not fine|coarse", text));
}

ImageRef store_image(const Image& image, const fs::path& root, const std::string& relative_path) {
  const fs::path target = root / relative_path;
  const std::string bytes =
      target.extension() == ".png" ? encode_png(image) : encode_ppm(image);
  write_file_atomic(target.string(), bytes);
  return ImageRef{relative_path, sha256_hex(bytes), image.width, image.height};
}

ImageRef describe_image(const fs::path& root, const std::string& relative_path) {
  const std::string bytes = read_file_bytes((root / relative_path).string());
  const Image image = decode_image(bytes);
  return ImageRef{relative_path, sha256_hex(bytes), image.width, image.height};
}

Image load_image(const ImageRef& ref, const fs::path& root, bool verify) {
  const fs::path path = root / ref.path;
  const std::string bytes = read_file_bytes(path.string());
  if (verify && sha256_hex(bytes) != ref.content_hash) {
    throw Error(ErrorCode::InvariantViolation,
                fmt::format("{}: content hash does not match the manifest", ref.path));
  }
  Image image = decode_image(bytes);
  if (verify && (image.width != ref.width || image.height != ref.height)) {
    throw Error(ErrorCode::InvariantViolation,
                fmt::format("{}: dimensions {}x{} differ from manifest {}x{}", ref.path, image.width,
                            image.height, ref.width, ref.height));
  }
  return image;
}

ImageRef rebase(ImageRef ref, const fs::path& from_root, const fs::path& to_root) {
  const fs::path absolute = fs::weakly_canonical(fs::absolute(from_root / ref.path));
  ref.path = fs::relative(absolute, fs::weakly_canonical(fs::absolute(to_root))).generic_string();
  return ref;
}

// --- BenchmarkSample -------------------------------------------------------

std::string to_record_line(const BenchmarkSample& r) {
  json j{{"schema", kBenchmarkSchema},
         {"sample_id", r.sample_id},
         {"source", detail::image_ref_json(r.source)},
         {"src_emotion", to_string(r.src_emotion)},
         {"trg_emotion", to_string(r.trg_emotion)},
         {"simple_instruction", r.simple_instruction},
         {"ground_truth", detail::image_ref_json(r.ground_truth)}};
  if (r.dense_instruction) j["dense_instruction"] = *r.dense_instruction;
  return j.dump();
}

void from_record_line(std::string_view line, BenchmarkSample& r) {
  const json j = detail::parse_object(line);
  detail::check_schema(j, kBenchmarkSchema);
  r.sample_id = detail::field<std::string>(j, "sample_id");
  r.source = detail::image_ref_field(j, "source");
  r.src_emotion = detail::parse_label_field(j, "src_emotion", parse_emotion);
  r.trg_emotion = detail::parse_label_field(j, "trg_emotion", parse_emotion);
  r.simple_instruction = detail::field<std::string>(j, "simple_instruction");
  r.dense_instruction = detail::optional_field<std::string>(j, "dense_instruction");
  r.ground_truth = detail::image_ref_field(j, "ground_truth");
}

void validate(const BenchmarkSample& r) {
  if (r.sample_id.empty()) violation("<unnamed>", "sample_id is empty");
  if (r.src_emotion == r.trg_emotion) violation(r.sample_id, "src_emotion equals trg_emotion");
  if (r.simple_instruction != render_instruction(r.src_emotion, r.trg_emotion)) {
    violation(r.sample_id, "simple_instruction does not match the rendered template");
  }
  if (r.dense_instruction && r.dense_instruction->empty()) {
    violation(r.sample_id, "dense_instruction is present but empty");
  }
  validate_ref(r.source, r.sample_id, "source");
  validate_ref(r.ground_truth, r.sample_id, "ground_truth");
  if (r.source.width != r.ground_truth.width || r.source.height != r.ground_truth.height) {
    violation(r.sample_id, "ground_truth dimensions differ from source");
  }
}

// --- EditResult --------------------------------------------------------------

std::string to_record_line(const EditResult& r) {
  json j{{"schema", kResultSchema},
         {"sample_id", r.sample_id},
         {"model_id", r.model_id},
         {"granularity", to_string(r.granularity)}};
  if (r.edited) j["edited"] = detail::image_ref_json(*r.edited);
  if (r.error) j["error"] = *r.error;
  return j.dump();
}

void from_record_line(std::string_view line, EditResult& r) {
  const json j = detail::parse_object(line);
  detail::check_schema(j, kResultSchema);
  r.sample_id = detail::field<std::string>(j, "sample_id");
  r.model_id = detail::field<std::string>(j, "model_id");
  r.granularity = detail::parse_label_field(j, "granularity", parse_instruction_granularity);
  r.edited.reset();
  if (j.contains("edited")) r.edited = detail::image_ref_field(j, "edited");
  r.error = detail::optional_field<std::string>(j, "error");
}

void validate(const EditResult& r) {
  if (r.sample_id.empty()) violation("<unnamed>", "sample_id is empty");
  if (r.model_id.empty()) violation(r.sample_id, "model_id is empty");
  if (r.edited.has_value() == r.error.has_value()) {
    violation(r.sample_id, "exactly one of 'edited' and 'error' must be present");
  }
  if (r.edited) validate_ref(*r.edited, r.sample_id, "edited");
}

// --- ScoreCard ----------------------------------------------------------------

std::string to_record_line(const ScoreCard& r) {
  json j{{"schema", kScoreCardSchema},
         {"sample_id", r.sample_id},
         {"model_id", r.model_id},
         {"granularity", to_string(r.granularity)}};
  if (r.error) {
    j["error"] = *r.error;
    return j.dump();
  }
  j["id_raw"] = r.id_raw;
  j["bg_rmse"] = r.bg_rmse;
  j["pq_raw"] = r.pq_raw;
  j["sc_raw"] = r.sc_raw;
  j["gta_raw"] = r.gta_raw;
  j["reg_ratio"] = r.reg_ratio;
  j["id01"] = r.id01;
  j["bg01"] = r.bg01;
  j["pq01"] = r.pq01;
  j["sc01"] = r.sc01;
  j["gta01"] = r.gta01;
  j["s_fid"] = r.s_fid;
  j["s_align"] = r.s_align;
  j["s_reg"] = r.s_reg;
  j["fed"] = r.fed;
  return j.dump();
}

void from_record_line(std::string_view line, ScoreCard& r) {
  const json j = detail::parse_object(line);
  detail::check_schema(j, kScoreCardSchema);
  r = ScoreCard{};
  r.sample_id = detail::field<std::string>(j, "sample_id");
  r.model_id = detail::field<std::string>(j, "model_id");
  r.granularity = detail::parse_label_field(j, "granularity", parse_instruction_granularity);
  r.error = detail::optional_field<std::string>(j, "error");
  if (r.error) return;
  r.id_raw = detail::field<double>(j, "id_raw");
  r.bg_rmse = detail::field<double>(j, "bg_rmse");
  r.pq_raw = detail::field<int>(j, "pq_raw");
  r.sc_raw = detail::field<int>(j, "sc_raw");
  r.gta_raw = detail::field<int>(j, "gta_raw");
  r.reg_ratio = detail::field<double>(j, "reg_ratio");
  r.id01 = detail::field<double>(j, "id01");
  r.bg01 = detail::field<double>(j, "bg01");
  r.pq01 = detail::field<double>(j, "pq01");
  r.sc01 = detail::field<double>(j, "sc01");
  r.gta01 = detail::field<double>(j, "gta01");
  r.s_fid = detail::field<double>(j, "s_fid");
  r.s_align = detail::field<double>(j, "s_align");
  r.s_reg = detail::field<double>(j, "s_reg");
  r.fed = detail::field<double>(j, "fed");
}

void validate(const ScoreCard& r) {
  if (r.sample_id.empty()) violation("<unnamed>", "sample_id is empty");
  if (r.model_id.empty()) violation(r.sample_id, "model_id is empty");
  if (r.error) return;
  auto in_unit = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) violation(r.sample_id, fmt::format("{}={} outside [0,1]", name, v));
  };
  auto judge_range = [&](int v, const char* name) {
    if (v < 0 || v > 10) violation(r.sample_id, fmt::format("{}={} outside 0..10", name, v));
  };
  if (!(r.id_raw >= -1.0 && r.id_raw <= 1.0)) violation(r.sample_id, "id_raw outside [-1,1]");
  if (!(r.bg_rmse >= 0.0)) violation(r.sample_id, "bg_rmse is negative");
  if (!(r.reg_ratio >= 0.0)) violation(r.sample_id, "reg_ratio is negative");
  judge_range(r.pq_raw, "pq_raw");
  judge_range(r.sc_raw, "sc_raw");
  judge_range(r.gta_raw, "gta_raw");
  in_unit(r.id01, "id01");
  in_unit(r.bg01, "bg01");
  in_unit(r.pq01, "pq01");
  in_unit(r.sc01, "sc01");
  in_unit(r.gta01, "gta01");
  in_unit(r.s_fid, "s_fid");
  in_unit(r.s_align, "s_align");
  in_unit(r.s_reg, "s_reg");
  in_unit(r.fed, "fed");
  if (std::abs(r.fed - r.s_fid * r.s_align * r.s_reg) > 1e-9) {
    violation(r.sample_id, "fed differs from s_fid * s_align * s_reg");
  }
}

// --- SourceRecord ---------------------------------------------------------------

std::string to_record_line(const SourceRecord& r) {
  return json{{"schema", kSourceSchema},
              {"source_id", r.source_id},
              {"image", detail::image_ref_json(r.image)},
              {"labeled_emotion", to_string(r.labeled_emotion)},
              {"provenance", r.provenance}}
      .dump();
}

void from_record_line(std::string_view line, SourceRecord& r) {
  const json j = detail::parse_object(line);
  detail::check_schema(j, kSourceSchema);
  r.source_id = detail::field<std::string>(j, "source_id");
  r.image = detail::image_ref_field(j, "image");
  r.labeled_emotion = detail::parse_label_field(j, "labeled_emotion", parse_emotion);
  r.provenance = detail::optional_field<std::string>(j, "provenance").value_or("");
}

void validate(const SourceRecord& r) {
  if (r.source_id.empty()) violation("<unnamed>", "source_id is empty");
  validate_ref(r.image, r.source_id, "source");
}

}  // namespace fed
