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

#include "fed/backends/mocks.hpp"

#include <cmath>
#include <cstdlib>
#include <random>

#include <fmt/format.h>

#include "fed/error.hpp"
#include "fed/hashing.hpp"

namespace fed::backends {

namespace {

constexpr int kGrid = 8;
constexpr int kFeatures = kGrid * kGrid * Image::kChannels;

// Uniform in [-1, 1) from raw engine bits; avoids distribution objects whose output is
// implementation-defined.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
}

std::uint64_t seed_from_hash(const std::string& hex) {
  return std::strtoull(hex.substr(0, 16).c_str(), nullptr, 16);
}

}  // namespace

// --- HashSeededEmbedder -----------------------------------------------------------

HashSeededEmbedder::HashSeededEmbedder(std::uint64_t seed, int dim, bool strict)
    : seed_(seed), dim_(dim), strict_(strict), projection_(static_cast<std::size_t>(dim) * kFeatures) {
  std::mt19937_64 rng(seed);
  for (double& v : projection_) v = unit_uniform(rng);
}

BackendId HashSeededEmbedder::id() const {
  return {BackendKind::embedder, "hash-seeded", fmt::format("1-s{}-d{}", seed_, dim_)};
}

FaceEmbedding HashSeededEmbedder::embed_face(const Image& image) {
  count();
  const int min_side = strict_ ? 4 : 1;
  if (image.empty() || image.width < min_side || image.height < min_side) {
    throw Error(ErrorCode::NoFaceFound, fmt::format("no face in {}x{} image", image.width, image.height));
  }
  std::vector<double> features(kFeatures, 0.0);
  for (int gy = 0; gy < kGrid; ++gy) {
    const int y0 = gy * image.height / kGrid;
    const int y1 = std::max(y0 + 1, (gy + 1) * image.height / kGrid);
    for (int gx = 0; gx < kGrid; ++gx) {
      const int x0 = gx * image.width / kGrid;
      const int x1 = std::max(x0 + 1, (gx + 1) * image.width / kGrid);
      for (int c = 0; c < Image::kChannels; ++c) {
        double sum = 0;
        for (int y = y0; y < std::min(y1, image.height); ++y)
          for (int x = x0; x < std::min(x1, image.width); ++x) sum += image.at(x, y, c);
        features[(gy * kGrid + gx) * Image::kChannels + c] = sum / ((y1 - y0) * (x1 - x0));
      }
    }
  }
  double mean = 0;
  for (double f : features) mean += f;
  mean /= kFeatures;
  double energy = 0;
  for (double& f : features) {
    f -= mean;
    energy += f * f;
  }

  std::vector<double> raw(static_cast<std::size_t>(dim_), 0.0);
  if (energy < 1e-12) {
    if (strict_) throw Error(ErrorCode::NoFaceFound, "uniform image has no face structure");
    std::mt19937_64 rng(seed_ ^ seed_from_hash(image_hash(image)));
    for (double& v : raw) v = unit_uniform(rng);
  } else {
    for (int i = 0; i < dim_; ++i) {
      const double* row = &projection_[static_cast<std::size_t>(i) * kFeatures];
      double acc = 0;
      for (int k = 0; k < kFeatures; ++k) acc += row[k] * features[k];
      raw[i] = acc;
    }
  }
  return FaceEmbedding::normalized(std::move(raw));
}

// --- ScriptedEmbedder ----------------------------------------------------------------

void ScriptedEmbedder::set(const Image& image, std::vector<double> raw) {
  std::lock_guard guard(mutex_);
  table_[image_hash(image)] = std::move(raw);
}

FaceEmbedding ScriptedEmbedder::embed_face(const Image& image) {
  count();
  std::vector<double> raw;
  {
    std::lock_guard guard(mutex_);
    const auto it = table_.find(image_hash(image));
    if (it != table_.end()) raw = it->second;
  }
  if (raw.empty()) {
    if (fallback_) return fallback_->embed_face(image);
    throw Error(ErrorCode::NoFaceFound, "scripted embedder has no vector for this image");
  }
  return FaceEmbedding::normalized(std::move(raw));
}

// --- CenteredBoxLocalizer --------------------------------------------------------------

BBox CenteredBoxLocalizer::box_for(int width, int height) {
  const int w = std::max(1, width / 2);
  const int h = std::max(1, height / 2);
  return BBox{(width - w) / 2, (height - h) / 2, w, h};
}

FaceRegion CenteredBoxLocalizer::locate_face(const Image& image) {
  count();
  if (image.empty() || image.width < min_side_ || image.height < min_side_) {
    throw Error(ErrorCode::NoFaceFound,
                fmt::format("{}x{} image is below the minimum face size {}", image.width, image.height, min_side_));
  }
  return FaceRegion::from_bbox(image.width, image.height, box_for(image.width, image.height));
}

// --- MeanAbsDiffPerceptual ---------------------------------------------------------------

double MeanAbsDiffPerceptual::perceptual_distance(const Image& a, const Image& b) {
  count();
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("{}x{} vs {}x{}", a.width, a.height, b.width, b.height));
  }
  if (a.pixels.empty()) return 0.0;
  unsigned long long total = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    total += static_cast<unsigned>(std::abs(int(a.pixels[i]) - int(b.pixels[i])));
  }
  return static_cast<double>(total) / (static_cast<double>(a.pixels.size()) * 255.0);
}

// --- ScriptedJudge --------------------------------------------------------------------------

ScriptedJudge::ScriptedJudge(std::vector<Rule> rules, std::optional<std::string> default_reply,
                             std::string name)
    : rules_(std::move(rules)), default_reply_(std::move(default_reply)), name_(std::move(name)) {}

void ScriptedJudge::add_rule(Rule rule) {
  std::lock_guard guard(mutex_);
  rules_.push_back(std::move(rule));
}

std::vector<ScriptedJudge::Call> ScriptedJudge::log() const {
  std::lock_guard guard(mutex_);
  return log_;
}

std::string ScriptedJudge::complete(std::string_view prompt, std::span<const Image* const> images) {
  count();
  Call call{std::string(prompt), {}};
  for (const Image* image : images) call.image_hashes.push_back(image_hash(*image));
  std::lock_guard guard(mutex_);
  log_.push_back(call);
  if (transient_failures_ > 0) {
    --transient_failures_;
    throw Error(ErrorCode::BackendUnavailable, "scripted transient failure");
  }
  for (const auto& rule : rules_) {
    if (prompt.find(rule.prompt_contains) == std::string_view::npos) continue;
    if (rule.first_image_hash && (call.image_hashes.empty() || call.image_hashes.front() != *rule.first_image_hash)) {
      continue;
    }
    return rule.reply;
  }
  if (default_reply_) return *default_reply_;
  throw Error(ErrorCode::BackendUnavailable, "scripted judge has no reply for this prompt");
}

// --- ScriptedClassifier ------------------------------------------------------------------------

ScriptedClassifier::ScriptedClassifier(std::string name, std::optional<std::string> default_reply,
                                       bool supports_coarse)
    : name_(std::move(name)), default_reply_(std::move(default_reply)), supports_coarse_(supports_coarse) {}

void ScriptedClassifier::set(const std::string& image_hash, std::string reply) {
  std::lock_guard guard(mutex_);
  table_[image_hash] = std::move(reply);
}

void ScriptedClassifier::set(const Image& image, std::string reply) { set(image_hash(image), std::move(reply)); }

void ScriptedClassifier::fail_on(const std::string& image_hash) {
  std::lock_guard guard(mutex_);
  failing_.insert(image_hash);
}

std::string ScriptedClassifier::classify(const Image& image, LabelGranularity) {
  count();
  const std::string hash = image_hash(image);
  std::lock_guard guard(mutex_);
  if (failing_.contains(hash)) {
    throw Error(ErrorCode::BackendUnavailable, fmt::format("classifier '{}' failed", name_));
  }
  if (const auto it = table_.find(hash); it != table_.end()) return it->second;
  if (default_reply_) return *default_reply_;
  throw Error(ErrorCode::BackendUnavailable, fmt::format("classifier '{}' has no scripted answer", name_));
}

// --- editors -----------------------------------------------------------------------------------

Image IdentityEditor::edit_image(const Image& image, std::string_view instruction, std::uint32_t) {
  count();
  if (instruction.empty()) throw Error(ErrorCode::EditorFailure, "empty instruction");
  return image;
}

PatchEditor::PatchEditor(double alpha, std::vector<std::string> fail_on)
    : alpha_(alpha), fail_on_(std::move(fail_on)) {}

Image PatchEditor::edit_image(const Image& image, std::string_view instruction, std::uint32_t variant) {
  count();
  if (instruction.empty()) throw Error(ErrorCode::EditorFailure, "empty instruction");
  for (const auto& needle : fail_on_) {
    if (instruction.find(needle) != std::string_view::npos) {
      throw Error(ErrorCode::EditorFailure, fmt::format("patch editor refuses \"{}\"", instruction));
    }
  }
  const std::string digest = sha256_hex(fmt::format("{}#{}", instruction, variant));
  const int colour[3] = {std::stoi(digest.substr(0, 2), nullptr, 16), std::stoi(digest.substr(2, 2), nullptr, 16),
                         std::stoi(digest.substr(4, 2), nullptr, 16)};
  Image out = image;
  if (image.empty()) return out;
  const BBox box = CenteredBoxLocalizer::box_for(image.width, image.height);
  for (int y = box.y; y < box.y + box.h; ++y)
    for (int x = box.x; x < box.x + box.w; ++x)
      for (int c = 0; c < Image::kChannels; ++c) {
        const double v = (1.0 - alpha_) * image.at(x, y, c) + alpha_ * colour[c];
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(v));
      }
  return out;
}

}  // namespace fed::backends
