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

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fed/backends/interfaces.hpp"

namespace fed::backends {

/// Counts raw backend invocations so tests can observe cache behaviour.
class CallCounter {
 public:
  std::size_t calls() const { return calls_.load(); }

 protected:
  void count() { ++calls_; }

 private:
  std::atomic<std::size_t> calls_{0};
};

/// Deterministic identity embedder. The face is summarized as a centred 8x8x3 grid of mean
/// intensities and projected through a random matrix drawn from `seed`. Uniform images carry
/// no structure; they get a vector seeded by their content hash (or NoFaceFound when strict).
class HashSeededEmbedder final : public FaceEmbedder, public CallCounter {
 public:
  explicit HashSeededEmbedder(std::uint64_t seed = 0, int dim = 64, bool strict = false);

  BackendId id() const override;
  FaceEmbedding embed_face(const Image& image) override;

 private:
  std::uint64_t seed_;
  int dim_;
  bool strict_;
  std::vector<double> projection_;  // dim x features, row-major
};

/// Answers from a table keyed by image hash (unit-normalized on return), with an optional
/// fallback embedder for unknown images.
class ScriptedEmbedder final : public FaceEmbedder, public CallCounter {
 public:
  void set(const Image& image, std::vector<double> raw);
  void set_fallback(FaceEmbedder* fallback) { fallback_ = fallback; }

  BackendId id() const override { return {BackendKind::embedder, "scripted", "1"}; }
  FaceEmbedding embed_face(const Image& image) override;

 private:
  std::mutex mutex_;
  std::map<std::string, std::vector<double>> table_;
  FaceEmbedder* fallback_ = nullptr;
};

/// Centred face box with half the image width and height (a quarter of the area).
class CenteredBoxLocalizer final : public FaceLocalizer, public CallCounter {
 public:
  explicit CenteredBoxLocalizer(int min_side = 4) : min_side_(min_side) {}

  static BBox box_for(int width, int height);

  BackendId id() const override { return {BackendKind::localizer, "centered-box", "1"}; }
  FaceRegion locate_face(const Image& image) override;

 private:
  int min_side_;
};

/// Mean absolute per-channel difference divided by 255.
class MeanAbsDiffPerceptual final : public PerceptualMetric, public CallCounter {
 public:
  BackendId id() const override { return {BackendKind::perceptual, "mean-abs-diff", "1"}; }
  double perceptual_distance(const Image& a, const Image& b) override;
};

/// Replies chosen by the first rule whose prompt substring (and image hash, if set) matches.
class ScriptedJudge final : public VisionJudge, public CallCounter {
 public:
  struct Rule {
    std::string prompt_contains;
    std::optional<std::string> first_image_hash;
    std::string reply;
  };
  struct Call {
    std::string prompt;
    std::vector<std::string> image_hashes;
  };

  explicit ScriptedJudge(std::vector<Rule> rules = {}, std::optional<std::string> default_reply = std::nullopt,
                         std::string name = "scripted");

  void add_rule(Rule rule);
  /// The next `n` calls throw BackendUnavailable before any rule is consulted.
  void fail_next(int n) { transient_failures_ = n; }
  std::vector<Call> log() const;

  BackendId id() const override { return {BackendKind::judge, name_, "1"}; }
  std::string complete(std::string_view prompt, std::span<const Image* const> images) override;

 private:
  mutable std::mutex mutex_;
  std::vector<Rule> rules_;
  std::optional<std::string> default_reply_;
  std::string name_;
  std::atomic<int> transient_failures_{0};
  std::vector<Call> log_;
};

/// Replies from a table keyed by image hash, else the default reply.
class ScriptedClassifier final : public ExpressionClassifier, public CallCounter {
 public:
  explicit ScriptedClassifier(std::string name, std::optional<std::string> default_reply = std::nullopt,
                              bool supports_coarse = true);

  void set(const std::string& image_hash, std::string reply);
  void set(const Image& image, std::string reply);
  /// Images with this hash make the classifier throw BackendUnavailable.
  void fail_on(const std::string& image_hash);

  BackendId id() const override { return {BackendKind::classifier, name_, "1"}; }
  bool supports_coarse() const override { return supports_coarse_; }
  std::string classify(const Image& image, LabelGranularity granularity) override;

 private:
  std::string name_;
  std::optional<std::string> default_reply_;
  bool supports_coarse_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> table_;
  std::set<std::string> failing_;
};

class IdentityEditor final : public ImageEditor, public CallCounter {
 public:
  BackendId id() const override { return {BackendKind::editor, "identity", "1"}; }
  Image edit_image(const Image& image, std::string_view instruction, std::uint32_t variant) override;
};

/// Blends the centred face box towards a colour derived from hash(instruction, variant).
/// Pixels outside the box are untouched.
class PatchEditor final : public ImageEditor, public CallCounter {
 public:
  explicit PatchEditor(double alpha = 0.5, std::vector<std::string> fail_on = {});

  BackendId id() const override { return {BackendKind::editor, "patch", "1"}; }
  Image edit_image(const Image& image, std::string_view instruction, std::uint32_t variant) override;

 private:
  double alpha_;
  std::vector<std::string> fail_on_;
};

}  // namespace fed::backends
