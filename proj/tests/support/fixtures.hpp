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
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fed/backends/mocks.hpp"
#include "fed/backends/suite.hpp"
#include "fed/datamodel.hpp"
#include "fed/humanstudy.hpp"
#include "fed/error.hpp"
#include "fed/image.hpp"
#include "fed/pipeline.hpp"

namespace fed::testing {

/// The code of the fed::Error thrown by `fn`; nullopt when it returns normally.
template <class Fn>
std::optional<ErrorCode> code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

std::uint64_t below(std::mt19937_64& rng, std::uint64_t n);
double uniform01(std::mt19937_64& rng);

Image random_image(std::mt19937_64& rng, int width, int height);

/// Gradient background with an elliptical "face" whose colour and noise derive from `seed`.
Image synthetic_face(std::uint64_t seed, int width = 64, int height = 64);

/// Moves the pixels inside the centred face box towards `shift` (keeps the background).
Image alter_face(const Image& image, int shift);

/// `n` synthetic sources written under `dir/images/` with a `sources.jsonl` manifest.
std::vector<SourceRecord> write_sources(const std::filesystem::path& dir, int n, std::uint64_t seed, int size = 64);

/// `n` benchmark samples (source + altered-face ground truth) under `dir` with
/// `benchmark.jsonl`. Every sample has a dense instruction.
std::vector<BenchmarkSample> write_benchmark(const std::filesystem::path& dir, int n, std::uint64_t seed,
                                             int size = 32);

/// `n` verification tasks ("src000:happy", ...) with images under `dir` and a
/// `pending_verification.jsonl` manifest. Task i has two candidates unless `single` is i.
std::vector<pipeline::VerificationTask> write_verification_tasks(const std::filesystem::path& dir, int n,
                                                                 int single = -1);

/// A scored card computed with hand-written formulas from raw sub-metrics.
ScoreCard make_card(const std::string& model, const std::string& sample, double id_raw, double bg_rmse, int pq,
                    int sc, int gta, double reg_ratio,
                    InstructionGranularity granularity = InstructionGranularity::simple);

/// Two models ("alpha", "beta") on `n` samples. The card metrics prefer alpha on every pair
/// except the last `ties` pairs, where both cards are identical. Human consensus prefers alpha
/// on the first `agree` pairs and beta on the rest of the untied pairs. Consensus is reached
/// 3-0 on even pairs and 2-1 on odd pairs, under every perspective.
struct StudyFixture {
  std::vector<EditResult> results;
  std::vector<study::PairTask> pairs;
  std::vector<ScoreCard> cards;
  std::vector<study::PreferenceVote> votes;
};
StudyFixture make_study_fixture(int n, int agree, int ties);

/// Mock backends with counters kept accessible.
struct MockBackends {
  std::shared_ptr<backends::HashSeededEmbedder> embedder;
  std::shared_ptr<backends::CenteredBoxLocalizer> localizer;
  std::shared_ptr<backends::MeanAbsDiffPerceptual> perceptual;
  std::shared_ptr<backends::ScriptedJudge> judge;
  std::vector<std::shared_ptr<backends::ExpressionClassifier>> classifiers;
  std::vector<const backends::CallCounter*> classifier_counters;
  std::shared_ptr<backends::ImageEditor> editor;

  backends::BackendSuite suite(backends::CallCache* cache = nullptr) const;
  std::size_t classifier_calls() const;
};

/// Votes derived from sha256(name|image hash): mostly `lean`, otherwise any polarity.
class HashVoteClassifier final : public backends::ExpressionClassifier, public backends::CallCounter {
 public:
  HashVoteClassifier(std::string name, std::string lean) : name_(std::move(name)), lean_(std::move(lean)) {}

  backends::BackendId id() const override { return {backends::BackendKind::classifier, name_, "1"}; }
  std::string classify(const Image& image, LabelGranularity granularity) override;

 private:
  std::string name_;
  std::string lean_;
};

/// Judge answering every scored prompt with `score` and free-text prompts with a caption.
/// Classifier replies give `votes` (one classifier per entry).
MockBackends make_mocks(int score, const std::vector<std::string>& votes, std::shared_ptr<backends::ImageEditor> editor);

/// Mocks with `n` HashVoteClassifier members leaning towards "negative".
MockBackends make_hash_vote_mocks(int score, int n, std::shared_ptr<backends::ImageEditor> editor);

}  // namespace fed::testing
