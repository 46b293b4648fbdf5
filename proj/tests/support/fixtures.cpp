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

#include "fixtures.hpp"

#include <atomic>
#include <cmath>

#include <fmt/format.h>

#include "fed/hashing.hpp"
#include "fed/manifest.hpp"

namespace fed::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() / fmt::format("fedtest-{:08x}-{}", rd(), counter++);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    const std::uint64_t x = rng();
    if (x < limit) return x % n;
  }
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Image random_image(std::mt19937_64& rng, int width, int height) {
  Image image(width, height);
  for (auto& p : image.pixels) p = static_cast<std::uint8_t>(rng() & 0xff);
  return image;
}

Image synthetic_face(std::uint64_t seed, int width, int height) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  const int face[3] = {static_cast<int>(below(rng, 200)) + 30, static_cast<int>(below(rng, 200)) + 30,
                       static_cast<int>(below(rng, 200)) + 30};
  const int tilt = static_cast<int>(below(rng, 64));
  Image image(width, height);
  const double cx = width / 2.0, cy = height / 2.0;
  const double rx = width * (0.22 + 0.06 * uniform01(rng)), ry = height * (0.26 + 0.06 * uniform01(rng));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      const bool inside = dx * dx + dy * dy <= 1.0;
      for (int c = 0; c < Image::kChannels; ++c) {
        int v = inside ? face[c] + (y * 40 / height) - 20 : (x * 255 / width + tilt * c + y) % 256;
        v += static_cast<int>(below(rng, 9)) - 4;
        image.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
    }
  }
  return image;
}

Image alter_face(const Image& image, int shift) {
  Image out = image;
  const BBox box = backends::CenteredBoxLocalizer::box_for(image.width, image.height);
  for (int y = box.y; y < box.y + box.h; ++y)
    for (int x = box.x; x < box.x + box.w; ++x)
      for (int c = 0; c < Image::kChannels; ++c) {
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(int(image.at(x, y, c)) + shift, 0, 255));
      }
  return out;
}

std::vector<SourceRecord> write_sources(const fs::path& dir, int n, std::uint64_t seed, int size) {
  std::vector<SourceRecord> records;
  for (int i = 0; i < n; ++i) {
    SourceRecord r;
    r.source_id = fmt::format("src{:03d}", i);
    r.image = store_image(synthetic_face(seed + static_cast<std::uint64_t>(i), size, size), dir,
                          fmt::format("images/{}.png", r.source_id));
    r.labeled_emotion = kAllEmotions[static_cast<std::size_t>(i) % kAllEmotions.size()];
    r.provenance = "synthetic";
    records.push_back(std::move(r));
  }
  save_records(records, dir / "sources.jsonl");
  return records;
}

std::vector<BenchmarkSample> write_benchmark(const fs::path& dir, int n, std::uint64_t seed, int size) {
  std::vector<BenchmarkSample> samples;
  for (int i = 0; i < n; ++i) {
    BenchmarkSample s;
    s.sample_id = fmt::format("s{:03d}", i);
    const Image src = synthetic_face(seed + static_cast<std::uint64_t>(i), size, size);
    s.source = store_image(src, dir, fmt::format("images/{}_src.png", s.sample_id));
    s.ground_truth = store_image(alter_face(src, 40 + 10 * (i % 3)), dir, fmt::format("images/{}_gt.png", s.sample_id));
    s.src_emotion = EmotionLabel::neutral;
    s.trg_emotion = kAllEmotions[static_cast<std::size_t>(i) % 3 == 0 ? 3 : (i % 2 ? 0 : 6)];
    s.simple_instruction = render_instruction(s.src_emotion, s.trg_emotion);
    s.dense_instruction = fmt::format("Raise the cheeks and reshape the mouth for sample {}.", i);
    samples.push_back(std::move(s));
  }
  save_records(samples, dir / "benchmark.jsonl");
  return samples;
}

ScoreCard make_card(const std::string& model, const std::string& sample, double id_raw, double bg_rmse, int pq,
                    int sc, int gta, double reg_ratio, InstructionGranularity granularity) {
  ScoreCard c;
  c.model_id = model;
  c.sample_id = sample;
  c.granularity = granularity;
  c.id_raw = id_raw;
  c.bg_rmse = bg_rmse;
  c.pq_raw = pq;
  c.sc_raw = sc;
  c.gta_raw = gta;
  c.reg_ratio = reg_ratio;
  c.id01 = id_raw > 0 ? id_raw : 0.0;
  c.bg01 = std::exp(-bg_rmse / 25.0);
  c.pq01 = pq / 10.0;
  c.sc01 = sc / 10.0;
  c.gta01 = gta / 10.0;
  c.s_fid = (c.id01 + c.bg01 + c.pq01) / 3.0;
  c.s_align = (c.sc01 + c.gta01) / 2.0;
  c.s_reg = std::exp(-(reg_ratio - 1.0) * (reg_ratio - 1.0) / 0.5);
  c.fed = c.s_fid * c.s_align * c.s_reg;
  return c;
}

StudyFixture make_study_fixture(int n, int agree, int ties) {
  StudyFixture f;
  for (int i = 0; i < n; ++i) {
    const std::string sample = fmt::format("q{:03d}", i);
    const bool tied = i >= n - ties;
    for (const char* model : {"alpha", "beta"}) {
      EditResult r{sample, model, InstructionGranularity::simple, std::nullopt, std::nullopt};
      r.edited = ImageRef{fmt::format("images/{}/{}.png", model, sample), sha256_hex(sample + model), 8, 8};
      f.results.push_back(r);
    }
    f.cards.push_back(make_card("alpha", sample, 0.8, 5, 9, 8, 7, 1.0));
    f.cards.push_back(tied ? make_card("beta", sample, 0.8, 5, 9, 8, 7, 1.0)
                           : make_card("beta", sample, 0.4, 20, 6, 5, 4, 1.6));
    study::PairTask pair;
    pair.pair_id = fmt::format("pair-{:05d}", i + 1);
    pair.sample_id = sample;
    pair.left = f.results[f.results.size() - 2];
    pair.right = f.results.back();
    f.pairs.push_back(pair);

    const bool human_left = i < agree || tied;
    const study::Choice majority = human_left ? study::Choice::left : study::Choice::right;
    const study::Choice minority = human_left ? study::Choice::right : study::Choice::left;
    for (study::Perspective p : study::kAllPerspectives) {
      for (int a = 0; a < 3; ++a) {
        const study::Choice c = (i % 2 == 1 && a == 2) ? minority : majority;
        f.votes.push_back({pair.pair_id, fmt::format("ann{}", a), p, c, ""});
      }
    }
  }
  return f;
}

backends::BackendSuite MockBackends::suite(backends::CallCache* cache) const {
  backends::BackendSuite s;
  s.embedder = embedder;
  s.localizer = localizer;
  s.perceptual = perceptual;
  s.judge = judge;
  for (const auto& c : classifiers) s.classifiers.push_back(c);
  s.editor = editor;
  s.calls.cache = cache;
  s.calls.retry = backends::RetryPolicy::immediate();
  return s;
}

std::size_t MockBackends::classifier_calls() const {
  std::size_t n = 0;
  for (const auto* c : classifier_counters) n += c->calls();
  return n;
}

MockBackends make_mocks(int score, const std::vector<std::string>& votes, std::shared_ptr<backends::ImageEditor> editor) {
  MockBackends m;
  m.embedder = std::make_shared<backends::HashSeededEmbedder>(7);
  m.localizer = std::make_shared<backends::CenteredBoxLocalizer>();
  m.perceptual = std::make_shared<backends::MeanAbsDiffPerceptual>();
  m.judge = std::make_shared<backends::ScriptedJudge>(
      std::vector<backends::ScriptedJudge::Rule>{{"SCORE:", std::nullopt, fmt::format("Looks fine.\nSCORE: {}", score)}},
      std::string("The brows are relaxed and the mouth is slightly open."));
  for (std::size_t i = 0; i < votes.size(); ++i) {
    auto c = std::make_shared<backends::ScriptedClassifier>(fmt::format("fer{}", i), votes[i]);
    m.classifier_counters.push_back(c.get());
    m.classifiers.push_back(std::move(c));
  }
  m.editor = std::move(editor);
  return m;
}

std::string HashVoteClassifier::classify(const Image& image, LabelGranularity granularity) {
  count();
  const std::string h = sha256_hex(name_ + "|" + image_hash(image));
  static const char* kFine[] = {"angry", "disgust", "fear", "happy", "neutral", "sad", "surprise"};
  static const char* kCoarse[] = {"positive", "neutral", "negative"};
  const int pick = std::stoi(h.substr(0, 2), nullptr, 16);
  if (pick < 150) return lean_;
  return granularity == LabelGranularity::fine ? kFine[pick % 7] : kCoarse[pick % 3];
}

MockBackends make_hash_vote_mocks(int score, int n, std::shared_ptr<backends::ImageEditor> editor) {
  MockBackends m = make_mocks(score, {}, std::move(editor));
  for (int i = 0; i < n; ++i) {
    auto c = std::make_shared<HashVoteClassifier>(fmt::format("hv{}", i), "negative");
    m.classifier_counters.push_back(c.get());
    m.classifiers.push_back(std::move(c));
  }
  return m;
}

std::vector<pipeline::VerificationTask> write_verification_tasks(const fs::path& dir, int n, int single) {
  std::vector<pipeline::VerificationTask> tasks;
  for (int i = 0; i < n; ++i) {
    const Image src = synthetic_face(static_cast<std::uint64_t>(100 + i), 24, 24);
    pipeline::VerificationTask t;
    t.source_id = fmt::format("src{:03}", i);
    t.task_id = t.source_id + ":happy";
    t.source = store_image(src, dir, fmt::format("sources/{}.png", t.source_id));
    t.src_emotion = EmotionLabel::sad;
    t.trg_emotion = EmotionLabel::happy;
    t.instruction = render_instruction(t.src_emotion, t.trg_emotion);
    const int count = i == single ? 1 : 2;
    for (int c = 0; c < count; ++c) {
      const std::string cid = fmt::format("{}-happy-{}", t.source_id, c);
      t.candidates.push_back({cid, store_image(alter_face(src, 30 + 20 * c), dir, "candidates/" + cid + ".png"),
                              "The mouth curves upward."});
    }
    tasks.push_back(std::move(t));
  }
  save_records(tasks, dir / "pending_verification.jsonl");
  return tasks;
}

}  // namespace fed::testing
