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

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <thread>

#include "fed/backends/cache.hpp"
#include "fed/backends/interfaces.hpp"
#include "fed/error.hpp"

namespace fed::backends {

/// Bounded exponential backoff for transient backend failures.
struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  /// Replaceable so tests do not sleep.
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };

  static RetryPolicy immediate(int attempts = 3) {
    RetryPolicy p;
    p.max_attempts = attempts;
    p.initial_backoff = std::chrono::milliseconds(0);
    p.sleep = [](std::chrono::milliseconds) {};
    return p;
  }
};

/// Runs `fn`, retrying when it throws one of `retryable`. The last failure propagates.
template <class Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn,
                std::initializer_list<ErrorCode> retryable = {ErrorCode::BackendUnavailable}) {
  auto delay = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const Error& e) {
      bool transient = false;
      for (auto code : retryable) transient = transient || e.code() == code;
      if (!transient || attempt >= policy.max_attempts) throw;
    }
    if (policy.sleep && delay.count() > 0) policy.sleep(delay);
    delay = std::chrono::milliseconds(static_cast<long long>(delay.count() * policy.multiplier));
  }
}

/// How backend calls are made: through the cache (when set) and with retries.
struct CallContext {
  CallCache* cache = nullptr;
  RetryPolicy retry;
};

FaceEmbedding embed_face(FaceEmbedder& embedder, const Image& image, const CallContext& ctx);
FaceRegion locate_face(FaceLocalizer& localizer, const Image& image, const CallContext& ctx);
double perceptual_distance(PerceptualMetric& metric, const Image& a, const Image& b,
                           const CallContext& ctx);

/// Scored judgement: 1-3 images, non-empty prompt. Parse failures are retried only for
/// non-deterministic judges. Throws JudgeParseFailure, BackendUnavailable, PreconditionViolation.
JudgeVerdict judge(VisionJudge& judge, std::string_view prompt, std::span<const Image* const> images,
                   const CallContext& ctx);

/// Free-text answer (captions, dense instructions). An empty reply is a JudgeParseFailure.
std::string describe(VisionJudge& judge, std::string_view prompt,
                     std::span<const Image* const> images, const CallContext& ctx);

/// One label of the requested granularity; fine-only classifiers are mapped to polarities.
ExpressionLabel classify_expression(ExpressionClassifier& classifier, const Image& image,
                                    LabelGranularity granularity, const CallContext& ctx);

Image edit_image(ImageEditor& editor, const Image& image, std::string_view instruction,
                 std::uint32_t variant, const CallContext& ctx);

}  // namespace fed::backends
