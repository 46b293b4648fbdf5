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

#include "fed/backends/suite.hpp"

#include <fmt/format.h>

#include "fed/error.hpp"

namespace fed::backends {

namespace {
template <class T>
T& need(const std::shared_ptr<T>& ptr, const char* kind) {
  if (!ptr) throw Error(ErrorCode::ConfigError, fmt::format("no {} backend is configured", kind));
  return *ptr;
}
}  // namespace

FaceEmbedder& BackendSuite::need_embedder() const { return need(embedder, "embedder"); }
FaceLocalizer& BackendSuite::need_localizer() const { return need(localizer, "localizer"); }
PerceptualMetric& BackendSuite::need_perceptual() const { return need(perceptual, "perceptual"); }
VisionJudge& BackendSuite::need_judge() const { return need(judge, "judge"); }
ImageEditor& BackendSuite::need_editor() const { return need(editor, "editor"); }

}  // namespace fed::backends
