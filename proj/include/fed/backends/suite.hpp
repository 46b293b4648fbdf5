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

#include <memory>
#include <vector>

#include "fed/backends/calls.hpp"
#include "fed/backends/interfaces.hpp"

namespace fed::backends {

/// The set of configured backends a workflow runs against, plus how calls are made.
struct BackendSuite {
  std::shared_ptr<FaceEmbedder> embedder;
  std::shared_ptr<FaceLocalizer> localizer;
  std::shared_ptr<PerceptualMetric> perceptual;
  std::shared_ptr<VisionJudge> judge;
  std::vector<std::shared_ptr<ExpressionClassifier>> classifiers;
  std::shared_ptr<ImageEditor> editor;
  CallContext calls;

  FaceEmbedder& need_embedder() const;
  FaceLocalizer& need_localizer() const;
  PerceptualMetric& need_perceptual() const;
  VisionJudge& need_judge() const;
  ImageEditor& need_editor() const;
};

}  // namespace fed::backends
