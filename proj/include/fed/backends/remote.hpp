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
#include <memory>
#include <string>

#include "fed/backends/interfaces.hpp"

namespace fed::backends {

/// Connection settings for a model served behind the toolkit's HTTP adapter protocol.
///
/// Every operation is `POST <base_url>/v1/<op>` with a JSON body; images travel as
/// base64 PNG. See docs/backend-protocol.md for the request and response fields.
struct RemoteEndpoint {
  std::string name;
  std::string version = "1";
  std::string base_url;  // http://host:port or https://host:port, optional path prefix
  std::string api_key;   // sent as "Authorization: Bearer <key>" when non-empty
  std::chrono::seconds timeout{120};
  int max_concurrency = 4;  // in-flight requests allowed against this endpoint
};

std::shared_ptr<FaceEmbedder> make_remote_embedder(RemoteEndpoint endpoint);
std::shared_ptr<FaceLocalizer> make_remote_localizer(RemoteEndpoint endpoint);
std::shared_ptr<PerceptualMetric> make_remote_perceptual(RemoteEndpoint endpoint);
std::shared_ptr<VisionJudge> make_remote_judge(RemoteEndpoint endpoint);
std::shared_ptr<ExpressionClassifier> make_remote_classifier(RemoteEndpoint endpoint, bool supports_coarse);
std::shared_ptr<ImageEditor> make_remote_editor(RemoteEndpoint endpoint);

}  // namespace fed::backends
