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

#include "fed/backends/remote.hpp"

#include <semaphore>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "fed/error.hpp"
#include "fed/hashing.hpp"

namespace fed::backends {

namespace {

using json = nlohmann::json;

/// Splits "scheme://host:port/prefix" into the httplib client address and path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

class RemoteClient {
 public:
  explicit RemoteClient(RemoteEndpoint endpoint)
      : endpoint_(std::move(endpoint)), slots_(std::max(1, endpoint_.max_concurrency)) {
    if (endpoint_.base_url.empty()) {
      throw Error(ErrorCode::ConfigError, fmt::format("remote backend '{}' has no url", endpoint_.name));
    }
  }

  const RemoteEndpoint& endpoint() const { return endpoint_; }

  json post(std::string_view op, const json& body) {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};

    const auto [address, prefix] = split_url(endpoint_.base_url);
    httplib::Client client(address);
    client.set_connection_timeout(endpoint_.timeout);
    client.set_read_timeout(endpoint_.timeout);
    client.set_write_timeout(endpoint_.timeout);
    httplib::Headers headers;
    if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
    const std::string path = fmt::format("{}/v1/{}", prefix, op);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      throw Error(ErrorCode::BackendUnavailable,
                  fmt::format("{} {}: {}", endpoint_.name, path, httplib::to_string(res.error())));
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::exception&) {
      reply = json::object();
    }
    if (res->status == 422 && reply.value("error", "") == "NoFaceFound") {
      throw Error(ErrorCode::NoFaceFound, fmt::format("{}: {}", endpoint_.name, reply.value("message", "no face")));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::BackendUnavailable,
                  fmt::format("{} {}: HTTP {} {}", endpoint_.name, path, res->status, reply.value("message", "")));
    }
    return reply;
  }

  BackendId id(BackendKind kind) const { return {kind, endpoint_.name, endpoint_.version}; }

 private:
  RemoteEndpoint endpoint_;
  std::counting_semaphore<> slots_;
};

std::string png64(const Image& image) { return base64_encode(encode_png(image)); }

template <class T>
T reply_field(const json& reply, const char* name, const RemoteClient& client) {
  try {
    return reply.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::BackendUnavailable,
                fmt::format("{}: reply lacks a valid '{}' field", client.endpoint().name, name));
  }
}

class RemoteEmbedder final : public FaceEmbedder {
 public:
  explicit RemoteEmbedder(RemoteEndpoint e) : client_(std::move(e)) {}
  BackendId id() const override { return client_.id(BackendKind::embedder); }
  FaceEmbedding embed_face(const Image& image) override {
    const json reply = client_.post("embed_face", json{{"image", png64(image)}});
    return FaceEmbedding::normalized(reply_field<std::vector<double>>(reply, "embedding", client_));
  }

 private:
  RemoteClient client_;
};

class RemoteLocalizer final : public FaceLocalizer {
 public:
  explicit RemoteLocalizer(RemoteEndpoint e) : client_(std::move(e)) {}
  BackendId id() const override { return client_.id(BackendKind::localizer); }
  FaceRegion locate_face(const Image& image) override {
    const json reply = client_.post("locate_face", json{{"image", png64(image)}});
    const auto b = reply_field<std::vector<int>>(reply, "bbox", client_);
    if (b.size() != 4) throw Error(ErrorCode::BackendUnavailable, "bbox must have 4 integers");
    FaceRegion region = FaceRegion::from_bbox(image.width, image.height, BBox{b[0], b[1], b[2], b[3]});
    if (reply.contains("mask")) {
      const std::string mask = base64_decode(reply_field<std::string>(reply, "mask", client_));
      if (mask.size() != region.mask.size()) {
        throw Error(ErrorCode::BackendUnavailable, "mask size differs from the image size");
      }
      region.mask.assign(mask.begin(), mask.end());
    }
    return region;
  }

 private:
  RemoteClient client_;
};

class RemotePerceptual final : public PerceptualMetric {
 public:
  explicit RemotePerceptual(RemoteEndpoint e) : client_(std::move(e)) {}
  BackendId id() const override { return client_.id(BackendKind::perceptual); }
  double perceptual_distance(const Image& a, const Image& b) override {
    if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "perceptual inputs differ in size");
    const json reply = client_.post("perceptual_distance", json{{"a", png64(a)}, {"b", png64(b)}});
    return reply_field<double>(reply, "distance", client_);
  }

 private:
  RemoteClient client_;
};

class RemoteJudge final : public VisionJudge {
 public:
  explicit RemoteJudge(RemoteEndpoint e) : client_(std::move(e)) {}
  BackendId id() const override { return client_.id(BackendKind::judge); }
  bool deterministic() const override { return false; }
  std::string complete(std::string_view prompt, std::span<const Image* const> images) override {
    json list = json::array();
    for (const Image* image : images) list.push_back(png64(*image));
    const json reply = client_.post("complete", json{{"prompt", prompt}, {"images", list}});
    return reply_field<std::string>(reply, "text", client_);
  }

 private:
  RemoteClient client_;
};

class RemoteClassifier final : public ExpressionClassifier {
 public:
  RemoteClassifier(RemoteEndpoint e, bool coarse) : client_(std::move(e)), coarse_(coarse) {}
  BackendId id() const override { return client_.id(BackendKind::classifier); }
  bool deterministic() const override { return false; }
  bool supports_coarse() const override { return coarse_; }
  std::string classify(const Image& image, LabelGranularity granularity) override {
    const json reply = client_.post(
        "classify", json{{"image", png64(image)}, {"granularity", to_string(granularity)}});
    return reply_field<std::string>(reply, "text", client_);
  }

 private:
  RemoteClient client_;
  bool coarse_;
};

class RemoteEditor final : public ImageEditor {
 public:
  explicit RemoteEditor(RemoteEndpoint e) : client_(std::move(e)) {}
  BackendId id() const override { return client_.id(BackendKind::editor); }
  bool deterministic() const override { return false; }
  Image edit_image(const Image& image, std::string_view instruction, std::uint32_t variant) override {
    json reply;
    try {
      reply = client_.post("edit_image",
                           json{{"image", png64(image)}, {"instruction", instruction}, {"variant", variant}});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BackendUnavailable) throw;
      throw Error(ErrorCode::EditorFailure, e.what());
    }
    try {
      return decode_image(base64_decode(reply_field<std::string>(reply, "image", client_)));
    } catch (const Error& e) {
      throw Error(ErrorCode::EditorFailure, fmt::format("{}: {}", client_.endpoint().name, e.what()));
    }
  }

 private:
  RemoteClient client_;
};

}  // namespace

std::shared_ptr<FaceEmbedder> make_remote_embedder(RemoteEndpoint e) {
  return std::make_shared<RemoteEmbedder>(std::move(e));
}
std::shared_ptr<FaceLocalizer> make_remote_localizer(RemoteEndpoint e) {
  return std::make_shared<RemoteLocalizer>(std::move(e));
}
std::shared_ptr<PerceptualMetric> make_remote_perceptual(RemoteEndpoint e) {
  return std::make_shared<RemotePerceptual>(std::move(e));
}
std::shared_ptr<VisionJudge> make_remote_judge(RemoteEndpoint e) {
  return std::make_shared<RemoteJudge>(std::move(e));
}
std::shared_ptr<ExpressionClassifier> make_remote_classifier(RemoteEndpoint e, bool supports_coarse) {
  return std::make_shared<RemoteClassifier>(std::move(e), supports_coarse);
}
std::shared_ptr<ImageEditor> make_remote_editor(RemoteEndpoint e) {
  return std::make_shared<RemoteEditor>(std::move(e));
}

}  // namespace fed::backends
