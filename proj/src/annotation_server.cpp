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

#include <httplib.h>

#include <random>

#include <fmt/format.h>

#include "fed/annotation.hpp"
#include "fed/error.hpp"
#include "fed/hashing.hpp"
#include "fed/image.hpp"
#include "json_util.hpp"

namespace fed::annotation {

namespace fs = std::filesystem;
using detail::json;
using fed::to_string;
using study::to_string;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownTask:
    case ErrorCode::MissingFile:
    case ErrorCode::MissingImage: return 404;
    case ErrorCode::UnknownAnnotator: return 403;
    case ErrorCode::DuplicateVote:
    case ErrorCode::TaskClosed:
    case ErrorCode::PendingTasks: return 409;
    case ErrorCode::MalformedRecord:
    case ErrorCode::UsageError:
    case ErrorCode::UnknownLabel: return 400;
    case ErrorCode::InvariantViolation:
    case ErrorCode::PreconditionViolation: return 422;
    default: return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  send_json(res, status, json{{"error", code}, {"message", message}});
}

std::string_view perspective_prompt(study::Perspective p) {
  switch (p) {
    case study::Perspective::identity: return "Which edit better preserves the identity of the person?";
    case study::Perspective::magnitude: return "Which edit changes the expression by a more appropriate amount?";
    case study::Perspective::overall: return "Which edit is better overall?";
  }
  return "";
}

json progress_json(const Progress& p) {
  return json{{"verification_total", p.verification_total}, {"verification_closed", p.verification_closed},
              {"accepted", p.accepted},                     {"rejected", p.rejected},
              {"unresolved", p.unresolved},                 {"pairwise_total", p.pairwise_total},
              {"pairwise_closed", p.pairwise_closed},       {"votes", p.votes}};
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationStore& store;
  ServerOptions options;
  httplib::Server server;
  std::mutex tokens_mutex;
  std::map<std::string, fs::path> tokens;

  Impl(AnnotationStore& s, ServerOptions o) : store(s), options(std::move(o)) {
    if (options.token_secret.empty()) {
      std::random_device rd;
      options.token_secret = fmt::format("{:08x}{:08x}{:08x}{:08x}", rd(), rd(), rd(), rd());
    }
    routes();
  }

  std::string token_for(const std::string& unit_id, std::string_view role, const std::string& relative) {
    const std::string token = sha256_hex(fmt::format("{}|{}|{}", options.token_secret, unit_id, role)).substr(0, 32);
    std::lock_guard lock(tokens_mutex);
    tokens[token] = store.data_dir() / relative;
    return token;
  }

  std::string image_url(const std::string& unit_id, std::string_view role, const std::string& relative) {
    return "/api/image/" + token_for(unit_id, role, relative);
  }

  json task_json(const NextTask& t) {
    json j{{"kind", to_string(t.kind)}, {"votes", t.votes}, {"progress", progress_json(store.progress())}};
    if (t.kind == TaskKind::verification) {
      const auto& v = *t.verification;
      j["task_id"] = v.task_id;
      j["trg_emotion"] = to_string(v.trg_emotion);
      j["instruction"] = v.instruction;
      j["source_url"] = image_url(t.unit_id, "source", v.source.path);
      json candidates = json::array();
      json choices = json::array();
      for (std::size_t i = 0; i < v.candidates.size(); ++i) {
        const std::string label = fmt::format("candidate_{}", i + 1);
        candidates.push_back({{"choice", label},
                              {"url", image_url(t.unit_id, label, v.candidates[i].image.path)},
                              {"caption", v.candidates[i].reference_caption}});
        choices.push_back(label);
      }
      choices.push_back("reject_both");
      j["candidates"] = std::move(candidates);
      j["choices"] = std::move(choices);
    } else {
      const auto& p = *t.pair;
      j["pair_id"] = p.pair_id;
      j["perspective"] = to_string(t.perspective);
      j["prompt"] = perspective_prompt(t.perspective);
      j["left_url"] = image_url(t.unit_id, "left", p.left.edited->path);
      j["right_url"] = image_url(t.unit_id, "right", p.right.edited->path);
      j["choices"] = json::array({"left", "right"});
    }
    return j;
  }

  template <class Fn>
  void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "MalformedRecord", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what());
    }
  }

  void routes() {
    server.Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string annotator = req.get_param_value("annotator");
        if (annotator.empty()) throw Error(ErrorCode::UsageError, "query parameter 'annotator' is required");
        const std::string kind_text = req.has_param("kind") ? req.get_param_value("kind") : "verification";
        const auto next = store.next_task(annotator, parse_task_kind(kind_text));
        send_json(res, 200, json{{"task", next ? task_json(*next) : json(nullptr)}});
      });
    });

    server.Post("/api/votes", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = detail::parse_object(req.body);
        const std::string kind = detail::field<std::string>(body, "kind");
        Ack ack;
        if (parse_task_kind(kind) == TaskKind::verification) {
          detail::check_keys(body, {"kind", "task_id", "annotator_id", "choice"}, "verification vote");
          VerificationVote v;
          v.task_id = detail::field<std::string>(body, "task_id");
          v.annotator_id = detail::field<std::string>(body, "annotator_id");
          v.choice = parse_verification_choice(detail::field<std::string>(body, "choice"));
          ack = store.record_vote(std::move(v));
        } else {
          detail::check_keys(body, {"kind", "pair_id", "perspective", "annotator_id", "choice"}, "pairwise vote");
          study::PreferenceVote v;
          v.pair_id = detail::field<std::string>(body, "pair_id");
          v.annotator_id = detail::field<std::string>(body, "annotator_id");
          v.perspective = study::parse_perspective(detail::field<std::string>(body, "perspective"));
          v.choice = study::parse_choice(detail::field<std::string>(body, "choice"));
          ack = store.record_vote(std::move(v));
        }
        send_json(res, 200, json{{"ok", true}, {"unit_id", ack.unit_id}, {"votes", ack.votes},
                                 {"closed", ack.closed}, {"duplicate", ack.duplicate}});
      });
    });

    server.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, progress_json(store.progress())); });
    });

    server.Get(R"(/api/image/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        fs::path path;
        {
          std::lock_guard lock(tokens_mutex);
          const auto it = tokens.find(req.matches[1].str());
          if (it == tokens.end()) throw Error(ErrorCode::MissingImage, "unknown image token");
          path = it->second;
        }
        const std::string bytes = read_file_bytes(path.string());
        if (bytes.starts_with("\x89PNG")) {
          res.set_content(bytes, "image/png");
        } else {
          res.set_content(encode_png(decode_image(bytes)), "image/png");
        }
        res.set_header("Cache-Control", "no-store");
      });
    });

    server.Post("/api/export", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = req.body.empty() ? json::object() : detail::parse_object(req.body);
        detail::check_keys(body, {"out", "partial", "exclude"}, "export request");
        const fs::path out = detail::optional_field<std::string>(body, "out").value_or("verified.jsonl");
        if (out.empty() || out.is_absolute() || std::any_of(out.begin(), out.end(), [](const fs::path& p) { return p == ".."; })) {
          throw Error(ErrorCode::UsageError, "'out' must be a relative path inside the data directory");
        }
        const bool partial = detail::optional_field<bool>(body, "partial").value_or(false);
        const auto exclude_list = detail::optional_field<std::vector<std::string>>(body, "exclude").value_or(std::vector<std::string>{});
        const auto summary = store.export_verified(store.data_dir() / out, partial,
                                                   std::set<std::string>(exclude_list.begin(), exclude_list.end()));
        std::size_t dropped = 0;
        for (const auto& a : summary.audit) dropped += a.action == pipeline::AuditAction::drop;
        send_json(res, 200, json{{"manifest", out.generic_string()}, {"samples", summary.samples.size()}, {"excluded", dropped}});
      });
    });

    if (options.static_dir) server.set_mount_point("/", options.static_dir->string());
  }
};

AnnotationServer::AnnotationServer(AnnotationStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind_any_port(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  return port < 0 ? 0 : port;
}

bool AnnotationServer::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }

bool AnnotationServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_) impl_->server.stop();
}

void AnnotationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace fed::annotation
