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

#include "fed/backends/cache.hpp"

#include <fmt/format.h>

#include "fed/error.hpp"
#include "fed/hashing.hpp"

namespace fed::backends {

namespace fs = std::filesystem;

namespace {
constexpr std::string_view kMagic = "fedcache1";
}

CallCache::CallCache(fs::path root) : root_(std::move(root)) {}

std::string CallCache::make_key(const BackendId& backend, std::string_view op,
                                std::span<const std::string> input_hashes,
                                std::optional<std::string_view> prompt) {
  // Length-prefixed fields.
  std::string material;
  auto add = [&material](std::string_view part) {
    material += std::to_string(part.size());
    material += ':';
    material += part;
    material += ';';
  };
  add(to_string(backend.kind));
  add(backend.name);
  add(backend.version);
  add(op);
  add(std::to_string(input_hashes.size()));
  for (const auto& h : input_hashes) add(h);
  add(prompt ? sha256_hex(*prompt) : std::string("-"));
  return sha256_hex(material);
}

fs::path CallCache::entry_path(BackendKind kind, const std::string& key) const {
  return root_ / std::string(to_string(kind)) / key.substr(0, 2) / key;
}

std::optional<std::string> CallCache::lookup(BackendKind kind, const std::string& key) {
  const fs::path path = entry_path(kind, key);
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  std::string bytes;
  try {
    bytes = read_file_bytes(path.string());
  } catch (const Error&) {
    return std::nullopt;
  }
  const auto newline = bytes.find('\n');
  bool valid = false;
  std::string payload;
  if (newline != std::string::npos) {
    const std::string header = bytes.substr(0, newline);
    payload = bytes.substr(newline + 1);
    const std::string expected =
        fmt::format("{} {} {}", kMagic, sha256_hex(payload), payload.size());
    valid = header == expected;
  }
  if (!valid) {
    ++corrupt_;
    fs::remove(path, ec);
    return std::nullopt;
  }
  return payload;
}

void CallCache::store(BackendKind kind, const std::string& key, std::string_view payload) {
  std::string bytes = fmt::format("{} {} {}\n", kMagic, sha256_hex(payload), payload.size());
  bytes.append(payload);
  write_file_atomic(entry_path(kind, key).string(), bytes);
}

std::shared_ptr<std::mutex> CallCache::key_lock(const std::string& key) {
  std::lock_guard guard(locks_mutex_);
  auto& slot = locks_[key];
  auto lock = slot.lock();
  if (!lock) {
    lock = std::make_shared<std::mutex>();
    slot = lock;
  }
  return lock;
}

std::string CallCache::get_or_compute(const BackendId& backend, std::string_view op,
                                      std::span<const std::string> input_hashes,
                                      std::optional<std::string_view> prompt,
                                      const std::function<std::string()>& compute,
                                      const std::function<bool(std::string_view)>& accept) {
  const std::string key = make_key(backend, op, input_hashes, prompt);
  const auto lock = key_lock(key);
  std::lock_guard guard(*lock);
  if (auto hit = lookup(backend.kind, key)) {
    ++hits_;
    return *std::move(hit);
  }
  ++misses_;
  std::string payload = compute();
  if (!accept || accept(payload)) store(backend.kind, key, payload);
  return payload;
}

CallCache::Stats CallCache::stats() const {
  return Stats{hits_.load(), misses_.load(), corrupt_.load()};
}

}  // namespace fed::backends
