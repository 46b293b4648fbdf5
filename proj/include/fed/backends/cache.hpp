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
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "fed/backends/interfaces.hpp"

namespace fed::backends {

/// On-disk content-addressed store for backend call results.
///
/// Layout: `<root>/<backend-kind>/<key[0:2]>/<key>`. Each entry is a one-line header
/// `fedcache1 <sha256(payload)> <payload size>` followed by the payload bytes. Entries whose
/// checksum does not verify are evicted and recomputed.
class CallCache {
 public:
  struct Stats {
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::size_t corrupt = 0;
  };

  explicit CallCache(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// digest(kind, name, version, op, ordered input hashes, prompt hash if any).
  static std::string make_key(const BackendId& backend, std::string_view op,
                              std::span<const std::string> input_hashes,
                              std::optional<std::string_view> prompt = std::nullopt);

  std::filesystem::path entry_path(BackendKind kind, const std::string& key) const;

  /// Verified payload or nullopt. A corrupt entry is deleted and counted.
  std::optional<std::string> lookup(BackendKind kind, const std::string& key);
  void store(BackendKind kind, const std::string& key, std::string_view payload);

  /// Returns the cached payload for the key, or runs `compute` once (per-key lock) and stores
  /// its result. When `accept` rejects a fresh payload it is returned but not stored.
  std::string get_or_compute(const BackendId& backend, std::string_view op,
                             std::span<const std::string> input_hashes,
                             std::optional<std::string_view> prompt,
                             const std::function<std::string()>& compute,
                             const std::function<bool(std::string_view)>& accept = {});

  Stats stats() const;

 private:
  std::shared_ptr<std::mutex> key_lock(const std::string& key);

  std::filesystem::path root_;
  std::mutex locks_mutex_;
  std::unordered_map<std::string, std::weak_ptr<std::mutex>> locks_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> corrupt_{0};
};

}  // namespace fed::backends
