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
#include <cstddef>
#include <functional>

namespace fed {

/// Process-wide stop request (set from the SIGINT handler). Workers stop taking new items.
std::atomic<bool>& stop_requested();

/// Runs fn(0..n-1) over at most `workers` threads. Items are claimed in index order; once
/// stop_requested() is set no new item starts. The first exception thrown by `fn` is
/// rethrown after all workers have joined. Returns the number of items that ran.
std::size_t parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace fed
