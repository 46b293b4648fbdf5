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

#include <filesystem>
#include <fstream>
#include <mutex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "fed/datamodel.hpp"
#include "fed/error.hpp"
#include "fed/hashing.hpp"

namespace fed {

/// A type that round-trips through one line of a line-record manifest.
template <class T>
concept LineRecord = requires(const T& record, std::string_view line, T& out) {
  { to_record_line(record) } -> std::convertible_to<std::string>;
  from_record_line(line, out);
  validate(record);
};

/// Reads every record of a line-delimited manifest, validating each one in order.
/// Blank lines are skipped. Throws MissingFile, MalformedRecord (with the line number)
/// or InvariantViolation.
template <LineRecord T>
std::vector<T> load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, fmt::format("cannot open '{}'", path.string()));
  std::vector<T> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    T record;
    try {
      from_record_line(line, record);
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRecord,
                  fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    validate(record);
    records.push_back(std::move(record));
  }
  return records;
}

template <LineRecord T>
std::string render_records(std::span<const T> records) {
  std::string out;
  for (const auto& record : records) {
    out += to_record_line(record);
    out += '\n';
  }
  return out;
}

/// Writes the whole manifest atomically. Records are validated first. Throws WriteFailure.
template <LineRecord T>
void save_records(std::span<const T> records, const std::filesystem::path& path) {
  for (const auto& record : records) validate(record);
  write_file_atomic(path.string(), render_records(records));
}

template <LineRecord T>
void save_records(const std::vector<T>& records, const std::filesystem::path& path) {
  save_records(std::span<const T>(records), path);
}

/// Single-writer append of one record line.
template <LineRecord T>
void append_record(const T& record, const std::filesystem::path& path) {
  validate(record);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::WriteFailure, fmt::format("cannot append to '{}'", path.string()));
  out << to_record_line(record) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::WriteFailure, fmt::format("short append to '{}'", path.string()));
}

enum class ManifestKind { benchmark, results, scorecards };

using ManifestRecords =
    std::variant<std::vector<BenchmarkSample>, std::vector<EditResult>, std::vector<ScoreCard>>;

ManifestRecords load_manifest(const std::filesystem::path& path, ManifestKind kind);

/// Rejects results whose sample_id has no benchmark entry. Throws InvariantViolation.
void check_results_against(std::span<const BenchmarkSample> benchmark,
                           std::span<const EditResult> results);

/// Checks that every referenced image exists and matches its hash and size.
/// Returns one message per problem; empty means the manifest is consistent on disk.
std::vector<std::string> verify_benchmark_files(std::span<const BenchmarkSample> benchmark,
                                                const std::filesystem::path& root);

}  // namespace fed
