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
#include <iosfwd>
#include <string>
#include <vector>

#include "fed/config.hpp"
#include "fed/error.hpp"

namespace fed::cli {

enum ExitCode : int { kOk = 0, kWorkflowError = 1, kUsageError = 2, kConfigError = 3 };

int exit_code_for(ErrorCode code);

/// Runs `fed <subcommand> ...`. Results go to `out`; diagnostics to `err`, ending with one
/// `error: <Code>: <message>` line on failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Writes `<dir>/run.meta`: toolkit version, config hash, seed, resolved config and the
/// backends used with their determinism.
void write_run_meta(const std::filesystem::path& dir, const std::string& command, const config::ToolkitConfig& config,
                    const backends::BackendSuite& suite);

/// Every `results.*.jsonl` under `dir`, in file-name order.
std::vector<EditResult> load_results_dir(const std::filesystem::path& dir);

}  // namespace fed::cli
