// Copyright (c) 2026 The Hyperfuse Authors. All Rights Reserved
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HYPERFUSE_CLI_H_
#define HYPERFUSE_CLI_H_

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace hyperfuse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsageError = 2;

// Runs one command line (without the program name). Summary lines go to
// `out` as `metric=<name> value=<v>`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// `path` interpreted relative to `out_dir` (absolute paths must already lie
// inside it). Throws UsageError when the result would escape out_dir.
std::filesystem::path resolve_output(const std::filesystem::path& out_dir,
                                     const std::string& path);

}  // namespace hyperfuse::cli

#endif  // HYPERFUSE_CLI_H_
