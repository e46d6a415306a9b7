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

// Download time as a function of chunk size.

#ifndef HYPERFUSE_CHUNKSTORE_BENCH_H_
#define HYPERFUSE_CHUNKSTORE_BENCH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hyperfuse/chunkstore/node.h"

namespace hyperfuse::chunkstore {

// 4K, 16K, 32K, 64K, 128K, 1M, 10M, 100M.
std::vector<std::size_t> default_chunk_sizes();

struct BenchOptions {
  std::vector<std::size_t> chunk_sizes = default_chunk_sizes();
  std::size_t trials = 10;
  std::size_t replication = 2;
  std::uint64_t seed = 0;
  // Run on the downloaded bytes inside the timed region, e.g. a cube decode.
  std::function<void(ByteSpan)> parse;
};

struct BenchResult {
  std::size_t chunk_size = 0;
  std::size_t chunk_count = 0;
  std::vector<double> trials;  // seconds
  double mean_s = 0;
  double std_s = 0;  // sample (n - 1); 0 for a single trial
};

struct BenchReport {
  std::vector<BenchResult> results;
  double overall_std_s = 0;  // sample std over every trial of every size
  std::size_t best_chunk_size = 0;  // argmin of mean_s, first on ties
};

double mean_of(const std::vector<double>& v);
double sample_std_of(const std::vector<double>& v);

// For each chunk size: put once, time `trials` full get() passes (each
// verified against the input outside the timed region), then delete.
// Trials run strictly one after another.
BenchReport bench_download(ByteSpan data, const BenchOptions& opts, NodeRegistry& registry);

// `chunk_size_bytes,trial,seconds` rows (trials numbered from 1), then per
// size `<size>,mean,<s>` and `<size>,std,<s>`, then `all,std,<s>` and
// `<best size>,argmin_mean,<s>`. Leading `#` lines carry `notes`.
std::string format_bench_csv(const BenchReport& report, const std::vector<std::string>& notes);
void write_bench_csv(const BenchReport& report, const std::vector<std::string>& notes,
                     const std::filesystem::path& path);

}  // namespace hyperfuse::chunkstore

#endif  // HYPERFUSE_CHUNKSTORE_BENCH_H_
