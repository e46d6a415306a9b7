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


#include "hyperfuse/chunkstore/bench.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hyperfuse/chunkstore/store.h"
#include "hyperfuse/error.h"
#include "hyperfuse/metrics.h"

namespace hyperfuse::chunkstore {

std::vector<std::size_t> default_chunk_sizes() {
  return {4096, 16384, 32768, 65536, 131072, 1048576, 10485760, 104857600};
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean_of(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

BenchReport bench_download(ByteSpan data, const BenchOptions& opts, NodeRegistry& registry) {
  if (opts.trials == 0) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  if (data.empty()) throw Error(ErrorCode::kInvalidArgument, "benchmark file is empty");
  if (opts.chunk_sizes.empty()) throw Error(ErrorCode::kInvalidArgument, "no chunk sizes");

  using Clock = std::chrono::steady_clock;
  BenchReport report;
  std::vector<double> all;
  for (std::size_t chunk_size : opts.chunk_sizes) {
    PutOptions put_opts{chunk_size, opts.replication, opts.seed};
    const ChunkManifest manifest = put("bench.bin", data, put_opts, registry);
    BenchResult r;
    r.chunk_size = chunk_size;
    r.chunk_count = manifest.chunks.size();
    for (std::size_t t = 0; t < opts.trials; ++t) {
      const auto t0 = Clock::now();
      std::vector<std::uint8_t> bytes = get(manifest, registry);
      if (opts.parse) opts.parse(bytes);
      const auto t1 = Clock::now();
      if (!std::equal(bytes.begin(), bytes.end(), data.begin(), data.end())) {
        throw Error(ErrorCode::kChecksumMismatch,
                    "download at chunk size " + std::to_string(chunk_size) + " differs");
      }
      r.trials.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    remove(manifest, registry);
    r.mean_s = mean_of(r.trials);
    r.std_s = sample_std_of(r.trials);
    all.insert(all.end(), r.trials.begin(), r.trials.end());
    report.results.push_back(std::move(r));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < report.results.size(); ++i) {
    if (report.results[i].mean_s < report.results[best].mean_s) best = i;
  }
  report.best_chunk_size = report.results[best].chunk_size;
  report.overall_std_s = sample_std_of(all);
  return report;
}

std::string format_bench_csv(const BenchReport& report, const std::vector<std::string>& notes) {
  using metrics::format_number;
  std::ostringstream out;
  for (const auto& n : notes) out << "# " << n << '\n';
  out << "chunk_size_bytes,trial,seconds\n";
  double best_mean = 0;
  for (const auto& r : report.results) {
    for (std::size_t t = 0; t < r.trials.size(); ++t) {
      out << r.chunk_size << ',' << t + 1 << ',' << format_number(r.trials[t]) << '\n';
    }
    out << r.chunk_size << ",mean," << format_number(r.mean_s) << '\n';
    out << r.chunk_size << ",std," << format_number(r.std_s) << '\n';
    if (r.chunk_size == report.best_chunk_size) best_mean = r.mean_s;
  }
  out << "all,std," << format_number(report.overall_std_s) << '\n';
  out << report.best_chunk_size << ",argmin_mean," << format_number(best_mean) << '\n';
  return out.str();
}

void write_bench_csv(const BenchReport& report, const std::vector<std::string>& notes,
                     const std::filesystem::path& path) {
  const std::string text = format_bench_csv(report, notes);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open for writing: " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace hyperfuse::chunkstore
