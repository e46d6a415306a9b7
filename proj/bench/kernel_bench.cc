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


// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "hyperfuse/datacube.h"
#include "hyperfuse/fusion.h"
#include "hyperfuse/lstm.h"
#include "hyperfuse/metrics.h"
#include "hyperfuse/simulate.h"

namespace {

using namespace hyperfuse;

const HyperCube& scene() {
  static const HyperCube cube = simulate::synthetic_smooth_cube(128, 128, 32, 0);
  return cube;
}

void BM_DecimateSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(simulate::decimate_serial(scene(), 4));
}
BENCHMARK(BM_DecimateSerial);

void BM_DecimateParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(simulate::decimate(scene(), 4));
}
BENCHMARK(BM_DecimateParallel);

void BM_EvaluateSerial(benchmark::State& state) {
  const HyperCube other = simulate::synthetic_smooth_cube(128, 128, 32, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(metrics::evaluate_cube_serial(other, scene(), metrics::SsimConfig{}));
}
BENCHMARK(BM_EvaluateSerial);

void BM_EvaluateParallel(benchmark::State& state) {
  const HyperCube other = simulate::synthetic_smooth_cube(128, 128, 32, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(metrics::evaluate_cube(other, scene(), metrics::SsimConfig{}));
}
BENCHMARK(BM_EvaluateParallel);

struct EnhanceInputs {
  HyperCube stack;
  lstm::LstmParams params;
  std::vector<std::size_t> sizes = {8, 6, 4, 2};
};

const EnhanceInputs& enhance_inputs() {
  static const EnhanceInputs in = [] {
    EnhanceInputs e;
    HyperCube lo = simulate::decimate(scene(), 4);
    HyperCube msi = simulate::synthesize_msi(scene(), simulate::default_msi_ranges());
    e.stack = fusion::build_input_stack(lo, msi, 4);
    e.params = lstm::init_params(8, 8 * 8 * e.stack.bands(), 64, 0);
    return e;
  }();
  return in;
}

void BM_EnhanceSerial(benchmark::State& state) {
  const auto& in = enhance_inputs();
  for (auto _ : state)
    benchmark::DoNotOptimize(fusion::enhance_serial(in.stack, in.params, in.sizes, 4));
}
BENCHMARK(BM_EnhanceSerial);

void BM_EnhanceParallel(benchmark::State& state) {
  const auto& in = enhance_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(fusion::enhance(in.stack, in.params, in.sizes, 4));
}
BENCHMARK(BM_EnhanceParallel);

}  // namespace

BENCHMARK_MAIN();
