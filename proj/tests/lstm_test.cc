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


#include <doctest.h>

#include <bit>
#include <fstream>
#include <sstream>

#include "hyperfuse/error.h"
#include "hyperfuse/lstm.h"
#include "hyperfuse/rng.h"
#include "support/lstm_oracle.h"
#include "support/temp_dir.h"

using namespace hyperfuse;
using namespace hyperfuse::lstm;
using testing_support::TempDir;

namespace {

std::vector<Vector> random_sequence(std::size_t len, std::size_t width, Rng& rng) {
  std::vector<Vector> seq;
  for (std::size_t t = 0; t < len; ++t) {
    Vector x(static_cast<Eigen::Index>(width));
    for (auto& v : x) v = rng.uniform(-1, 1);
    seq.push_back(x);
  }
  return seq;
}

std::vector<std::vector<double>> to_plain(const std::vector<Vector>& seq) {
  std::vector<std::vector<double>> out;
  for (const auto& x : seq) out.emplace_back(x.data(), x.data() + x.size());
  return out;
}

// Random weights large enough that every gate is far from trivial.
LstmParams random_params(std::size_t h, std::size_t in, std::size_t out, Rng& rng) {
  LstmParams p(h, in, out);
  p.for_each_tensor([&](double* d, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) d[k] = rng.uniform(-0.8, 0.8);
  });
  return p;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kUsageError;
}

}  // namespace

TEST_CASE("forward matches the scalar oracle") {
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    LstmParams p = random_params(4, 3, 2, rng);
    auto seq = random_sequence(5, 3, rng);
    Vector y = forward(p, seq).output;
    auto expect = oracle::lstm_forward(p, to_plain(seq));
    REQUIRE(y.size() == 2);
    for (int k = 0; k < 2; ++k) CHECK(y[k] == doctest::Approx(expect[k]).epsilon(1e-12));
    CHECK(predict(p, seq) == y);
  }
}

TEST_CASE("single step by hand") {
  // One hidden unit, one input, all weights zero except a few.
  LstmParams p(1, 1, 1);
  p.gates[kForget].b(0) = 1.0;
  p.gates[kInput].U(0, 0) = 2.0;
  p.gates[kCandidate].U(0, 0) = 1.0;
  p.gates[kOutput].b(0) = -1.0;
  p.V(0, 0) = 3.0;
  p.bv(0) = 0.5;
  Vector x(1);
  x << 0.5;
  const double i = 1 / (1 + std::exp(-1.0));
  const double g = std::tanh(0.5);
  const double c = i * g;  // previous c is zero
  const double o = 1 / (1 + std::exp(1.0));
  const double h = std::tanh(c) * o;
  StepResult r = step(p, LstmState::zeros(1), x);
  CHECK(r.state.c[0] == doctest::Approx(c));
  CHECK(r.state.h[0] == doctest::Approx(h));
  CHECK(r.output[0] == doctest::Approx(3 * h + 0.5));
}

TEST_CASE("BPTT gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    LstmParams p = random_params(3, 2, 2, rng);
    auto seq = random_sequence(4, 2, rng);
    Vector target(2);
    target << rng.uniform(-1, 1), rng.uniform(-1, 1);
    auto gc = oracle::check_gradients(p, seq, target);
    CHECK(gc.checked == p.parameter_count());
    CHECK(gc.worst_rel <= 1e-4);
  }
}

TEST_CASE("gradients of a longer sequence with a wide readout") {
  Rng rng(7);
  LstmParams p = random_params(5, 6, 4, rng);
  auto seq = random_sequence(7, 6, rng);
  Vector target = Vector::Zero(4);
  CHECK(oracle::check_gradients(p, seq, target).worst_rel <= 1e-4);
}

TEST_CASE("accumulate_backward sums per-sample gradients") {
  Rng rng(8);
  LstmParams p = random_params(3, 2, 1, rng);
  auto s1 = random_sequence(3, 2, rng);
  auto s2 = random_sequence(2, 2, rng);
  Vector g1(1), g2(1);
  g1 << 0.7;
  g2 << -1.3;
  auto f1 = forward(p, s1);
  auto f2 = forward(p, s2);
  LstmParams acc(3, 2, 1);
  accumulate_backward(p, f1.cache, g1, acc);
  accumulate_backward(p, f2.cache, g2, acc);
  LstmParams a = backward(p, f1.cache, g1);
  LstmParams b = backward(p, f2.cache, g2);
  std::vector<double> sum, got;
  a.for_each_tensor([&](const double* d, std::size_t n) { sum.insert(sum.end(), d, d + n); });
  std::size_t k = 0;
  b.for_each_tensor([&](const double* d, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) sum[k++] += d[j];
  });
  acc.for_each_tensor([&](const double* d, std::size_t n) { got.insert(got.end(), d, d + n); });
  REQUIRE(got.size() == sum.size());
  for (std::size_t j = 0; j < got.size(); ++j) CHECK(got[j] == doctest::Approx(sum[j]));
}

TEST_CASE("init is seeded, bounded and sets the forget bias") {
  LstmParams a = init_params(4, 6, 3, 9);
  LstmParams b = init_params(4, 6, 3, 9);
  LstmParams c = init_params(4, 6, 3, 10);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  const double gate_bound = 1 / std::sqrt(10.0);
  for (std::size_t g = 0; g < 4; ++g) {
    CHECK(a.gates[g].U.cwiseAbs().maxCoeff() <= gate_bound);
    CHECK(a.gates[g].W.cwiseAbs().maxCoeff() <= gate_bound);
    const double bias = g == kForget ? 1.0 : 0.0;
    for (auto v : a.gates[g].b) CHECK(v == bias);
  }
  CHECK(a.V.cwiseAbs().maxCoeff() <= 1 / std::sqrt(4.0));
  CHECK(a.bv.isZero());
  CHECK(a.parameter_count() == 4 * (4 * 6 + 4 * 4 + 4) + 3 * 4 + 3);
}

TEST_CASE("sgd update and gradient clipping") {
  Rng rng(11);
  LstmParams p = random_params(2, 2, 1, rng);
  LstmParams g = random_params(2, 2, 1, rng);
  LstmParams q = sgd_update(p, g, 0.1);
  CHECK(q.V(0, 1) == doctest::Approx(p.V(0, 1) - 0.1 * g.V(0, 1)));
  CHECK(sgd_update(p, g, 0.0) == p);
  CHECK_THROWS_AS(sgd_update(p, g, -1.0), Error);

  const double n = global_norm(g);
  LstmParams clipped = g;
  clip_global_norm(clipped, n / 2);
  CHECK(global_norm(clipped) == doctest::Approx(n / 2));
  LstmParams untouched = g;
  clip_global_norm(untouched, 2 * n);
  CHECK(untouched == g);
}

TEST_CASE("shape errors") {
  LstmParams p = init_params(3, 2, 1, 1);
  Vector wrong(3);
  wrong.setZero();
  CHECK(code_of([&] { forward(p, {wrong}); }) == ErrorCode::kShapeMismatch);
  CHECK(code_of([&] { forward(p, {}); }) == ErrorCode::kEmptySequence);
  CHECK(code_of([&] { predict(p, {}); }) == ErrorCode::kEmptySequence);
  auto fwd = forward(p, {Vector::Zero(2)});
  CHECK(code_of([&] { backward(init_params(4, 2, 1, 1), fwd.cache, Vector::Zero(1)); }) ==
        ErrorCode::kCacheMismatch);
  CHECK_THROWS_AS(init_params(0, 2, 1, 1), Error);
}

TEST_CASE("checkpoint round-trip is exact and the layout is documented") {
  TempDir tmp;
  Rng rng(12);
  LstmParams p = random_params(3, 4, 2, rng);
  save_checkpoint(p, tmp / "m.ckpt");
  LstmParams q = load_checkpoint(tmp / "m.ckpt");
  CHECK(q == p);

  std::ifstream in(tmp / "m.ckpt", std::ios::binary);
  std::string header;
  std::getline(in, header);
  CHECK(header == "lstm-ckpt v1 hidden=3 input=4 output=2");
  CHECK(checkpoint_header(p) == header + "\n");
  CHECK(std::filesystem::file_size(tmp / "m.ckpt") == header.size() + 1 + 8 * p.parameter_count());
  // First double is U_f(0, 0).
  unsigned char raw[8];
  in.read(reinterpret_cast<char*>(raw), 8);
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(raw[k]) << (8 * k);
  CHECK(std::bit_cast<double>(bits) == p.gates[kForget].U(0, 0));
}

TEST_CASE("corrupt checkpoints are rejected") {
  TempDir tmp;
  LstmParams p = init_params(2, 2, 1, 3);
  save_checkpoint(p, tmp / "m.ckpt");
  const auto size = std::filesystem::file_size(tmp / "m.ckpt");
  std::filesystem::resize_file(tmp / "m.ckpt", size - 1);
  CHECK_THROWS_AS(load_checkpoint(tmp / "m.ckpt"), Error);
  save_checkpoint(p, tmp / "m.ckpt");
  {
    std::ofstream app(tmp / "m.ckpt", std::ios::binary | std::ios::app);
    app << 'x';
  }
  CHECK_THROWS_AS(load_checkpoint(tmp / "m.ckpt"), Error);
  {
    std::ofstream bad(tmp / "b.ckpt", std::ios::binary);
    bad << "lstm-ckpt v2 hidden=2 input=2 output=1\n";
  }
  CHECK_THROWS_AS(load_checkpoint(tmp / "b.ckpt"), Error);
  CHECK(code_of([&] { load_checkpoint(tmp / "none.ckpt"); }) == ErrorCode::kMissingFile);
}
