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

#include "hyperfuse/lstm.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hyperfuse/error.h"
#include "hyperfuse/rng.h"

namespace hyperfuse::lstm {

namespace {

Vector sigmoid(const Vector& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Vector tanh_vec(const Vector& z) {
  return z.unaryExpr([](double v) { return std::tanh(v); });
}

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

std::string shape_string(std::size_t h, std::size_t i, std::size_t o) {
  return "hidden=" + std::to_string(h) + " input=" + std::to_string(i) +
         " output=" + std::to_string(o);
}

}  // namespace

LstmParams::LstmParams(std::size_t hidden, std::size_t input, std::size_t output) {
  for (auto& g : gates) {
    g.U = Matrix::Zero(idx(hidden), idx(input));
    g.W = Matrix::Zero(idx(hidden), idx(hidden));
    g.b = Vector::Zero(idx(hidden));
  }
  V = Matrix::Zero(idx(output), idx(hidden));
  bv = Vector::Zero(idx(output));
}

std::size_t LstmParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](const double*, std::size_t size) { n += size; });
  return n;
}

bool LstmParams::same_shape(const LstmParams& other) const {
  for (std::size_t k = 0; k < gates.size(); ++k) {
    const auto& a = gates[k];
    const auto& b = other.gates[k];
    if (a.U.rows() != b.U.rows() || a.U.cols() != b.U.cols() || a.W.rows() != b.W.rows() ||
        a.W.cols() != b.W.cols() || a.b.size() != b.b.size()) {
      return false;
    }
  }
  return V.rows() == other.V.rows() && V.cols() == other.V.cols() && bv.size() == other.bv.size();
}

bool LstmParams::all_zero() const {
  bool zero = true;
  for_each_tensor([&](const double* p, std::size_t n) {
    for (std::size_t k = 0; k < n && zero; ++k) zero = p[k] == 0.0;
  });
  return zero;
}

bool LstmParams::all_finite() const {
  bool finite = true;
  for_each_tensor([&](const double* p, std::size_t n) {
    for (std::size_t k = 0; k < n && finite; ++k) finite = std::isfinite(p[k]);
  });
  return finite;
}

void LstmParams::for_each_tensor(const std::function<void(double*, std::size_t)>& fn) {
  for (auto& g : gates) {
    fn(g.U.data(), static_cast<std::size_t>(g.U.size()));
    fn(g.W.data(), static_cast<std::size_t>(g.W.size()));
    fn(g.b.data(), static_cast<std::size_t>(g.b.size()));
  }
  fn(V.data(), static_cast<std::size_t>(V.size()));
  fn(bv.data(), static_cast<std::size_t>(bv.size()));
}

void LstmParams::for_each_tensor(
    const std::function<void(const double*, std::size_t)>& fn) const {
  for (const auto& g : gates) {
    fn(g.U.data(), static_cast<std::size_t>(g.U.size()));
    fn(g.W.data(), static_cast<std::size_t>(g.W.size()));
    fn(g.b.data(), static_cast<std::size_t>(g.b.size()));
  }
  fn(V.data(), static_cast<std::size_t>(V.size()));
  fn(bv.data(), static_cast<std::size_t>(bv.size()));
}

bool LstmParams::operator==(const LstmParams& other) const {
  if (!same_shape(other)) return false;
  std::vector<const double*> mine;
  std::vector<std::size_t> sizes;
  for_each_tensor([&](const double* p, std::size_t n) {
    mine.push_back(p);
    sizes.push_back(n);
  });
  std::size_t k = 0;
  bool equal = true;
  other.for_each_tensor([&](const double* p, std::size_t n) {
    if (equal && n > 0) equal = std::memcmp(mine[k], p, n * sizeof(double)) == 0;
    ++k;
  });
  return equal;
}

LstmParams init_params(std::size_t hidden, std::size_t input, std::size_t output,
                       std::uint64_t seed) {
  if (hidden == 0 || input == 0 || output == 0) {
    throw Error(ErrorCode::kInvalidArgument, "LSTM dims must be > 0");
  }
  LstmParams p(hidden, input, output);
  Rng rng(seed);
  const double gate_scale = 1.0 / std::sqrt(static_cast<double>(input + hidden));
  const double readout_scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto fill = [&](auto& m, double s) {
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-s, s);
  };
  for (auto& g : p.gates) {
    fill(g.U, gate_scale);
    fill(g.W, gate_scale);
  }
  p.gates[kForget].b.setOnes();
  fill(p.V, readout_scale);
  return p;
}

StepResult step(const LstmParams& params, const LstmState& state, const Vector& x) {
  const std::size_t hidden = params.hidden();
  if (static_cast<std::size_t>(x.size()) != params.input()) {
    throw Error(ErrorCode::kShapeMismatch, "input width " + std::to_string(x.size()) +
                                               ", expected " + std::to_string(params.input()));
  }
  if (static_cast<std::size_t>(state.h.size()) != hidden ||
      static_cast<std::size_t>(state.c.size()) != hidden) {
    throw Error(ErrorCode::kShapeMismatch, "state width does not match hidden units");
  }
  auto pre = [&](Gate g) -> Vector {
    const auto& gp = params.gates[g];
    return gp.b + gp.U * x + gp.W * state.h;
  };
  StepResult r;
  StepCache& k = r.cache;
  k.x = x;
  k.h_prev = state.h;
  k.c_prev = state.c;
  k.f = sigmoid(pre(kForget));
  k.i = sigmoid(pre(kInput));
  k.g = tanh_vec(pre(kCandidate));
  k.c = k.f.cwiseProduct(state.c) + k.i.cwiseProduct(k.g);
  k.o = sigmoid(pre(kOutput));
  k.tanh_c = tanh_vec(k.c);
  k.h = k.tanh_c.cwiseProduct(k.o);
  r.state = {k.h, k.c};
  r.output = params.V * k.h + params.bv;
  return r;
}

ForwardResult forward(const LstmParams& params, const std::vector<Vector>& sequence) {
  if (sequence.empty()) throw Error(ErrorCode::kEmptySequence, "forward() on empty sequence");
  ForwardResult out;
  out.cache.hidden = params.hidden();
  out.cache.input = params.input();
  out.cache.output = params.output();
  out.cache.steps.reserve(sequence.size());
  LstmState state = LstmState::zeros(params.hidden());
  for (const auto& x : sequence) {
    StepResult r = step(params, state, x);
    state = std::move(r.state);
    out.output = std::move(r.output);
    out.cache.steps.push_back(std::move(r.cache));
  }
  return out;
}

Vector predict(const LstmParams& params, const std::vector<Vector>& sequence) {
  if (sequence.empty()) throw Error(ErrorCode::kEmptySequence, "predict() on empty sequence");
  LstmState state = LstmState::zeros(params.hidden());
  for (const auto& x : sequence) state = step(params, state, x).state;
  return params.V * state.h + params.bv;
}

void accumulate_backward(const LstmParams& params, const ForwardCache& cache,
                         const Vector& loss_grad, LstmParams& grads) {
  if (cache.steps.empty() || cache.hidden != params.hidden() ||
      cache.input != params.input() || cache.output != params.output() ||
      static_cast<std::size_t>(loss_grad.size()) != params.output()) {
    throw Error(ErrorCode::kCacheMismatch,
                "cache (" + shape_string(cache.hidden, cache.input, cache.output) +
                    ") does not match params (" +
                    shape_string(params.hidden(), params.input(), params.output()) + ")");
  }
  if (!grads.same_shape(params)) {
    throw Error(ErrorCode::kShapeMismatch, "gradient accumulator shape differs from params");
  }

  const StepCache& last = cache.steps.back();
  grads.V.noalias() += loss_grad * last.h.transpose();
  grads.bv += loss_grad;

  Vector dh = params.V.transpose() * loss_grad;
  Vector dc = Vector::Zero(idx(params.hidden()));
  for (auto it = cache.steps.rbegin(); it != cache.steps.rend(); ++it) {
    const StepCache& k = *it;
    const Vector d_o = dh.cwiseProduct(k.tanh_c);
    dc += dh.cwiseProduct(k.o).cwiseProduct(Vector::Ones(k.c.size()) - k.tanh_c.cwiseAbs2());
    const Vector d_f = dc.cwiseProduct(k.c_prev);
    const Vector d_i = dc.cwiseProduct(k.g);
    const Vector d_g = dc.cwiseProduct(k.i);

    std::array<Vector, 4> da;
    da[kForget] = d_f.cwiseProduct(k.f.cwiseProduct(Vector::Ones(k.f.size()) - k.f));
    da[kInput] = d_i.cwiseProduct(k.i.cwiseProduct(Vector::Ones(k.i.size()) - k.i));
    da[kCandidate] = d_g.cwiseProduct(Vector::Ones(k.g.size()) - k.g.cwiseAbs2());
    da[kOutput] = d_o.cwiseProduct(k.o.cwiseProduct(Vector::Ones(k.o.size()) - k.o));

    dh.setZero();
    for (std::size_t g = 0; g < 4; ++g) {
      grads.gates[g].U.noalias() += da[g] * k.x.transpose();
      grads.gates[g].W.noalias() += da[g] * k.h_prev.transpose();
      grads.gates[g].b += da[g];
      dh.noalias() += params.gates[g].W.transpose() * da[g];
    }
    dc = dc.cwiseProduct(k.f);
  }
}

LstmParams backward(const LstmParams& params, const ForwardCache& cache,
                    const Vector& loss_grad) {
  LstmParams grads(params.hidden(), params.input(), params.output());
  accumulate_backward(params, cache, loss_grad, grads);
  return grads;
}

LstmParams sgd_update(const LstmParams& params, const LstmParams& grads, double lr) {
  if (!params.same_shape(grads)) {
    throw Error(ErrorCode::kShapeMismatch, "gradient shape differs from params");
  }
  if (!(lr >= 0) || !std::isfinite(lr)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be finite and >= 0");
  }
  LstmParams out = params;
  for (std::size_t g = 0; g < 4; ++g) {
    out.gates[g].U -= lr * grads.gates[g].U;
    out.gates[g].W -= lr * grads.gates[g].W;
    out.gates[g].b -= lr * grads.gates[g].b;
  }
  out.V -= lr * grads.V;
  out.bv -= lr * grads.bv;
  return out;
}

double global_norm(const LstmParams& grads) {
  double ss = 0;
  grads.for_each_tensor([&](const double* p, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) ss += p[k] * p[k];
  });
  return std::sqrt(ss);
}

void clip_global_norm(LstmParams& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm <= max_norm || norm == 0) return;
  const double scale = max_norm / norm;
  grads.for_each_tensor([&](double* p, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) p[k] *= scale;
  });
}

std::string checkpoint_header(const LstmParams& params) {
  return "lstm-ckpt v1 " + shape_string(params.hidden(), params.input(), params.output()) + "\n";
}

void save_checkpoint(const LstmParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open for writing: " + path.string());
  std::string header = checkpoint_header(params);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  params.for_each_tensor([&](const double* p, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      auto word = std::bit_cast<std::uint64_t>(p[k]);
      if constexpr (std::endian::native == std::endian::big) word = __builtin_bswap64(word);
      out.write(reinterpret_cast<const char*>(&word), 8);
    }
  });
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

LstmParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::string header;
  std::getline(in, header);
  std::size_t hidden = 0, input = 0, output = 0;
  char trailing = 0;
  if (std::sscanf(header.c_str(), "lstm-ckpt v1 hidden=%zu input=%zu output=%zu%c", &hidden,
                  &input, &output, &trailing) != 3 ||
      hidden == 0 || input == 0 || output == 0) {
    throw Error(ErrorCode::kHeaderParseError, "bad checkpoint header '" + header + "'");
  }
  LstmParams p(hidden, input, output);
  bool short_read = false;
  p.for_each_tensor([&](double* dst, std::size_t n) {
    for (std::size_t k = 0; k < n && !short_read; ++k) {
      std::uint64_t word;
      if (!in.read(reinterpret_cast<char*>(&word), 8)) {
        short_read = true;
        break;
      }
      if constexpr (std::endian::native == std::endian::big) word = __builtin_bswap64(word);
      dst[k] = std::bit_cast<double>(word);
    }
  });
  if (short_read) {
    throw Error(ErrorCode::kPayloadSizeMismatch, "checkpoint truncated: " + path.string());
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kPayloadSizeMismatch, "trailing bytes in checkpoint " + path.string());
  }
  if (!p.all_finite()) throw Error(ErrorCode::kNonFiniteValue, "checkpoint has NaN/Inf");
  return p;
}

}  // namespace hyperfuse::lstm
