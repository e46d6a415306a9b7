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

// Single-layer LSTM with a linear readout of the last hidden state.
//
//   f  = sigmoid(b_f + U_f x + W_f h')
//   i  = sigmoid(b_i + U_i x + W_i h')
//   c~ = tanh   (b_c + U_c x + W_c h')
//   c  = f * c' + i * c~
//   o  = sigmoid(b_o + U_o x + W_o h')
//   h  = tanh(c) * o
//   y  = V h + b_v
//
// All arithmetic is in double precision.

#ifndef HYPERFUSE_LSTM_H_
#define HYPERFUSE_LSTM_H_

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace hyperfuse::lstm {

// Row-major so that raw storage order matches the checkpoint layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct GateParams {
  Matrix U;  // hidden x input
  Matrix W;  // hidden x hidden
  Vector b;  // hidden
};

enum Gate : std::size_t { kForget = 0, kInput = 1, kCandidate = 2, kOutput = 3 };

struct LstmParams {
  std::array<GateParams, 4> gates;  // indexed by Gate
  Matrix V;                         // output x hidden
  Vector bv;                        // output

  // Zero-initialised parameters of the given shape.
  LstmParams(std::size_t hidden, std::size_t input, std::size_t output);
  LstmParams() = default;

  std::size_t hidden() const { return static_cast<std::size_t>(V.cols()); }
  std::size_t input() const { return static_cast<std::size_t>(gates[0].U.cols()); }
  std::size_t output() const { return static_cast<std::size_t>(V.rows()); }
  std::size_t parameter_count() const;

  bool same_shape(const LstmParams& other) const;
  bool all_zero() const;
  bool all_finite() const;

  // Visit every tensor in checkpoint order:
  // U_f, W_f, b_f, U_i, W_i, b_i, U_c, W_c, b_c, U_o, W_o, b_o, V, b_v.
  void for_each_tensor(const std::function<void(double*, std::size_t)>& fn);
  void for_each_tensor(const std::function<void(const double*, std::size_t)>& fn) const;

  bool operator==(const LstmParams& other) const;
};

// Uniform(-s, s) weights with s = 1/sqrt(fan_in); biases zero except the
// forget bias, which starts at 1.
LstmParams init_params(std::size_t hidden, std::size_t input, std::size_t output,
                       std::uint64_t seed);

struct LstmState {
  Vector h;
  Vector c;

  static LstmState zeros(std::size_t hidden) {
    return {Vector::Zero(static_cast<Eigen::Index>(hidden)),
            Vector::Zero(static_cast<Eigen::Index>(hidden))};
  }
};

// Activations of one step, kept for backpropagation.
struct StepCache {
  Vector x;
  Vector h_prev;
  Vector c_prev;
  Vector f;
  Vector i;
  Vector g;  // candidate c~
  Vector o;
  Vector c;
  Vector tanh_c;
  Vector h;
};

struct StepResult {
  LstmState state;
  Vector output;
  StepCache cache;
};

StepResult step(const LstmParams& params, const LstmState& state, const Vector& x);

struct ForwardCache {
  std::size_t hidden = 0;
  std::size_t input = 0;
  std::size_t output = 0;
  std::vector<StepCache> steps;
};

struct ForwardResult {
  Vector output;
  ForwardCache cache;
};

// Runs the sequence from a zero state; the output is the readout of the last
// hidden state.
ForwardResult forward(const LstmParams& params, const std::vector<Vector>& sequence);

// Output only; skips building the cache.
Vector predict(const LstmParams& params, const std::vector<Vector>& sequence);

// Gradient of a scalar loss with respect to every parameter, given dL/dy.
LstmParams backward(const LstmParams& params, const ForwardCache& cache,
                    const Vector& loss_grad);
// As backward(), but adds into an existing gradient of matching shape.
void accumulate_backward(const LstmParams& params, const ForwardCache& cache,
                         const Vector& loss_grad, LstmParams& grads);

// params - lr * grads, elementwise.
LstmParams sgd_update(const LstmParams& params, const LstmParams& grads, double lr);

double global_norm(const LstmParams& grads);
// Rescales grads in place so that their global norm is at most max_norm.
void clip_global_norm(LstmParams& grads, double max_norm);

// Checkpoint: "lstm-ckpt v1 hidden=<H> input=<I> output=<O>\n" followed by
// raw little-endian doubles, tensors in for_each_tensor order, row-major.
void save_checkpoint(const LstmParams& params, const std::filesystem::path& path);
LstmParams load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_header(const LstmParams& params);

}  // namespace hyperfuse::lstm

#endif  // HYPERFUSE_LSTM_H_
