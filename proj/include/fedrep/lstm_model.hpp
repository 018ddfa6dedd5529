// Copyright 2026 The FedREP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Two-layer stacked LSTM with a dense ReLU head, trained by plain SGD with
// exact backpropagation-through-time.
//
// Gate blocks are stacked in the order input (i), forget (f), output (o),
// cell candidate (g):
//
//   z_t = W x~_t + U h~_{t-1} + b           (4H rows)
//   i, f, o = sigmoid(z_i, z_f, z_o);  g = tanh(z_g)
//   c_t = f * c_{t-1} + i * g;   h_t = o * tanh(c_t)
//
// x~ and h~ are the dropout-masked input and recurrent state (masks fixed per
// sequence, scaled by 1/(1-rate)). The final hidden state of layer 2 feeds
// y = ReLU(W_d h_T + b_d). Loss is the mean squared error over the outputs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedrep/data_pipeline.hpp"

namespace fedrep::lstm {

struct ModelDims {
  std::size_t input_size = 1;
  std::size_t hidden1 = 256;
  std::size_t hidden2 = 128;
  std::size_t output_size = 5;

  std::size_t parameter_count() const;
  bool operator==(const ModelDims&) const = default;
};

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCellGate = 3 };
inline constexpr std::size_t kGates = 4;

struct LstmLayerParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::vector<double> w;  // 4H x I, gate blocks stacked row-wise
  std::vector<double> u;  // 4H x H
  std::vector<double> b;  // 4H

  LstmLayerParams() = default;
  LstmLayerParams(std::size_t in, std::size_t hidden)
      : input_size(in), hidden_size(hidden), w(kGates * hidden * in),
        u(kGates * hidden * hidden), b(kGates * hidden) {}

  std::size_t rows() const { return kGates * hidden_size; }
  bool operator==(const LstmLayerParams&) const = default;
};

// Weights and everything shaped like them. The tag keeps parameters and
// gradients from being mixed up.
template <class Tag>
struct ParamSet {
  ModelDims dims;
  LstmLayerParams layer1;
  LstmLayerParams layer2;
  std::vector<double> dense_w;  // output_size x hidden2
  std::vector<double> dense_b;  // output_size

  ParamSet() = default;
  explicit ParamSet(const ModelDims& d)
      : dims(d), layer1(d.input_size, d.hidden1), layer2(d.hidden1, d.hidden2),
        dense_w(d.output_size * d.hidden2), dense_b(d.output_size) {}

  // Visits every storage buffer in a fixed order.
  template <class F>
  void for_each_buffer(F&& f) {
    for (auto* layer : {&layer1, &layer2}) {
      f(layer->w);
      f(layer->u);
      f(layer->b);
    }
    f(dense_w);
    f(dense_b);
  }
  template <class F>
  void for_each_buffer(F&& f) const {
    for (const auto* layer : {&layer1, &layer2}) {
      f(layer->w);
      f(layer->u);
      f(layer->b);
    }
    f(dense_w);
    f(dense_b);
  }

  bool operator==(const ParamSet&) const = default;
};

using ModelParams = ParamSet<struct ParamsTag>;
using Gradients = ParamSet<struct GradientsTag>;

// Flat exchange representation. Layout: for layer 1 then layer 2, for each
// gate in (i, f, o, g) order: W_gate (H x I row-major), U_gate (H x H),
// b_gate (H); then dense W row-major; then dense b.
struct ParamVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const ParamVector&) const = default;
};

// Glorot-uniform weights per gate matrix, zero biases except forget gates
// at 1.0. Deterministic in `seed`.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

ParamVector flatten(const ModelParams& params);
ModelParams unflatten(const ParamVector& v, const ModelDims& dims);

// Little-endian binary: "FREP", u32 version, u64 count, then count f64.
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 16;
std::vector<std::uint8_t> serialize(const ParamVector& v);
ParamVector deserialize(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const ParamVector& v);
ParamVector load_checkpoint(const std::filesystem::path& path);

// Multiplicative masks with entries 0 or 1/(1-rate). Empty vectors mean no
// dropout on that connection.
struct LayerMasks {
  std::vector<double> input;
  std::vector<double> recurrent;
};

struct DropoutMasks {
  LayerMasks layer1;
  LayerMasks layer2;
};

DropoutMasks make_dropout_masks(const ModelDims& dims, double rate, std::uint64_t seed);

struct LayerCache {
  std::size_t steps = 0;
  std::vector<double> inputs;       // T x I, masked
  std::vector<double> prev_hidden;  // T x H, masked h_{t-1}
  std::vector<double> gates;        // T x 4H, post-activation
  std::vector<double> cells;        // (T+1) x H, cells[0] = 0
  std::vector<double> tanh_cells;   // T x H
  std::vector<double> hidden;       // T x H, unmasked h_t
  LayerMasks masks;
};

struct ForwardCache {
  ModelDims dims;
  LayerCache layer1;
  LayerCache layer2;
  std::vector<double> head_pre;  // dense pre-activation
  std::vector<double> prediction;
};

// `window` holds T * input_size values, time-major. Pass masks for a
// training-mode pass; nullptr runs inference. Throws NumericError on a
// non-finite activation.
ForwardCache forward(const ModelParams& params, std::span<const double> window,
                     const DropoutMasks* masks = nullptr);

std::vector<double> predict(const ModelParams& params, std::span<const double> window);

// Adds d(MSE)/d(params) for one example into `grads` and returns the loss.
double backward_accumulate(const ModelParams& params, const ForwardCache& cache,
                           std::span<const double> target, Gradients& grads);

Gradients backward(const ModelParams& params, const ForwardCache& cache,
                   std::span<const double> target);

// p' = p - eta * g. eta = 0 is allowed and returns params unchanged.
ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double eta);

struct TrainConfig {
  double learning_rate = 0.01;
  double dropout_rate = 0.2;
  std::size_t batch_size = 32;
  std::size_t local_epochs = 1;
  std::uint64_t seed = 0;
  // Index of this call's first epoch in a longer schedule; epoch e of the
  // call draws its randomness from epoch_seed(seed, epoch_offset + e).
  std::uint64_t epoch_offset = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

std::uint64_t epoch_seed(std::uint64_t seed, std::uint64_t epoch);
// Visiting order of the examples in one epoch.
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t epoch_seed);
std::uint64_t example_dropout_seed(std::uint64_t epoch_seed, std::size_t example);

struct LocalTrainResult {
  ModelParams params;
  // Mean per-example training MSE over the final epoch; with zero epochs,
  // the inference-mode MSE of the incoming params.
  double epoch_mse = 0.0;
};

// Mini-batch SGD. Each batch is the next batch_size examples of the
// epoch order; its gradient is the mean of the per-example gradients,
// accumulated in ascending example index.
LocalTrainResult local_train(const ModelParams& params,
                             const data::WindowedDataset& data,
                             const TrainConfig& config);

}  // namespace fedrep::lstm
