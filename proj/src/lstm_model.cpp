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

#include "fedrep/lstm_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <string>

#include "fedrep/error.hpp"
#include "fedrep/kernels.hpp"
#include "fedrep/random.hpp"

namespace fedrep::lstm {

namespace {

constexpr std::uint64_t kEpochStream = 0x45504f43;    // "EPOC"
constexpr std::uint64_t kDropoutStream = 0x44524f50;  // "DROP"

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::size_t layer_count(std::size_t in, std::size_t hidden) {
  return kGates * (hidden * in + hidden * hidden + hidden);
}

void check_dims(const ModelDims& d) {
  if (d.input_size == 0 || d.hidden1 == 0 || d.hidden2 == 0 || d.output_size == 0) {
    throw ShapeError("model dimensions must all be positive");
  }
}

void uniform_fill(std::span<double> out, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : out) v = dist(rng);
}

void init_layer(LstmLayerParams& layer, std::mt19937_64& rng) {
  const auto in = layer.input_size;
  const auto h = layer.hidden_size;
  const double w_limit = std::sqrt(6.0 / static_cast<double>(in + h));
  const double u_limit = std::sqrt(6.0 / static_cast<double>(2 * h));
  for (std::size_t g = 0; g < kGates; ++g) {
    uniform_fill(std::span(layer.w).subspan(g * h * in, h * in), w_limit, rng);
    uniform_fill(std::span(layer.u).subspan(g * h * h, h * h), u_limit, rng);
  }
  std::fill(layer.b.begin(), layer.b.end(), 0.0);
  std::fill_n(layer.b.begin() + kForgetGate * h, h, 1.0);
}

// Copies between stacked storage and the gate-interleaved flat layout.
template <class Layer, class Fn>
void visit_flat_layer(Layer& layer, Fn&& fn) {
  const auto in = layer.input_size;
  const auto h = layer.hidden_size;
  for (std::size_t g = 0; g < kGates; ++g) {
    fn(std::span(layer.w).subspan(g * h * in, h * in));
    fn(std::span(layer.u).subspan(g * h * h, h * h));
    fn(std::span(layer.b).subspan(g * h, h));
  }
}

template <class Set, class Fn>
void visit_flat(Set& p, Fn&& fn) {
  visit_flat_layer(p.layer1, fn);
  visit_flat_layer(p.layer2, fn);
  fn(std::span(p.dense_w));
  fn(std::span(p.dense_b));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

void forward_layer(const LstmLayerParams& p, std::span<const double> inputs,
                   std::size_t steps, const LayerMasks& masks, LayerCache& c) {
  const auto in = p.input_size;
  const auto h = p.hidden_size;
  const auto rows = p.rows();
  c.steps = steps;
  c.masks = masks;
  c.inputs.assign(steps * in, 0.0);
  c.prev_hidden.assign(steps * h, 0.0);
  c.gates.assign(steps * rows, 0.0);
  c.cells.assign((steps + 1) * h, 0.0);
  c.tanh_cells.assign(steps * h, 0.0);
  c.hidden.assign(steps * h, 0.0);

  for (std::size_t t = 0; t < steps; ++t) {
    std::span<double> x(c.inputs.data() + t * in, in);
    std::span<double> hp(c.prev_hidden.data() + t * h, h);
    for (std::size_t j = 0; j < in; ++j) {
      x[j] = inputs[t * in + j] * (masks.input.empty() ? 1.0 : masks.input[j]);
    }
    if (t > 0) {
      for (std::size_t j = 0; j < h; ++j) {
        hp[j] = c.hidden[(t - 1) * h + j] * (masks.recurrent.empty() ? 1.0 : masks.recurrent[j]);
      }
    }
    std::span<double> z(c.gates.data() + t * rows, rows);
    std::copy(p.b.begin(), p.b.end(), z.begin());
    kernels::matvec_add(p.w, rows, in, x, z);
    kernels::matvec_add(p.u, rows, h, hp, z);

    const double* c_prev = c.cells.data() + t * h;
    double* c_now = c.cells.data() + (t + 1) * h;
    for (std::size_t j = 0; j < h; ++j) {
      const double ig = sigmoid(z[kInputGate * h + j]);
      const double fg = sigmoid(z[kForgetGate * h + j]);
      const double og = sigmoid(z[kOutputGate * h + j]);
      const double gg = std::tanh(z[kCellGate * h + j]);
      z[kInputGate * h + j] = ig;
      z[kForgetGate * h + j] = fg;
      z[kOutputGate * h + j] = og;
      z[kCellGate * h + j] = gg;
      c_now[j] = fg * c_prev[j] + ig * gg;
      const double tc = std::tanh(c_now[j]);
      c.tanh_cells[t * h + j] = tc;
      c.hidden[t * h + j] = og * tc;
      if (!std::isfinite(c_now[j]) || !std::isfinite(c.hidden[t * h + j])) {
        throw NumericError("non-finite LSTM state at step " + std::to_string(t));
      }
    }
  }
}

// Backpropagates d(loss)/d(h_t) for every t through one layer. Returns
// d(loss)/d(unmasked input) when `want_input_grad` is set.
std::vector<double> backward_layer(const LstmLayerParams& p, const LayerCache& c,
                                   std::span<const double> dh_out,
                                   LstmLayerParams& g, bool want_input_grad) {
  const auto in = p.input_size;
  const auto h = p.hidden_size;
  const auto rows = p.rows();
  const auto steps = c.steps;
  std::vector<double> dx(want_input_grad ? steps * in : 0, 0.0);
  std::vector<double> dh_next(h, 0.0);
  std::vector<double> dc_next(h, 0.0);
  std::vector<double> dz(rows);
  std::vector<double> dh_prev_masked(h);

  for (std::size_t t = steps; t-- > 0;) {
    const double* gates = c.gates.data() + t * rows;
    const double* c_prev = c.cells.data() + t * h;
    for (std::size_t j = 0; j < h; ++j) {
      const double ig = gates[kInputGate * h + j];
      const double fg = gates[kForgetGate * h + j];
      const double og = gates[kOutputGate * h + j];
      const double gg = gates[kCellGate * h + j];
      const double tc = c.tanh_cells[t * h + j];
      const double dh = dh_out[t * h + j] + dh_next[j];
      const double d_og = dh * tc;
      const double dc = dh * og * (1.0 - tc * tc) + dc_next[j];
      const double d_ig = dc * gg;
      const double d_gg = dc * ig;
      const double d_fg = dc * c_prev[j];
      dc_next[j] = dc * fg;
      dz[kInputGate * h + j] = d_ig * ig * (1.0 - ig);
      dz[kForgetGate * h + j] = d_fg * fg * (1.0 - fg);
      dz[kOutputGate * h + j] = d_og * og * (1.0 - og);
      dz[kCellGate * h + j] = d_gg * (1.0 - gg * gg);
    }
    kernels::outer_add(g.w, rows, in, dz, std::span(c.inputs).subspan(t * in, in));
    kernels::outer_add(g.u, rows, h, dz, std::span(c.prev_hidden).subspan(t * h, h));
    kernels::axpy(1.0, dz, g.b);

    if (want_input_grad) {
      std::span<double> dxt(dx.data() + t * in, in);
      kernels::matvec_transposed_add(p.w, rows, in, dz, dxt);
      if (!c.masks.input.empty()) {
        for (std::size_t j = 0; j < in; ++j) dxt[j] *= c.masks.input[j];
      }
    }
    if (t > 0) {
      std::fill(dh_prev_masked.begin(), dh_prev_masked.end(), 0.0);
      kernels::matvec_transposed_add(p.u, rows, h, dz, dh_prev_masked);
      for (std::size_t j = 0; j < h; ++j) {
        dh_next[j] = dh_prev_masked[j] * (c.masks.recurrent.empty() ? 1.0 : c.masks.recurrent[j]);
      }
    }
  }
  return dx;
}

template <class A, class B>
void require_same_shape(const A& a, const B& b) {
  if (!(a.dims == b.dims)) throw ShapeError("parameter shapes do not match");
}

}  // namespace

std::size_t ModelDims::parameter_count() const {
  return layer_count(input_size, hidden1) + layer_count(hidden1, hidden2) +
         output_size * hidden2 + output_size;
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  check_dims(dims);
  ModelParams p(dims);
  std::mt19937_64 rng(seed);
  init_layer(p.layer1, rng);
  init_layer(p.layer2, rng);
  uniform_fill(p.dense_w, std::sqrt(6.0 / static_cast<double>(dims.hidden2 + dims.output_size)),
               rng);
  return p;
}

ParamVector flatten(const ModelParams& params) {
  ParamVector v;
  v.values.reserve(params.dims.parameter_count());
  visit_flat(params, [&](std::span<const double> block) {
    v.values.insert(v.values.end(), block.begin(), block.end());
  });
  return v;
}

ModelParams unflatten(const ParamVector& v, const ModelDims& dims) {
  check_dims(dims);
  if (v.size() != dims.parameter_count()) {
    throw ShapeError("parameter vector has " + std::to_string(v.size()) + " entries, model needs " +
                     std::to_string(dims.parameter_count()));
  }
  ModelParams p(dims);
  auto it = v.values.begin();
  visit_flat(p, [&](std::span<double> block) {
    std::copy_n(it, block.size(), block.begin());
    it += static_cast<std::ptrdiff_t>(block.size());
  });
  return p;
}

std::vector<std::uint8_t> serialize(const ParamVector& v) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 8 * v.size());
  for (char c : {'F', 'R', 'E', 'P'}) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, kFormatVersion);
  put_u64(out, v.size());
  for (double x : v.values) put_u64(out, std::bit_cast<std::uint64_t>(x));
  return out;
}

ParamVector deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || bytes[0] != 'F' || bytes[1] != 'R' || bytes[2] != 'E' ||
      bytes[3] != 'P') {
    throw Error("not a parameter vector (bad magic)");
  }
  const auto version = get_u64(bytes, 4, 4);
  if (version != kFormatVersion) {
    throw Error("unsupported parameter format version " + std::to_string(version));
  }
  const auto count = get_u64(bytes, 8, 8);
  if (bytes.size() != kHeaderBytes + 8 * count) {
    throw ShapeError("parameter payload length does not match header count " +
                     std::to_string(count));
  }
  ParamVector v;
  v.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    v.values[i] = std::bit_cast<double>(get_u64(bytes, kHeaderBytes + 8 * i, 8));
  }
  return v;
}

void save_checkpoint(const std::filesystem::path& path, const ParamVector& v) {
  const auto bytes = serialize(v);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

ParamVector load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

DropoutMasks make_dropout_masks(const ModelDims& dims, double rate, std::uint64_t seed) {
  DropoutMasks m;
  if (rate <= 0.0) return m;
  if (rate >= 1.0) throw Error("dropout rate must be below 1");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  auto draw = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = keep(rng) ? scale : 0.0;
    return v;
  };
  m.layer1.input = draw(dims.input_size);
  m.layer1.recurrent = draw(dims.hidden1);
  m.layer2.input = draw(dims.hidden1);
  m.layer2.recurrent = draw(dims.hidden2);
  return m;
}

ForwardCache forward(const ModelParams& params, std::span<const double> window,
                     const DropoutMasks* masks) {
  const auto& d = params.dims;
  if (window.empty() || window.size() % d.input_size != 0) {
    throw ShapeError("window length " + std::to_string(window.size()) +
                     " is not a positive multiple of the input size");
  }
  for (double x : window) {
    if (!std::isfinite(x)) throw NumericError("non-finite value in input window");
  }
  const auto steps = window.size() / d.input_size;
  static const DropoutMasks kNone;
  const DropoutMasks& m = masks ? *masks : kNone;

  ForwardCache c;
  c.dims = d;
  forward_layer(params.layer1, window, steps, m.layer1, c.layer1);
  forward_layer(params.layer2, c.layer1.hidden, steps, m.layer2, c.layer2);

  std::span<const double> last(c.layer2.hidden.data() + (steps - 1) * d.hidden2, d.hidden2);
  c.head_pre = params.dense_b;
  kernels::matvec_add(params.dense_w, d.output_size, d.hidden2, last, c.head_pre);
  c.prediction.resize(d.output_size);
  for (std::size_t k = 0; k < d.output_size; ++k) {
    if (!std::isfinite(c.head_pre[k])) throw NumericError("non-finite network output");
    c.prediction[k] = std::max(0.0, c.head_pre[k]);
  }
  return c;
}

std::vector<double> predict(const ModelParams& params, std::span<const double> window) {
  return forward(params, window).prediction;
}

double backward_accumulate(const ModelParams& params, const ForwardCache& cache,
                           std::span<const double> target, Gradients& grads) {
  const auto& d = params.dims;
  if (!(cache.dims == d) || !(grads.dims == d)) {
    throw ShapeError("forward cache or gradient shape does not match the parameters");
  }
  if (target.size() != d.output_size) {
    throw ShapeError("target has " + std::to_string(target.size()) + " values, model outputs " +
                     std::to_string(d.output_size));
  }
  const auto steps = cache.layer2.steps;
  const double n = static_cast<double>(d.output_size);

  double loss = 0.0;
  std::vector<double> d_pre(d.output_size);
  for (std::size_t k = 0; k < d.output_size; ++k) {
    const double r = cache.prediction[k] - target[k];
    loss += r * r;
    d_pre[k] = cache.head_pre[k] > 0.0 ? 2.0 * r / n : 0.0;
  }
  loss /= n;

  std::span<const double> last(cache.layer2.hidden.data() + (steps - 1) * d.hidden2, d.hidden2);
  kernels::outer_add(grads.dense_w, d.output_size, d.hidden2, d_pre, last);
  kernels::axpy(1.0, d_pre, grads.dense_b);

  std::vector<double> dh2(steps * d.hidden2, 0.0);
  kernels::matvec_transposed_add(params.dense_w, d.output_size, d.hidden2, d_pre,
                                 std::span(dh2).subspan((steps - 1) * d.hidden2, d.hidden2));
  const auto dh1 = backward_layer(params.layer2, cache.layer2, dh2, grads.layer2, true);
  backward_layer(params.layer1, cache.layer1, dh1, grads.layer1, false);
  return loss;
}

Gradients backward(const ModelParams& params, const ForwardCache& cache,
                   std::span<const double> target) {
  Gradients g(params.dims);
  backward_accumulate(params, cache, target, g);
  return g;
}

ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double eta) {
  require_same_shape(params, grads);
  if (!(eta >= 0.0)) throw Error("learning rate must be non-negative");
  ModelParams out = params;
  std::vector<std::span<const double>> g;
  grads.for_each_buffer([&](const std::vector<double>& b) { g.emplace_back(b); });
  std::size_t i = 0;
  out.for_each_buffer([&](std::vector<double>& b) { kernels::axpy(-eta, g[i++], b); });
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error("dropout_rate must lie in [0, 1)");
  if (batch_size == 0) throw Error("batch_size must be positive");
}

std::uint64_t epoch_seed(std::uint64_t seed, std::uint64_t epoch) {
  return derive_seed(seed, {kEpochStream, epoch});
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::uint64_t example_dropout_seed(std::uint64_t seed, std::size_t example) {
  return derive_seed(seed, {kDropoutStream, example});
}

LocalTrainResult local_train(const ModelParams& params, const data::WindowedDataset& data,
                             const TrainConfig& config) {
  config.validate();
  if (data.empty()) throw Error("local_train needs at least one example");
  if (data.lookahead != params.dims.output_size) {
    throw ShapeError("dataset lookahead does not match the model output size");
  }
  const auto n = data.count();
  LocalTrainResult result{params, 0.0};

  if (config.local_epochs == 0) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto pred = predict(params, data.input(i));
      double l = 0.0;
      for (std::size_t k = 0; k < pred.size(); ++k) {
        const double r = pred[k] - data.target(i)[k];
        l += r * r;
      }
      total += l / static_cast<double>(pred.size());
    }
    result.epoch_mse = total / static_cast<double>(n);
    return result;
  }

  Gradients grads(params.dims);
  std::vector<std::size_t> batch;
  for (std::size_t e = 0; e < config.local_epochs; ++e) {
    const auto es = epoch_seed(config.seed, config.epoch_offset + e);
    const auto order = epoch_order(n, es);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const auto end = std::min(n, start + config.batch_size);
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(end));
      std::sort(batch.begin(), batch.end());
      grads.for_each_buffer([](std::vector<double>& b) { std::fill(b.begin(), b.end(), 0.0); });
      for (auto idx : batch) {
        const auto masks = make_dropout_masks(params.dims, config.dropout_rate,
                                              example_dropout_seed(es, idx));
        const auto cache = forward(result.params, data.input(idx),
                                   config.dropout_rate > 0.0 ? &masks : nullptr);
        epoch_loss += backward_accumulate(result.params, cache, data.target(idx), grads);
      }
      const double inv = 1.0 / static_cast<double>(batch.size());
      if (inv != 1.0) {
        grads.for_each_buffer([inv](std::vector<double>& b) {
          for (auto& x : b) x *= inv;
        });
      }
      result.params = sgd_step(result.params, grads, config.learning_rate);
    }
    result.epoch_mse = epoch_loss / static_cast<double>(n);
  }
  return result;
}

}  // namespace fedrep::lstm
