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

#include "fedrep/fed_core.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "csv.hpp"
#include "fedrep/error.hpp"
#include "fedrep/kernels.hpp"
#include "fedrep/random.hpp"

namespace fedrep::fed {

namespace {

constexpr std::uint64_t kClientStream = 0x434c4e54;  // "CLNT"
constexpr std::uint64_t kInitStream = 0x494e4954;    // "INIT"
constexpr std::uint64_t kNoiseStream = 0x4e4f4953;   // "NOIS"
constexpr std::uint64_t kServerStream = 0x53525652;  // "SRVR"
constexpr std::uint64_t kSelectStream = 0x53454c43;  // "SELC"

}  // namespace

void RoundConfig::validate() const {
  if (max_rounds == 0) throw Error("max_rounds must be at least 1");
  if (!(client_fraction > 0.0 && client_fraction <= 1.0)) {
    throw Error("client_fraction must lie in (0, 1]");
  }
  train.validate();
  dp.validate();
  server_dp.validate();
  if (dp.enabled) gaussian_sigma(dp);
  if (server_dp.enabled) gaussian_sigma(server_dp);
  if (convergence.min_rel_improvement < 0.0) {
    throw Error("convergence.min_rel_improvement must be non-negative");
  }
}

std::uint64_t client_seed(std::uint64_t master_seed, int client_id) {
  return derive_seed(master_seed, {kClientStream, static_cast<std::uint64_t>(client_id)});
}

std::uint64_t init_seed(std::uint64_t master_seed) {
  return derive_seed(master_seed, {kInitStream});
}

std::uint64_t client_noise_seed(std::uint64_t master_seed, int client_id, std::size_t round) {
  return derive_seed(master_seed,
                     {kNoiseStream, static_cast<std::uint64_t>(client_id), round});
}

std::uint64_t server_noise_seed(std::uint64_t master_seed, std::size_t round) {
  return derive_seed(master_seed, {kServerStream, round});
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t checksum(const ParamVector& v) { return fnv1a64(lstm::serialize(v)); }

std::vector<std::size_t> select_clients(std::span<const ClientState> clients, double fraction,
                                        std::uint64_t round_seed) {
  if (clients.empty()) throw Error("no clients to select from");
  const auto n = clients.size();
  // The small slack keeps e.g. 0.7 * 10 from rounding up to 8.
  const auto wanted = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  const auto m = std::clamp<std::size_t>(wanted, 1, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto by_id = [&](std::size_t a, std::size_t b) {
    return clients[a].client_id < clients[b].client_id;
  };
  // Sampling starts from id order so the pick does not depend on how the
  // caller happened to order `clients`.
  std::sort(idx.begin(), idx.end(), by_id);
  if (m < n) {
    std::mt19937_64 rng(round_seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(m);
    std::sort(idx.begin(), idx.end(), by_id);
  }
  return idx;
}

ClientUpdate client_update(const ClientState& client, std::span<const std::uint8_t> encoded_global,
                           const ModelDims& dims, const RoundConfig& cfg,
                           std::uint64_t master_seed, std::size_t round) {
  if (round == 0) throw Error("rounds are numbered from 1");
  const auto global = privacy::decode(encoded_global, cfg.codec);
  const auto params = lstm::unflatten(global, dims);

  auto train = cfg.train;
  train.seed = client_seed(master_seed, client.client_id);
  train.epoch_offset = (round - 1) * train.local_epochs;
  auto local = lstm::local_train(params, client.train_data, train);

  auto sanitized = privacy::perturb(lstm::flatten(local.params), cfg.dp,
                                    client_noise_seed(master_seed, client.client_id, round));
  return {privacy::encode(sanitized, cfg.codec), client.n_samples(), local.epoch_mse};
}

std::vector<double> aggregation_weights(std::span<const WeightedUpdate> updates) {
  std::size_t total = 0;
  for (const auto& u : updates) total += u.n_samples;
  if (total == 0) throw Error("aggregation needs a positive total sample count");
  std::vector<double> w;
  w.reserve(updates.size());
  for (const auto& u : updates) {
    w.push_back(static_cast<double>(u.n_samples) / static_cast<double>(total));
  }
  return w;
}

ParamVector aggregate(std::span<const WeightedUpdate> updates) {
  if (updates.empty()) throw Error("aggregation needs at least one update");
  const auto len = updates.front().params.size();
  for (const auto& u : updates) {
    if (u.params.size() != len) {
      throw ShapeError("client updates differ in length (" + std::to_string(u.params.size()) +
                       " vs " + std::to_string(len) + ")");
    }
  }
  const auto weights = aggregation_weights(updates);
  const double* base = updates.front().params.values.data();
  ParamVector out;
  out.values.resize(len);
  const auto n = static_cast<std::ptrdiff_t>(len);
#pragma omp parallel for schedule(static) if (len * updates.size() >= kernels::kParallelThreshold)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const double ref = base[j];
    double acc = 0.0;
    double lo = ref;
    double hi = ref;
    for (std::size_t h = 1; h < updates.size(); ++h) {
      const double x = updates[h].params.values[static_cast<std::size_t>(j)];
      acc += weights[h] * (x - ref);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    out.values[static_cast<std::size_t>(j)] = std::clamp(ref + acc, lo, hi);
  }
  return out;
}

RoundReport run_round(GlobalState& state, std::span<const ClientState> clients,
                      const RoundConfig& cfg, std::size_t round) {
  const auto selected =
      select_clients(clients, cfg.client_fraction,
                     derive_seed(state.master_seed, {kSelectStream, round}));
  const auto encoded_global = privacy::encode(state.global, cfg.codec);

  std::vector<ClientUpdate> updates(selected.size());
  std::vector<std::exception_ptr> errors(selected.size());
  const auto m = static_cast<std::ptrdiff_t>(selected.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const auto s = static_cast<std::size_t>(i);
    try {
      updates[s] = client_update(clients[selected[s]], encoded_global, state.dims, cfg,
                                 state.master_seed, round);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RoundReport report;
  report.round = round;
  std::vector<WeightedUpdate> decoded;
  decoded.reserve(selected.size());
  for (std::size_t s = 0; s < selected.size(); ++s) {
    report.selected_client_ids.push_back(clients[selected[s]].client_id);
    report.client_losses.push_back(updates[s].loss);
    decoded.push_back({privacy::decode(updates[s].update, cfg.codec), updates[s].n_samples});
  }
  state.global = privacy::perturb(aggregate(decoded), cfg.server_dp,
                                  server_noise_seed(state.master_seed, round));
  report.avg_loss = std::accumulate(report.client_losses.begin(), report.client_losses.end(), 0.0) /
                    static_cast<double>(report.client_losses.size());
  report.checksum = checksum(state.global);
  spdlog::debug("round {}: {} clients, avg loss {:.6g}, checksum {:016x}", round,
                selected.size(), report.avg_loss, report.checksum);
  return report;
}

bool converged(std::span<const double> losses, const ConvergenceConfig& cfg) {
  if (cfg.patience == 0 || losses.empty()) return false;
  double best = losses.front();
  std::size_t stall = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) {
    const double rel = best > 0.0 ? (best - losses[i]) / best : 0.0;
    stall = rel < cfg.min_rel_improvement ? stall + 1 : 0;
    best = std::min(best, losses[i]);
  }
  return stall >= cfg.patience;
}

TrainingRun run_training(std::span<const ClientState> clients, const ModelDims& dims,
                         const RoundConfig& cfg, std::uint64_t master_seed,
                         const RoundCallback& on_round) {
  if (clients.empty()) throw Error("federated training needs at least one client");
  cfg.validate();
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].n_samples() == 0) {
      throw Error("client " + std::to_string(clients[i].client_id) + " has no training samples");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (clients[i].client_id == clients[j].client_id) {
        throw Error("duplicate client id " + std::to_string(clients[i].client_id));
      }
    }
  }

  GlobalState state{dims, lstm::flatten(lstm::init_params(dims, init_seed(master_seed))),
                    master_seed};
  TrainingRun run;
  std::vector<double> losses;
  for (std::size_t k = 1; k <= cfg.max_rounds; ++k) {
    run.reports.push_back(run_round(state, clients, cfg, k));
    losses.push_back(run.reports.back().avg_loss);
    if (on_round) on_round(run.reports.back(), state);
    if (converged(losses, cfg.convergence)) {
      run.terminated_by = Termination::kConvergence;
      break;
    }
  }
  run.final_params = lstm::unflatten(state.global, dims);
  return run;
}

CentralizedResult train_centralized(const ModelParams& initial, const data::WindowedDataset& pooled,
                                    const lstm::TrainConfig& cfg, std::size_t epochs) {
  if (pooled.empty()) throw Error("centralized training needs a non-empty pooled dataset");
  CentralizedResult result{initial, {}};
  for (std::size_t e = 0; e < epochs; ++e) {
    auto one = cfg;
    one.local_epochs = 1;
    one.epoch_offset = cfg.epoch_offset + e;
    auto r = lstm::local_train(result.params, pooled, one);
    result.params = std::move(r.params);
    result.epoch_losses.push_back(r.epoch_mse);
  }
  return result;
}

void write_round_header(std::ostream& out, std::span<const ClientState> clients) {
  out << "round,avg_loss";
  for (const auto& c : clients) out << ",loss_client_" << c.client_id;
  out << ",checksum\n";
}

void write_round_row(std::ostream& out, const RoundReport& report,
                     std::span<const ClientState> clients) {
  out << report.round << ',' << csv::format_double(report.avg_loss);
  for (const auto& c : clients) {
    out << ',';
    for (std::size_t s = 0; s < report.selected_client_ids.size(); ++s) {
      if (report.selected_client_ids[s] == c.client_id) {
        out << csv::format_double(report.client_losses[s]);
      }
    }
  }
  out << ',' << fmt::format("{:016x}", report.checksum) << '\n';
}

std::string to_string(Termination t) {
  return t == Termination::kConvergence ? "convergence" : "max_rounds";
}

}  // namespace fedrep::fed
