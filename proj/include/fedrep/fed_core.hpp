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

// Round protocol of the control centre and the retailers:
//
//   distribute encoded w_{k-1} -> each selected REP decodes, trains locally,
//   clips + perturbs, encodes -> centre decodes and takes the sample-weighted
//   mean -> optional server-side perturbation -> average the reported losses
//   -> plateau test.
//
// Every random draw comes from (master_seed, client_id, round), and updates
// are aggregated in ascending client_id, so a run is bit-reproducible for
// any thread count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fedrep/data_pipeline.hpp"
#include "fedrep/lstm_model.hpp"
#include "fedrep/privacy.hpp"

namespace fedrep::fed {

using lstm::ModelDims;
using lstm::ModelParams;
using lstm::ParamVector;

struct ClientState {
  int client_id = 0;
  data::WindowedDataset train_data;
  data::WindowedDataset test_data;

  std::size_t n_samples() const { return train_data.count(); }
};

struct ConvergenceConfig {
  // Consecutive non-improving rounds before stopping; 0 disables the test.
  std::size_t patience = 5;
  double min_rel_improvement = 1e-4;

  bool operator==(const ConvergenceConfig&) const = default;
};

struct RoundConfig {
  std::size_t max_rounds = 80;
  double client_fraction = 1.0;
  lstm::TrainConfig train;
  privacy::DpConfig dp;         // applied by every REP to its update
  privacy::DpConfig server_dp;  // applied by the centre to the average
  privacy::Codec codec;
  ConvergenceConfig convergence;

  void validate() const;
};

struct RoundReport {
  std::size_t round = 0;
  std::vector<int> selected_client_ids;
  double avg_loss = 0.0;
  std::vector<double> client_losses;  // parallel to selected_client_ids
  std::uint64_t checksum = 0;
};

enum class Termination { kConvergence, kMaxRounds };

struct TrainingRun {
  std::vector<RoundReport> reports;
  ModelParams final_params;
  Termination terminated_by = Termination::kMaxRounds;

  std::size_t rounds() const { return reports.size(); }
};

// Server-side model.
struct GlobalState {
  ModelDims dims;
  ParamVector global;
  std::uint64_t master_seed = 0;
};

// Seed stream of one client; local training in round k (1-based) with E
// local epochs covers epochs (k-1)E .. kE-1 of this stream.
std::uint64_t client_seed(std::uint64_t master_seed, int client_id);
std::uint64_t init_seed(std::uint64_t master_seed);
std::uint64_t client_noise_seed(std::uint64_t master_seed, int client_id, std::size_t round);
std::uint64_t server_noise_seed(std::uint64_t master_seed, std::size_t round);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t checksum(const ParamVector& v);

// m = max(ceil(C * |clients|), 1) clients sampled without replacement;
// returned as indices into `clients`, ordered by client_id.
std::vector<std::size_t> select_clients(std::span<const ClientState> clients, double fraction,
                                        std::uint64_t round_seed);

struct ClientUpdate {
  std::vector<std::uint8_t> update;
  std::size_t n_samples = 0;
  double loss = 0.0;
};

ClientUpdate client_update(const ClientState& client, std::span<const std::uint8_t> encoded_global,
                           const ModelDims& dims, const RoundConfig& cfg,
                           std::uint64_t master_seed, std::size_t round);

struct WeightedUpdate {
  ParamVector params;
  std::size_t n_samples = 0;
};

// sum_h (n_h / n) w_h, evaluated as w_1 + sum_h (n_h / n)(w_h - w_1) in the
// given order and clamped to the per-coordinate input range, which keeps
// identical inputs exact.
ParamVector aggregate(std::span<const WeightedUpdate> updates);

// Weights n_h / n in input order.
std::vector<double> aggregation_weights(std::span<const WeightedUpdate> updates);

RoundReport run_round(GlobalState& state, std::span<const ClientState> clients,
                      const RoundConfig& cfg, std::size_t round);

using RoundCallback = std::function<void(const RoundReport&, const GlobalState&)>;

TrainingRun run_training(std::span<const ClientState> clients, const ModelDims& dims,
                         const RoundConfig& cfg, std::uint64_t master_seed,
                         const RoundCallback& on_round = {});

// Plateau rule over the loss history; true once `patience` consecutive
// rounds improved on the best earlier loss by less than the relative
// threshold.
bool converged(std::span<const double> losses, const ConvergenceConfig& cfg);

struct CentralizedResult {
  ModelParams params;
  std::vector<double> epoch_losses;
};

// Single-model training on pooled data; epoch e uses the same randomness as
// epoch e of local_train with cfg.seed.
CentralizedResult train_centralized(const ModelParams& initial,
                                    const data::WindowedDataset& pooled,
                                    const lstm::TrainConfig& cfg, std::size_t epochs = 30);

// round,avg_loss,loss_client_<id>...,checksum
void write_round_header(std::ostream& out, std::span<const ClientState> clients);
void write_round_row(std::ostream& out, const RoundReport& report,
                     std::span<const ClientState> clients);

std::string to_string(Termination t);

}  // namespace fedrep::fed
