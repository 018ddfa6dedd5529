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
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fedrep/error.hpp"
#include "fedrep/kernels.hpp"

namespace fedrep::fed {
namespace {

data::WindowedDataset series_windows(std::size_t n_windows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  data::RetailerSeries s;
  for (std::size_t i = 0; i < n_windows + 16; ++i) {
    s.timestamps.push_back(Timestamp{30 * static_cast<std::int64_t>(i)});
    s.values.push_back(0.5 + 0.4 * std::sin(0.3 * static_cast<double>(i)) + 0.05 * u(rng));
  }
  return data::make_windows(s);
}

ClientState make_client(int id, std::size_t n_windows, std::uint64_t seed) {
  return {id, series_windows(n_windows, seed), series_windows(4, seed + 1000)};
}

const ModelDims kSmall{1, 4, 3, 5};

RoundConfig small_config(std::size_t rounds) {
  RoundConfig cfg;
  cfg.max_rounds = rounds;
  cfg.train.learning_rate = 0.05;
  cfg.train.batch_size = 4;
  cfg.train.dropout_rate = 0.2;
  cfg.convergence.patience = 0;
  return cfg;
}

TEST(SelectClients, FractionRule) {
  std::vector<ClientState> clients;
  for (int id : {5, 1, 9, 3}) clients.push_back(make_client(id, 1, 0));
  const auto all = select_clients(clients, 1.0, 7);
  ASSERT_EQ(all.size(), 4u);
  std::vector<int> ids;
  for (auto i : all) ids.push_back(clients[i].client_id);
  EXPECT_EQ(ids, (std::vector<int>{1, 3, 5, 9}));
  EXPECT_EQ(select_clients(clients, 0.1, 7).size(), 1u);
  EXPECT_EQ(select_clients(clients, 0.5, 7).size(), 2u);
  EXPECT_EQ(select_clients(clients, 0.51, 7).size(), 3u);
  EXPECT_EQ(select_clients(clients, 0.5, 11), select_clients(clients, 0.5, 11));
  EXPECT_THROW(select_clients(std::span<const ClientState>{}, 1.0, 0), Error);
}

TEST(SelectClients, SamplesWithoutReplacementAndCoversEveryone) {
  std::vector<ClientState> clients;
  for (int id = 0; id < 10; ++id) clients.push_back(make_client(id, 1, 0));
  std::set<std::size_t> seen;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto pick = select_clients(clients, 0.3, s);
    ASSERT_EQ(pick.size(), 3u);
    EXPECT_EQ(std::set<std::size_t>(pick.begin(), pick.end()).size(), 3u);
    seen.insert(pick.begin(), pick.end());
  }
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Aggregate, Examples) {
  const std::vector<WeightedUpdate> two{{{{1.0, 2.0}}, 1}, {{{3.0, 4.0}}, 3}};
  EXPECT_EQ(aggregate(two).values, (std::vector<double>{2.5, 3.5}));

  const std::vector<WeightedUpdate> one{{{{0.1, -7.0, 1e300}}, 42}};
  EXPECT_EQ(aggregate(one), one[0].params);

  std::vector<WeightedUpdate> same;
  for (std::size_t n : {1u, 7u, 13u, 2u}) same.push_back({{{0.1, 0.7, -0.3}}, n});
  EXPECT_EQ(aggregate(same), same[0].params);
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate(std::span<const WeightedUpdate>{}), Error);
  const std::vector<WeightedUpdate> ragged{{{{1.0, 2.0}}, 1}, {{{3.0}}, 1}};
  EXPECT_THROW(aggregate(ragged), ShapeError);
  const std::vector<WeightedUpdate> empty_counts{{{{1.0}}, 0}, {{{3.0}}, 0}};
  EXPECT_THROW(aggregate(empty_counts), Error);
}

TEST(Aggregate, WeightedMeanOracleAndBounds) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t clients = 1 + rng() % 8, len = 1 + rng() % 50;
    std::vector<WeightedUpdate> ups(clients);
    for (auto& up : ups) {
      up.n_samples = 1 + rng() % 1000;
      for (std::size_t j = 0; j < len; ++j) up.params.values.push_back(u(rng));
    }
    const auto got = aggregate(ups);
    const auto w = aggregation_weights(ups);
    double wsum = 0.0;
    for (double x : w) wsum += x;
    EXPECT_NEAR(wsum, 1.0, 1e-15);

    long double n = 0;
    for (const auto& up : ups) n += up.n_samples;
    for (std::size_t j = 0; j < len; ++j) {
      long double num = 0;
      double lo = ups[0].params.values[j], hi = lo;
      for (const auto& up : ups) {
        num += static_cast<long double>(up.n_samples) * up.params.values[j];
        lo = std::min(lo, up.params.values[j]);
        hi = std::max(hi, up.params.values[j]);
      }
      EXPECT_NEAR(got.values[j], static_cast<double>(num / n), 1e-12);
      EXPECT_GE(got.values[j], lo);
      EXPECT_LE(got.values[j], hi);
    }
  }
}

TEST(Aggregate, IndependentOfThreadCount) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<WeightedUpdate> ups(5);
  for (auto& up : ups) {
    up.n_samples = 1 + rng() % 100;
    for (int j = 0; j < 20000; ++j) up.params.values.push_back(u(rng));
  }
  kernels::set_num_threads(1);
  const auto serial = aggregate(ups);
  kernels::set_num_threads(4);
  EXPECT_EQ(aggregate(ups), serial);
  kernels::set_num_threads(0);
}

TEST(Converged, PlateauRule) {
  const ConvergenceConfig p3{3, 1e-4};
  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  EXPECT_FALSE(converged(std::span(flat).first(3), p3));
  EXPECT_TRUE(converged(flat, p3));
  const std::vector<double> falling{1.0, 0.5, 0.25, 0.125, 0.0625};
  EXPECT_FALSE(converged(falling, p3));
  // A rise then a return to the best loss still counts as no improvement.
  const std::vector<double> bounce{0.3, 0.4, 0.35, 0.3};
  EXPECT_TRUE(converged(bounce, p3));
  // An improvement resets the counter.
  const std::vector<double> reset{0.5, 0.5, 0.5, 0.4, 0.4};
  EXPECT_FALSE(converged(reset, p3));
  EXPECT_FALSE(converged(flat, ConvergenceConfig{0, 1e-4}));
}

TEST(ClientUpdate, ZeroEpochsEchoesGlobal) {
  auto cfg = small_config(1);
  cfg.train.local_epochs = 0;
  const auto global = lstm::flatten(lstm::init_params(kSmall, 3));
  const auto bytes = privacy::encode(global, cfg.codec);
  const auto up = client_update(make_client(2, 10, 1), bytes, kSmall, cfg, 42, 1);
  EXPECT_EQ(up.update, bytes);
  EXPECT_EQ(up.n_samples, 10u);
}

TEST(ClientUpdate, EqualsPlainLocalTrain) {
  const auto cfg = small_config(1);
  const auto client = make_client(3, 12, 2);
  const auto init = lstm::init_params(kSmall, 4);
  const auto up = client_update(client, privacy::encode(lstm::flatten(init), cfg.codec), kSmall,
                                cfg, 42, 2);
  auto train = cfg.train;
  train.seed = client_seed(42, 3);
  train.epoch_offset = 1;
  const auto expect = lstm::local_train(init, client.train_data, train);
  EXPECT_EQ(privacy::decode(up.update, cfg.codec), lstm::flatten(expect.params));
  EXPECT_EQ(up.loss, expect.epoch_mse);
  EXPECT_THROW(client_update(client, privacy::encode(lstm::flatten(init), cfg.codec), kSmall, cfg,
                             42, 0),
               Error);
}

TEST(RunRound, SingleClientBecomesGlobal) {
  const auto cfg = small_config(1);
  const std::vector<ClientState> clients{make_client(0, 9, 5)};
  GlobalState state{kSmall, lstm::flatten(lstm::init_params(kSmall, 1)), 42};
  const auto start = state.global;
  const auto report = run_round(state, clients, cfg, 1);
  const auto up = client_update(clients[0], privacy::encode(start, cfg.codec), kSmall, cfg, 42, 1);
  EXPECT_EQ(state.global, privacy::decode(up.update, cfg.codec));
  EXPECT_EQ(report.checksum, checksum(state.global));
  EXPECT_EQ(report.selected_client_ids, std::vector<int>{0});
}

TEST(RunRound, AverageLossIsMeanOfClientLosses) {
  const auto cfg = small_config(1);
  std::vector<ClientState> clients;
  for (int id = 0; id < 3; ++id) clients.push_back(make_client(id, 6 + 3 * id, 10 + id));
  GlobalState state{kSmall, lstm::flatten(lstm::init_params(kSmall, 1)), 7};
  const auto r = run_round(state, clients, cfg, 1);
  ASSERT_EQ(r.client_losses.size(), 3u);
  EXPECT_NEAR(r.avg_loss, (r.client_losses[0] + r.client_losses[1] + r.client_losses[2]) / 3,
              1e-15);
}

TEST(RunTraining, MaxRoundsAndPlateauTermination) {
  std::vector<ClientState> clients{make_client(0, 8, 1), make_client(1, 8, 2)};
  auto cfg = small_config(4);
  auto run = run_training(clients, kSmall, cfg, 1);
  EXPECT_EQ(run.rounds(), 4u);
  EXPECT_EQ(run.terminated_by, Termination::kMaxRounds);

  // A learning rate too small to move the loss meaningfully plateaus at once.
  cfg.max_rounds = 50;
  cfg.train.learning_rate = 1e-12;
  cfg.train.dropout_rate = 0.0;
  cfg.train.batch_size = 100;
  cfg.convergence = {3, 1e-4};
  run = run_training(clients, kSmall, cfg, 1);
  EXPECT_EQ(run.rounds(), 4u);
  EXPECT_EQ(run.terminated_by, Termination::kConvergence);
}

TEST(RunTraining, InvariantToClientOrderAndThreads) {
  std::vector<ClientState> clients;
  for (int id = 0; id < 4; ++id) clients.push_back(make_client(id, 6 + id, 20 + id));
  auto cfg = small_config(3);
  cfg.client_fraction = 0.75;
  kernels::set_num_threads(1);
  const auto ref = run_training(clients, kSmall, cfg, 99);
  std::reverse(clients.begin(), clients.end());
  kernels::set_num_threads(3);
  const auto other = run_training(clients, kSmall, cfg, 99);
  kernels::set_num_threads(0);
  ASSERT_EQ(ref.rounds(), other.rounds());
  for (std::size_t k = 0; k < ref.rounds(); ++k) {
    EXPECT_EQ(ref.reports[k].checksum, other.reports[k].checksum);
    EXPECT_EQ(ref.reports[k].selected_client_ids, other.reports[k].selected_client_ids);
  }
  EXPECT_EQ(ref.final_params, other.final_params);
}

TEST(RunTraining, EncryptedChannelGivesSameModel) {
  std::vector<ClientState> clients{make_client(0, 7, 1), make_client(1, 9, 2)};
  auto cfg = small_config(2);
  const auto plain = run_training(clients, kSmall, cfg, 5);
  privacy::Key key{};
  key[0] = 1;
  cfg.codec = privacy::Codec::symmetric(key);
  const auto sealed = run_training(clients, kSmall, cfg, 5);
  EXPECT_EQ(plain.final_params, sealed.final_params);
}

TEST(RunTraining, RejectsBadClientSets) {
  const auto cfg = small_config(1);
  EXPECT_THROW(run_training({}, kSmall, cfg, 1), Error);
  std::vector<ClientState> dup{make_client(1, 4, 1), make_client(1, 4, 2)};
  EXPECT_THROW(run_training(dup, kSmall, cfg, 1), Error);
  std::vector<ClientState> empty{make_client(1, 4, 1), ClientState{2, {}, {}}};
  EXPECT_THROW(run_training(empty, kSmall, cfg, 1), Error);
}

TEST(TrainCentralized, ZeroEpochsAndLocalTrainEquivalence) {
  const auto data = series_windows(15, 3);
  const auto init = lstm::init_params(kSmall, 2);
  lstm::TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.seed = 31;
  EXPECT_EQ(train_centralized(init, data, cfg, 0).params, init);

  const auto cent = train_centralized(init, data, cfg, 3);
  cfg.local_epochs = 3;
  EXPECT_EQ(cent.params, lstm::local_train(init, data, cfg).params);
  EXPECT_EQ(cent.epoch_losses.size(), 3u);
  EXPECT_THROW(train_centralized(init, data::WindowedDataset{}, cfg), Error);
}

TEST(RoundCsv, LayoutAndMissingClients) {
  const std::vector<ClientState> clients{make_client(0, 1, 0), make_client(4, 1, 0)};
  RoundReport r;
  r.round = 3;
  r.selected_client_ids = {4};
  r.client_losses = {0.25};
  r.avg_loss = 0.25;
  r.checksum = 0xabc;
  std::ostringstream out;
  write_round_header(out, clients);
  write_round_row(out, r, clients);
  EXPECT_EQ(out.str(),
            "round,avg_loss,loss_client_0,loss_client_4,checksum\n"
            "3,0.25,,0.25,0000000000000abc\n");
}

TEST(Checksum, Fnv1aReferenceVectors) {
  EXPECT_EQ(fnv1a64({}), 0xcbf29ce484222325ULL);
  const std::string a = "a";
  EXPECT_EQ(fnv1a64({reinterpret_cast<const std::uint8_t*>(a.data()), a.size()}),
            0xaf63dc4c8601ec8cULL);
  const std::string foobar = "foobar";
  EXPECT_EQ(fnv1a64({reinterpret_cast<const std::uint8_t*>(foobar.data()), foobar.size()}),
            0x85944171f73967e8ULL);
}

}  // namespace
}  // namespace fedrep::fed
