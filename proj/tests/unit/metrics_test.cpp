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

#include "fedrep/metrics.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fedrep/error.hpp"
#include "fedrep/kernels.hpp"

namespace fedrep::metrics {
namespace {

std::vector<double> random_values(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

data::WindowedDataset windows(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  data::RetailerSeries s;
  for (std::size_t i = 0; i < n + 16; ++i) {
    s.timestamps.push_back(Timestamp{make_timestamp(2013, 1, 1).minutes + 30 * static_cast<std::int64_t>(i)});
    s.values.push_back(u(rng));
  }
  return data::make_windows(s);
}

lstm::ModelParams small_model(std::uint64_t seed) {
  auto p = lstm::init_params({1, 5, 4, 5}, seed);
  std::fill(p.dense_b.begin(), p.dense_b.end(), 0.4);
  return p;
}

TEST(Mse, AnalyticExamples) {
  const std::vector<double> a{0.3, -1.0, 7.0};
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_EQ(mse(std::vector<double>{0, 0}, std::vector<double>{1, 1}), 1.0);
  EXPECT_EQ(mse(std::vector<double>{1, 2}, std::vector<double>{2, 4}), 2.5);
}

TEST(Mse, Errors) {
  EXPECT_THROW(mse(std::vector<double>{}, std::vector<double>{}), Error);
  EXPECT_THROW(mse(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), Error);
}

TEST(Mse, BruteForceOracleAndAlgebra) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    const auto a = random_values(n, rng);
    const auto b = random_values(n, rng);
    long double acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<long double>(a[i] - b[i]) * (a[i] - b[i]);
    EXPECT_NEAR(mse(a, b), static_cast<double>(acc / n), 1e-12);
    EXPECT_EQ(mse(a, b), mse(b, a));
    EXPECT_EQ(mse(a, a), 0.0);
    std::vector<double> ca(a), cb(b);
    for (auto& x : ca) x *= 4.0;
    for (auto& x : cb) x *= 4.0;
    EXPECT_NEAR(mse(ca, cb), 16.0 * mse(a, b), 1e-12 * (1.0 + mse(ca, cb)));
  }
}

TEST(EvaluateHoldout, ZeroModelOnZeroTargets) {
  data::WindowedDataset ds;
  ds.lookback = 12;
  ds.lookahead = 5;
  for (int i = 0; i < 3; ++i) {
    ds.push_back(std::vector<double>(12, 0.7), std::vector<double>(5, 0.0), Timestamp{30 * i});
  }
  const auto r = evaluate_holdout(lstm::ModelParams(lstm::ModelDims{1, 3, 2, 5}), ds);
  EXPECT_EQ(r.mse, 0.0);
  EXPECT_EQ(r.n_predictions, 15u);
}

TEST(EvaluateHoldout, SingleWindowMatchesDirectMse) {
  const auto ds = windows(1, 4);
  const auto p = small_model(2);
  const auto r = evaluate_holdout(p, ds);
  EXPECT_EQ(r.mse, mse(ds.target(0), lstm::predict(p, ds.input(0))));
}

TEST(EvaluateHoldout, PerHorizonAveragesToTotal) {
  const auto ds = windows(40, 5);
  const auto r = evaluate_holdout(small_model(3), ds);
  ASSERT_EQ(r.per_horizon_mse.size(), 5u);
  double mean = 0.0;
  for (double h : r.per_horizon_mse) {
    EXPECT_GE(h, 0.0);
    mean += h / 5.0;
  }
  EXPECT_NEAR(mean, r.mse, 1e-14);
  EXPECT_EQ(r.actual.size(), 200u);
  EXPECT_EQ(r.predicted.size(), 200u);
  EXPECT_EQ(r.n_predictions, 200u);
}

TEST(EvaluateHoldout, RawModeRescales) {
  const auto ds = windows(10, 6);
  const auto p = small_model(4);
  const data::ScalingParams scaler{2.0, 12.0};
  const auto scaled = evaluate_holdout(p, ds);
  const auto raw = evaluate_holdout(p, ds, ScaleMode::kRaw, scaler);
  EXPECT_NEAR(raw.mse, 100.0 * scaled.mse, 1e-12);
  EXPECT_NEAR(raw.actual[0], 2.0 + 10.0 * ds.target(0)[0], 1e-12);
  EXPECT_THROW(evaluate_holdout(p, ds, ScaleMode::kRaw), Error);
}

TEST(EvaluateHoldout, DeterministicAcrossThreadsAndOrder) {
  auto ds = windows(30, 7);
  const auto p = small_model(5);
  kernels::set_num_threads(1);
  const auto one = evaluate_holdout(p, ds);
  kernels::set_num_threads(4);
  const auto four = evaluate_holdout(p, ds);
  kernels::set_num_threads(0);
  EXPECT_EQ(one.mse, four.mse);
  EXPECT_EQ(one.predicted, four.predicted);

  data::WindowedDataset reversed;
  reversed.lookback = ds.lookback;
  reversed.lookahead = ds.lookahead;
  for (std::size_t i = ds.count(); i-- > 0;) {
    reversed.push_back(ds.input(i), ds.target(i), ds.target_start[i]);
  }
  EXPECT_NEAR(evaluate_holdout(p, reversed).mse, one.mse, 1e-15);
  EXPECT_THROW(evaluate_holdout(p, data::WindowedDataset{}), Error);
}

TEST(SummarizeScenario, Statistics) {
  const std::vector<RunOutcome> single{{12, 0.3}};
  const auto s1 = summarize_scenario("s", 4, single);
  EXPECT_EQ(s1.min_mse, 0.3);
  EXPECT_EQ(s1.max_mse, 0.3);
  EXPECT_EQ(s1.mean_mse, 0.3);

  const std::vector<RunOutcome> two{{10, 0.3}, {20, 0.4}};
  const auto s2 = summarize_scenario("s", 4, two);
  EXPECT_DOUBLE_EQ(s2.mean_mse, 0.35);
  EXPECT_EQ(s2.rounds_to_convergence, 15.0);
  EXPECT_THROW(summarize_scenario("s", 4, std::span<const RunOutcome>{}), Error);
}

TEST(SummarizeScenario, MeanLiesBetweenExtremes) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RunOutcome> runs(1 + rng() % 6);
    // Near-equal values stress the rounding of the mean.
    const double base = u(rng);
    for (auto& r : runs) r.holdout_mse = base + 1e-17 * static_cast<double>(rng() % 3);
    const auto s = summarize_scenario("x", 1, runs);
    EXPECT_LE(s.min_mse, s.mean_mse);
    EXPECT_LE(s.mean_mse, s.max_mse);
  }
}

TEST(SummaryCsv, ReproducesPublishedRowLayout) {
  // Published Scenario 1 figures: 4 retailers, min 0.328981, max 0.349443, mean 0.338211.
  ScenarioSummary s{"1", 4, 0.328981, 0.349443, 0.338211, 80};
  std::ostringstream out;
  write_summary_header(out);
  write_summary_row(out, s, ScaleMode::kScaled);
  EXPECT_EQ(out.str(),
            "scenario,n_retailers,min_mse,max_mse,mean_mse,rounds_to_convergence,mse_scale\n"
            "1,4,0.328981,0.349443,0.338211,80,scaled\n");
}

TEST(Predictions, OneRowPerHorizonStep) {
  const auto ds = windows(2, 8);
  const auto r = evaluate_holdout(small_model(6), ds);
  const auto path = std::filesystem::path(::testing::TempDir()) / "pred.csv";
  write_predictions(path, ds, r);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 1u + 10u);
  EXPECT_EQ(lines[0], "timestamp,horizon,actual,predicted");
  EXPECT_EQ(lines[1].substr(0, 19), "2013-01-01T06:00,1,");
  EXPECT_EQ(lines[2].substr(0, 19), "2013-01-01T06:30,2,");
  EXPECT_EQ(lines[6].substr(0, 19), "2013-01-01T06:30,1,");
}

}  // namespace
}  // namespace fedrep::metrics
