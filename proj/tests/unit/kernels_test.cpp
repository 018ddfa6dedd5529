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

#include "fedrep/kernels.hpp"

#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace fedrep::kernels {
namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

class KernelsTest : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override { set_num_threads(GetParam()); }
  void TearDown() override { set_num_threads(0); }
};

// Shapes on both sides of the parallel threshold.
constexpr std::pair<std::size_t, std::size_t> kShapes[] = {{3, 5}, {64, 17}, {512, 256}, {1, 300}};

TEST_P(KernelsTest, MatVecMatchesSerialBitwise) {
  std::mt19937_64 rng(1);
  for (auto [rows, cols] : kShapes) {
    const auto a = random_vec(rows * cols, rng);
    const auto x = random_vec(cols, rng);
    auto y1 = random_vec(rows, rng);
    auto y2 = y1;
    matvec_add(a, rows, cols, x, y1);
    serial::matvec_add(a, rows, cols, x, y2);
    EXPECT_EQ(y1, y2) << rows << "x" << cols;
  }
}

TEST_P(KernelsTest, MatVecTransposedMatchesSerialBitwise) {
  std::mt19937_64 rng(2);
  for (auto [rows, cols] : kShapes) {
    const auto a = random_vec(rows * cols, rng);
    const auto v = random_vec(rows, rng);
    auto y1 = random_vec(cols, rng);
    auto y2 = y1;
    matvec_transposed_add(a, rows, cols, v, y1);
    serial::matvec_transposed_add(a, rows, cols, v, y2);
    EXPECT_EQ(y1, y2) << rows << "x" << cols;
  }
}

TEST_P(KernelsTest, OuterAddAndAxpyMatchSerialBitwise) {
  std::mt19937_64 rng(3);
  for (auto [rows, cols] : kShapes) {
    auto a1 = random_vec(rows * cols, rng);
    auto a2 = a1;
    auto u = random_vec(rows, rng);
    u[0] = 0.0;
    const auto v = random_vec(cols, rng);
    outer_add(a1, rows, cols, u, v);
    serial::outer_add(a2, rows, cols, u, v);
    EXPECT_EQ(a1, a2);

    axpy(-0.37, a2, a1);
    serial::axpy(-0.37, a2, a2);
    EXPECT_EQ(a1, a2);
  }
}

INSTANTIATE_TEST_SUITE_P(Threads, KernelsTest, ::testing::Values(1, 2, 4));

TEST(Kernels, MatVecSmallExample) {
  // [[1 2] [3 4]] * [1 1] = [3 7]; transpose * [1 1] = [4 6]
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> ones{1, 1};
  std::vector<double> y(2, 0.0), yt(2, 0.0);
  matvec_add(a, 2, 2, ones, y);
  matvec_transposed_add(a, 2, 2, ones, yt);
  EXPECT_EQ(y, (std::vector<double>{3, 7}));
  EXPECT_EQ(yt, (std::vector<double>{4, 6}));
}

}  // namespace
}  // namespace fedrep::kernels
