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

#include <cassert>
#include <vector>

#include "fedrep/kernels.hpp"

namespace fedrep::kernels::serial {

void matvec_add(std::span<const double> a, std::size_t rows, std::size_t cols,
                std::span<const double> x, std::span<double> y) {
  assert(a.size() == rows * cols && x.size() == cols && y.size() == rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += a[r * cols + j] * x[j];
    y[r] += s;
  }
}

void matvec_transposed_add(std::span<const double> a, std::size_t rows,
                           std::size_t cols, std::span<const double> v,
                           std::span<double> y) {
  assert(a.size() == rows * cols && v.size() == rows && y.size() == cols);
  // Per-column accumulation runs in ascending row order, as in the parallel
  // kernel.
  std::vector<double> s(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) s[j] += a[r * cols + j] * v[r];
  }
  for (std::size_t j = 0; j < cols; ++j) y[j] += s[j];
}

void outer_add(std::span<double> a, std::size_t rows, std::size_t cols,
               std::span<const double> u, std::span<const double> v) {
  assert(a.size() == rows * cols && u.size() == rows && v.size() == cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (u[r] == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) a[r * cols + j] += u[r] * v[j];
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace fedrep::kernels::serial
