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

#include <cassert>
#include <vector>

#include <omp.h>

namespace fedrep::kernels {

void matvec_add(std::span<const double> a, std::size_t rows, std::size_t cols,
                std::span<const double> x, std::span<double> y) {
  assert(a.size() == rows * cols && x.size() == cols && y.size() == rows);
  const double* ap = a.data();
  const double* xp = x.data();
  double* yp = y.data();
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelThreshold)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const double* row = ap + static_cast<std::size_t>(r) * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += row[j] * xp[j];
    yp[r] += s;
  }
}

void matvec_transposed_add(std::span<const double> a, std::size_t rows,
                           std::size_t cols, std::span<const double> v,
                           std::span<double> y) {
  assert(a.size() == rows * cols && v.size() == rows && y.size() == cols);
  const double* ap = a.data();
  const double* vp = v.data();
  double* yp = y.data();
  // Each thread owns a contiguous block of columns and sweeps the rows over
  // it, so reads stay row-contiguous and every column still accumulates in
  // ascending row order.
#pragma omp parallel if (rows * cols >= kParallelThreshold)
  {
    const auto threads = static_cast<std::size_t>(omp_get_num_threads());
    const auto t = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t lo = cols * t / threads;
    const std::size_t hi = cols * (t + 1) / threads;
    std::vector<double> s(hi - lo, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = ap + r * cols;
      const double vr = vp[r];
      for (std::size_t j = lo; j < hi; ++j) s[j - lo] += row[j] * vr;
    }
    for (std::size_t j = lo; j < hi; ++j) yp[j] += s[j - lo];
  }
}

void outer_add(std::span<double> a, std::size_t rows, std::size_t cols,
               std::span<const double> u, std::span<const double> v) {
  assert(a.size() == rows * cols && u.size() == rows && v.size() == cols);
  double* ap = a.data();
  const double* up = u.data();
  const double* vp = v.data();
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelThreshold)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const double ur = up[r];
    if (ur == 0.0) continue;
    double* row = ap + static_cast<std::size_t>(r) * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += ur * vp[j];
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  const double* xp = x.data();
  double* yp = y.data();
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (x.size() >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) yp[i] += alpha * xp[i];
}

void set_num_threads(int threads) {
  static const int default_threads = omp_get_max_threads();
  omp_set_num_threads(threads > 0 ? threads : default_threads);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace fedrep::kernels
