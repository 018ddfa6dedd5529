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

// Dense linear-algebra kernels used by the LSTM forward and backward passes.
//
// Matrices are row-major, `rows` x `cols`. Every kernel in `fedrep::kernels`
// is OpenMP-parallel over independent output elements; each output element
// is reduced serially in a fixed index order, so results are bit-identical to
// the `fedrep::kernels::serial` reference for any thread count.

#include <cstddef>
#include <span>

namespace fedrep::kernels {

// Work (rows * cols) below which the parallel kernels stay on one thread.
inline constexpr std::size_t kParallelThreshold = 1 << 14;

// y += A x
void matvec_add(std::span<const double> a, std::size_t rows, std::size_t cols,
                std::span<const double> x, std::span<double> y);

// y += A^T v
void matvec_transposed_add(std::span<const double> a, std::size_t rows,
                           std::size_t cols, std::span<const double> v,
                           std::span<double> y);

// A += u v^T
void outer_add(std::span<double> a, std::size_t rows, std::size_t cols,
               std::span<const double> u, std::span<const double> v);

// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

namespace serial {

void matvec_add(std::span<const double> a, std::size_t rows, std::size_t cols,
                std::span<const double> x, std::span<double> y);
void matvec_transposed_add(std::span<const double> a, std::size_t rows,
                           std::size_t cols, std::span<const double> v,
                           std::span<double> y);
void outer_add(std::span<double> a, std::size_t rows, std::size_t cols,
               std::span<const double> u, std::span<const double> v);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace serial

// Threads used by the parallel kernels and the client loop; 0 restores the
// OpenMP default.
void set_num_threads(int threads);
int max_threads();

}  // namespace fedrep::kernels
