// Copyright 2025 The ozmul authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OZMUL_MMA_SIM_HPP
#define OZMUL_MMA_SIM_HPP

#include <cstdint>
#include <stdexcept>

#include "ozmul/matrix.hpp"

namespace ozmul {

/// Parameters of a simulated integer matrix multiply-accumulate unit:
/// inputs in I_{t'} (t' + 1 bits), accumulation and output in I_T.
struct MmaConfig {
  int input_width;  // t'
  int acc_width;    // T

  /// INT8 inputs with INT32 accumulators.
  static constexpr MmaConfig int8_int32() { return {7, 31}; }
  /// INT4 inputs with INT32 accumulators.
  static constexpr MmaConfig int4_int32() { return {3, 31}; }

  void validate() const;  // throws std::invalid_argument
};

/// Raised when a simulated accumulator leaves [-2^T, 2^T - 1].  Wraparound
/// is never simulated; an excursion is always a hard error.
class MmaOverflowError : public std::runtime_error {
 public:
  MmaOverflowError(std::size_t row, std::size_t col, int acc_width);
  std::size_t row;
  std::size_t col;
};

/// Widest slice usable when k products are accumulated at once:
/// min{t', floor((T - ceil(log2 k)) / 2)}.  Throws std::domain_error when
/// even one-bit slices would overflow the accumulator.
int optimal_slice_width(const MmaConfig& cfg, std::int64_t k);

/// Slice width when s - 1 extra additions are chained in the accumulator,
/// i.e. the k above replaced by k + s - 1.
int optimal_slice_width_diagonal(const MmaConfig& cfg, std::int64_t k, int s);

/// Largest inner dimension the unit supports with full-width slices:
/// 2^K with K = T + 1 - 2(t' + 1).
std::int64_t max_inner_dim(const MmaConfig& cfg);

/// Exact integer product X*Y (+ C), with every intermediate accumulator
/// value checked against I_T.  Inputs must lie in I_{t'} and C, when given,
/// in I_T; violations throw std::domain_error.
IntMatrix integer_gemm(const IntMatrix& x, const IntMatrix& y, const MmaConfig& cfg);
IntMatrix integer_gemm(const IntMatrix& x, const IntMatrix& y, const IntMatrix& c,
                       const MmaConfig& cfg);

}  // namespace ozmul

#endif  // OZMUL_MMA_SIM_HPP
