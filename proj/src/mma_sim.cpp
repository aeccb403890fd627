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

#include "ozmul/mma_sim.hpp"

#include <bit>
#include <string>

#include "ozmul/fpcore.hpp"

namespace ozmul {

namespace {

// ceil(log2 k) for k >= 1.
int ceil_log2(std::int64_t k) {
  std::uint64_t u = static_cast<std::uint64_t>(k);
  return std::bit_width(u - 1);
}

}  // namespace

void MmaConfig::validate() const {
  if (input_width < 1) throw std::invalid_argument("MmaConfig: input width must be >= 1");
  if (acc_width > 62)
    throw std::invalid_argument("MmaConfig: accumulator width above 62 is not modeled");
  if (acc_width < 2 * input_width + 1)
    throw std::invalid_argument(
        "MmaConfig: accumulator cannot hold even a single product");
}

MmaOverflowError::MmaOverflowError(std::size_t row_, std::size_t col_, int acc_width)
    : std::runtime_error("integer accumulator overflow at (" + std::to_string(row_) +
                         ", " + std::to_string(col_) + "): value left I_" +
                         std::to_string(acc_width)),
      row(row_),
      col(col_) {}

int optimal_slice_width(const MmaConfig& cfg, std::int64_t k) {
  cfg.validate();
  if (k < 1) throw std::invalid_argument("optimal_slice_width: k must be >= 1");
  int t = std::min(cfg.input_width, (cfg.acc_width - ceil_log2(k)) / 2);
  if (t < 1)
    throw std::domain_error("optimal_slice_width: inner dimension " + std::to_string(k) +
                            " exceeds what I_" + std::to_string(cfg.acc_width) +
                            " accumulation supports");
  return t;
}

int optimal_slice_width_diagonal(const MmaConfig& cfg, std::int64_t k, int s) {
  if (s < 1) throw std::invalid_argument("optimal_slice_width_diagonal: s must be >= 1");
  return optimal_slice_width(cfg, k + s - 1);
}

std::int64_t max_inner_dim(const MmaConfig& cfg) {
  cfg.validate();
  int headroom = cfg.acc_width + 1 - 2 * (cfg.input_width + 1);
  if (headroom < 0)
    throw std::domain_error("max_inner_dim: accumulator too narrow for the input width");
  return std::int64_t{1} << headroom;
}

namespace {

IntMatrix gemm_impl(const IntMatrix& x, const IntMatrix& y, const IntMatrix* c,
                    const MmaConfig& cfg) {
  cfg.validate();
  if (x.cols() != y.rows()) throw std::invalid_argument("integer_gemm: shape mismatch");
  if (c && (c->rows() != x.rows() || c->cols() != y.cols()))
    throw std::invalid_argument("integer_gemm: accumulator shape mismatch");

  const IntFormat in_fmt{cfg.input_width};
  const IntFormat acc_fmt{cfg.acc_width};
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!in_fmt.contains(x.data()[i]))
      throw std::domain_error("integer_gemm: left operand entry outside I_" +
                              std::to_string(cfg.input_width));
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!in_fmt.contains(y.data()[i]))
      throw std::domain_error("integer_gemm: right operand entry outside I_" +
                              std::to_string(cfg.input_width));
  if (c)
    for (std::size_t i = 0; i < c->size(); ++i)
      if (!acc_fmt.contains(c->data()[i]))
        throw std::domain_error("integer_gemm: accumulator input outside I_" +
                                std::to_string(cfg.acc_width));

  const __int128 lo = acc_fmt.min_value();
  const __int128 hi = acc_fmt.max_value();
  std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  IntMatrix out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      __int128 acc = c ? (*c)(i, j) : 0;
      for (std::size_t r = 0; r < k; ++r) {
        acc += static_cast<__int128>(x(i, r)) * y(r, j);
        if (acc < lo || acc > hi) throw MmaOverflowError(i, j, cfg.acc_width);
      }
      out(i, j) = static_cast<std::int64_t>(acc);
    }
  }
  return out;
}

}  // namespace

IntMatrix integer_gemm(const IntMatrix& x, const IntMatrix& y, const MmaConfig& cfg) {
  return gemm_impl(x, y, nullptr, cfg);
}

IntMatrix integer_gemm(const IntMatrix& x, const IntMatrix& y, const IntMatrix& c,
                       const MmaConfig& cfg) {
  return gemm_impl(x, y, &c, cfg);
}

}  // namespace ozmul
