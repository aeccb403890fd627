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

#ifndef OZMUL_SCHEME_HPP
#define OZMUL_SCHEME_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ozmul/matrix.hpp"
#include "ozmul/mma_sim.hpp"
#include "ozmul/slicing.hpp"

namespace ozmul {

enum class ScheduleKind {
  kFull,     // all s_A * s_B slice products
  kReduced,  // only products with l + h <= max(s_A, s_B) + 1
};

/// Which slice products (l, h) are computed.  `diag_sum_limit` overrides the
/// reduced cutoff on l + h; it exists for experiments that drop diagonals.
struct Schedule {
  ScheduleKind kind = ScheduleKind::kReduced;
  std::optional<int> diag_sum_limit;

  bool contains(int l, int h, int slices_a, int slices_b) const;
  int max_diag_sum(int slices_a, int slices_b) const;  // largest l + h computed
};

enum class Accumulation {
  kFloatPerProduct,   // one float add per slice product
  kDiagonalInteger,   // same-scale products summed in the accumulator first
  kLevelledExact,     // consecutive diagonals grouped into exactly-summable levels
};

/// Grouping of product diagonals into levels whose in-level float sums are
/// exact by construction.  Diagonals are indexed from 0 (l + h = 2).
struct LevelPlan {
  std::vector<std::pair<int, int>> levels;  // inclusive [first, last] diagonal
  long long inexact_adds = 0;               // worst case per element, = levels - 1
};

/// Number of slice products under the reduced schedule.
std::int64_t chi(int slices_a, int slices_b);

/// Spare carry locations of a level spanning diagonals first..last:
/// sum over l in [first, last] of (2^t - l).  May be negative.
std::int64_t spare_carries(int first_diag, int last_diag, int width);

/// Packs `num_diagonals` diagonals into levels for a float format with
/// `precision` bits when the integer products occupy `acc_bits_used` bits.
/// The first level holds diagonal 0 plus Q more, later levels Q each, with
/// Q = floor((p - acc_bits_used - 1 - extra) / t) and extra the carry
/// reserve derived from spare_carries when that turns negative.
LevelPlan plan_levels(int precision, int width, int acc_bits_used, int num_diagonals);

/// Greatest number of k-length slice products that can be chained in the
/// accumulator without risking overflow: 2^(T - 2t - ceil(log2 k)).  The
/// diagonal-integer strategy flushes its running sum to float at this count.
std::int64_t diagonal_flush_threshold(const MmaConfig& cfg, int width, std::int64_t k);

/// Everything multiply() needs to know about one invocation.
struct MultiplyPlan {
  int slices_a = 1;
  int slices_b = 1;
  int width = 7;  // t
  Schedule schedule;
  Accumulation strategy = Accumulation::kLevelledExact;
  SliceMode mode = SliceMode::kTruncate;
  int precision = 53;    // p of the accumulation float format
  int acc_bits_used = 0; // T' = 2t + ceil(log2 k)
  LevelPlan levels;
  long long psi = 0;     // worst-case inexact float additions per element
};

/// Builds a plan for multiplying an m x k by a k x n matrix: picks the slice
/// width from cfg and k, packs levels, and derives psi for the strategy.
MultiplyPlan make_plan(const MmaConfig& cfg, std::int64_t k, int slices_a, int slices_b,
                       ScheduleKind schedule = ScheduleKind::kReduced,
                       Accumulation strategy = Accumulation::kLevelledExact,
                       SliceMode mode = SliceMode::kTruncate, int precision = 53);

struct Diagnostics {
  std::int64_t products = 0;       // slice products computed
  std::int64_t integer_adds = 0;   // accumulator additions inside the MMA unit
  std::int64_t float_adds = 0;     // matrix additions in float
  std::int64_t flushes = 0;        // integer-to-float flushes (diagonal strategy)
  long long realized_psi = 0;      // max inexact float adds observed per element
  long long planned_psi = 0;
  int width = 0;
  int acc_bits_used = 0;
};

struct MultiplyResult {
  Matrix c;
  Diagnostics diagnostics;
};

/// The emulated matrix product: split, schedule, multiply slices exactly on
/// the simulated unit, and accumulate.  Both factors must be clean binary64
/// (finite, no negative zeros) and k must respect the plan's capacity.
MultiplyResult multiply(const Matrix& a, const Matrix& b, const MmaConfig& cfg,
                        const MultiplyPlan& plan);

/// General form d = alpha * (A B) + beta * C with the product emulated and
/// the scalar scale and addition done in plain binary64.
MultiplyResult multiply_axpby(double alpha, const Matrix& a, const Matrix& b,
                              double beta, const Matrix& c, const MmaConfig& cfg,
                              const MultiplyPlan& plan);

}  // namespace ozmul

#endif  // OZMUL_SCHEME_HPP
