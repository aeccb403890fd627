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

#include "ozmul/scheme.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ozmul/oracle.hpp"

namespace ozmul {

namespace {

int ceil_log2(std::int64_t k) {
  return std::bit_width(static_cast<std::uint64_t>(k) - 1);
}

}  // namespace

bool Schedule::contains(int l, int h, int slices_a, int slices_b) const {
  if (l < 1 || l > slices_a || h < 1 || h > slices_b) return false;
  return l + h <= max_diag_sum(slices_a, slices_b);
}

int Schedule::max_diag_sum(int slices_a, int slices_b) const {
  int base = kind == ScheduleKind::kFull ? slices_a + slices_b
                                         : std::max(slices_a, slices_b) + 1;
  if (diag_sum_limit) base = std::min(base, *diag_sum_limit);
  return std::max(base, 2);
}

std::int64_t chi(int slices_a, int slices_b) {
  if (slices_a < 1 || slices_b < 1)
    throw std::invalid_argument("chi: slice counts must be >= 1");
  std::int64_t s_min = std::min(slices_a, slices_b);
  std::int64_t s_max = std::max(slices_a, slices_b);
  return s_min * (2 * s_max - s_min + 1) / 2;
}

std::int64_t spare_carries(int first_diag, int last_diag, int width) {
  if (first_diag < 1 || last_diag < first_diag || width < 1 || width > 61)
    throw std::invalid_argument("spare_carries: bad arguments");
  __int128 span = last_diag - first_diag + 1;
  __int128 value = span * ((__int128{1} << (width + 1)) - last_diag - first_diag) / 2;
  if (value > INT64_MAX || value < INT64_MIN)
    throw std::overflow_error("spare_carries: result out of range");
  return static_cast<std::int64_t>(value);
}

LevelPlan plan_levels(int precision, int width, int acc_bits_used, int num_diagonals) {
  if (width < 1) throw std::invalid_argument("plan_levels: width must be >= 1");
  LevelPlan plan;
  if (num_diagonals < 1) return plan;

  // Carry reserve: when the spare carry locations over the widest possible
  // level run out, the deficit costs ceil(log2(-eta)) extra bits.  Diagonal 0
  // contributes a single carry that the -1 below already covers.
  int extra = 0;
  if (num_diagonals >= 2) {
    std::int64_t eta = spare_carries(1, num_diagonals - 1, width);
    if (eta < 0) extra = ceil_log2(-eta);
  }

  int headroom = precision - acc_bits_used - 1 - extra;
  int per_level = headroom >= 0 ? headroom / width : 0;

  // The first level holds diagonal 0 plus per_level shifted diagonals; every
  // later level starts with a shift, so it holds per_level diagonals (at
  // least one, since a single diagonal always converts exactly).
  int first = 0;
  bool initial = true;
  while (first < num_diagonals) {
    int size = initial ? per_level + 1 : std::max(per_level, 1);
    int last = std::min(first + size - 1, num_diagonals - 1);
    plan.levels.emplace_back(first, last);
    first = last + 1;
    initial = false;
  }
  plan.inexact_adds = static_cast<long long>(plan.levels.size()) - 1;
  return plan;
}

std::int64_t diagonal_flush_threshold(const MmaConfig& cfg, int width, std::int64_t k) {
  cfg.validate();
  if (width < 1 || k < 1)
    throw std::invalid_argument("diagonal_flush_threshold: bad arguments");
  int headroom = cfg.acc_width - 2 * width - ceil_log2(k);
  if (headroom < 0)
    throw std::domain_error(
        "diagonal_flush_threshold: accumulator cannot hold one product sum");
  return std::int64_t{1} << std::min(headroom, 62);
}

namespace {

// Count of (l, h) pairs on diagonal `d` (0-based, l + h = d + 2).
int diagonal_width(int d, int slices_a, int slices_b) {
  int sum = d + 2;
  int lo = std::max(1, sum - slices_b);
  int hi = std::min(slices_a, sum - 1);
  return std::max(0, hi - lo + 1);
}

std::int64_t count_products(const Schedule& schedule, int slices_a, int slices_b) {
  std::int64_t total = 0;
  int diagonals = schedule.max_diag_sum(slices_a, slices_b) - 1;
  for (int d = 0; d < diagonals; ++d) total += diagonal_width(d, slices_a, slices_b);
  return total;
}

}  // namespace

MultiplyPlan make_plan(const MmaConfig& cfg, std::int64_t k, int slices_a, int slices_b,
                       ScheduleKind schedule, Accumulation strategy, SliceMode mode,
                       int precision) {
  if (slices_a < 1 || slices_b < 1)
    throw std::invalid_argument("make_plan: slice counts must be >= 1");
  MultiplyPlan plan;
  plan.slices_a = slices_a;
  plan.slices_b = slices_b;
  plan.schedule.kind = schedule;
  plan.strategy = strategy;
  plan.mode = mode;
  plan.precision = precision;
  plan.width = optimal_slice_width(cfg, k);
  plan.acc_bits_used = 2 * plan.width + ceil_log2(k);

  int diagonals = plan.schedule.max_diag_sum(slices_a, slices_b) - 1;
  plan.levels = plan_levels(precision, plan.width, plan.acc_bits_used, diagonals);

  switch (strategy) {
    case Accumulation::kFloatPerProduct:
      plan.psi = count_products(plan.schedule, slices_a, slices_b) - 1;
      break;
    case Accumulation::kLevelledExact:
      plan.psi = plan.levels.inexact_adds;
      break;
    case Accumulation::kDiagonalInteger: {
      std::int64_t flush = diagonal_flush_threshold(cfg, plan.width, k);
      if (plan.precision < cfg.acc_width)  // keep chunk conversions exact
        flush = std::min(flush, std::int64_t{1} << std::max(
                                    0, plan.precision - plan.acc_bits_used));
      std::int64_t chunks = 0;
      for (int d = 0; d < diagonals; ++d) {
        int width_d = diagonal_width(d, slices_a, slices_b);
        if (width_d > 0) chunks += (width_d + flush - 1) / flush;
      }
      plan.psi = chunks - 1;
      break;
    }
  }
  plan.psi = std::max(plan.psi, 0LL);
  return plan;
}

namespace {

// a + b with an exactness flag from the Knuth two-sum residual.
inline double tracked_add(double a, double b, bool& inexact) {
  double s = a + b;
  double bp = s - a;
  double err = (a - (s - bp)) + (b - bp);
  inexact = err != 0.0;
  return s;
}

struct Accumulator {
  Matrix sum;
  std::vector<int> inexact_counts;

  explicit Accumulator(std::size_t m, std::size_t n)
      : sum(m, n), inexact_counts(m * n, 0) {}

  // sum += term entrywise, tracking which elements rounded.
  void add(const Matrix& term) {
    for (std::size_t idx = 0; idx < sum.size(); ++idx) {
      bool inexact = false;
      sum.data()[idx] = tracked_add(sum.data()[idx], term.data()[idx], inexact);
      if (inexact) ++inexact_counts[idx];
    }
  }

  long long max_inexact() const {
    long long best = 0;
    for (int c : inexact_counts) best = std::max(best, static_cast<long long>(c));
    return best;
  }
};

// term(i, j) = E(i, j) * 2^(qa_i + qb_j + weight_exp), exactly.
Matrix scaled_product(const IntMatrix& e, const std::vector<int>& qa,
                      const std::vector<int>& qb, int weight_exp) {
  Matrix out(e.rows(), e.cols());
  for (std::size_t i = 0; i < e.rows(); ++i)
    for (std::size_t j = 0; j < e.cols(); ++j) {
      std::int64_t v = e(i, j);
      if (v != 0)
        out(i, j) = std::ldexp(static_cast<double>(v), qa[i] + qb[j] + weight_exp);
    }
  return out;
}

}  // namespace

MultiplyResult multiply(const Matrix& a, const Matrix& b, const MmaConfig& cfg,
                        const MultiplyPlan& plan) {
  cfg.validate();
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: shape mismatch");
  if (!is_clean_input(a) || !is_clean_input(b))
    throw std::invalid_argument(
        "multiply: inputs must be finite with no negative zeros");

  const std::int64_t k = static_cast<std::int64_t>(a.cols());
  if (k < 1) throw std::invalid_argument("multiply: empty inner dimension");
  const int t = plan.width;
  if (2 * t + ceil_log2(k) > cfg.acc_width)
    throw std::domain_error("multiply: inner dimension " + std::to_string(k) +
                            " exceeds the capacity limit " +
                            std::to_string(max_inner_dim(cfg)) + " of this unit");
  const int acc_bits_used = 2 * t + ceil_log2(k);
  // Conversions from the accumulator to float must be exact.
  if (plan.precision < acc_bits_used)
    throw std::domain_error("multiply: accumulation format too narrow for exact "
                            "conversion; needs " + std::to_string(acc_bits_used) +
                            " bits");

  SlicedMatrix sa = split_rows(a, t, plan.slices_a, plan.mode);
  SlicedMatrix sb = split_cols(b, t, plan.slices_b, plan.mode);

  const std::size_t m = a.rows(), n = b.cols();
  Diagnostics diag;
  diag.width = t;
  diag.acc_bits_used = acc_bits_used;
  diag.planned_psi = plan.psi;

  // Weight of diagonal d folds the mode-dependent slice boundaries:
  // endbit_a(l) + endbit_b(h) is constant along a diagonal.
  auto weight_exp = [&](int d) {
    return plan.mode == SliceMode::kNearest ? -(d + 2) * t + 2 : -(d + 2) * t;
  };
  auto pairs_of = [&](int d) {
    int sum = d + 2;
    int lo = std::max(1, sum - plan.slices_b);
    int hi = std::min(plan.slices_a, sum - 1);
    std::vector<std::pair<int, int>> out;
    for (int l = lo; l <= hi; ++l) out.emplace_back(l, sum - l);
    return out;
  };

  const int diagonals = plan.schedule.max_diag_sum(plan.slices_a, plan.slices_b) - 1;
  Accumulator acc(m, n);

  switch (plan.strategy) {
    case Accumulation::kFloatPerProduct: {
      for (int d = 0; d < diagonals; ++d) {
        for (auto [l, h] : pairs_of(d)) {
          IntMatrix e = integer_gemm(sa.slices[l - 1], sb.slices[h - 1], cfg);
          diag.products += 1;
          diag.integer_adds += static_cast<std::int64_t>(k - 1) * m * n;
          acc.add(scaled_product(e, sa.scale_exponents, sb.scale_exponents,
                                 weight_exp(d)));
          diag.float_adds += 1;
        }
      }
      break;
    }
    case Accumulation::kDiagonalInteger: {
      std::int64_t flush = diagonal_flush_threshold(cfg, t, k);
      if (plan.precision < cfg.acc_width)
        flush = std::min(flush,
                         std::int64_t{1} << std::max(0, plan.precision - acc_bits_used));
      for (int d = 0; d < diagonals; ++d) {
        auto pairs = pairs_of(d);
        std::size_t taken = 0;
        std::int64_t chunks = 0;
        while (taken < pairs.size()) {
          auto [l0, h0] = pairs[taken];
          IntMatrix chain = integer_gemm(sa.slices[l0 - 1], sb.slices[h0 - 1], cfg);
          diag.products += 1;
          diag.integer_adds += static_cast<std::int64_t>(k - 1) * m * n;
          std::size_t in_chain = 1;
          while (in_chain < static_cast<std::size_t>(flush) &&
                 taken + in_chain < pairs.size()) {
            auto [l, h] = pairs[taken + in_chain];
            chain = integer_gemm(sa.slices[l - 1], sb.slices[h - 1], chain, cfg);
            diag.products += 1;
            diag.integer_adds += static_cast<std::int64_t>(k) * m * n;
            ++in_chain;
          }
          acc.add(scaled_product(chain, sa.scale_exponents, sb.scale_exponents,
                                 weight_exp(d)));
          diag.float_adds += 1;
          taken += in_chain;
          ++chunks;
        }
        if (chunks > 1) diag.flushes += chunks - 1;
      }
      break;
    }
    case Accumulation::kLevelledExact: {
      LevelPlan levels = plan.levels;
      if (levels.levels.empty() || levels.levels.front().first != 0 ||
          levels.levels.back().second != diagonals - 1)
        levels = plan_levels(plan.precision, t, acc_bits_used, diagonals);

      // One exactly-computed matrix per level; the adds inside a level are
      // exact by the plan's bit budget.
      std::vector<Accumulator> level_sums;
      level_sums.reserve(levels.levels.size());
      for (auto [first, last] : levels.levels) {
        Accumulator level_sum(m, n);
        for (int d = first; d <= std::min(last, diagonals - 1); ++d) {
          for (auto [l, h] : pairs_of(d)) {
            IntMatrix e = integer_gemm(sa.slices[l - 1], sb.slices[h - 1], cfg);
            diag.products += 1;
            diag.integer_adds += static_cast<std::int64_t>(k - 1) * m * n;
            level_sum.add(scaled_product(e, sa.scale_exponents, sb.scale_exponents,
                                         weight_exp(d)));
            diag.float_adds += 1;
          }
        }
        level_sums.push_back(std::move(level_sum));
      }

      if (level_sums.size() == 1) {
        acc = std::move(level_sums.front());
      } else {
        // Combine the level values exactly and round once per element, so
        // the only rounding in the whole accumulation is the final one.
        for (const Accumulator& ls : level_sums)
          for (std::size_t idx = 0; idx < m * n; ++idx)
            acc.inexact_counts[idx] += ls.inexact_counts[idx];
        ExactValue total;
        for (std::size_t idx = 0; idx < m * n; ++idx) {
          total.clear();
          for (const Accumulator& ls : level_sums) total.add(ls.sum.data()[idx]);
          acc.sum.data()[idx] = total.to_double();
        }
        diag.float_adds += static_cast<std::int64_t>(level_sums.size()) - 1;
      }
      break;
    }
  }

  diag.realized_psi = acc.max_inexact();
  return {std::move(acc.sum), diag};
}

MultiplyResult multiply_axpby(double alpha, const Matrix& a, const Matrix& b,
                              double beta, const Matrix& c, const MmaConfig& cfg,
                              const MultiplyPlan& plan) {
  if (c.rows() != a.rows() || c.cols() != b.cols())
    throw std::invalid_argument("multiply_axpby: shape mismatch");
  MultiplyResult r = multiply(a, b, cfg, plan);
  for (std::size_t idx = 0; idx < r.c.size(); ++idx)
    r.c.data()[idx] = alpha * r.c.data()[idx] + beta * c.data()[idx];
  return r;
}

}  // namespace ozmul
