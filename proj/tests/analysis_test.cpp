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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ozmul/analysis.hpp"
#include "ozmul/generators.hpp"
#include "ozmul/oracle.hpp"
#include "ozmul/scheme.hpp"

using namespace ozmul;

namespace {

Matrix row_vector(std::vector<double> v) {
  Matrix m(1, v.size());
  for (std::size_t j = 0; j < v.size(); ++j) m(0, j) = v[j];
  return m;
}

}  // namespace

TEST_CASE("kappa of the worked example rows") {
  Matrix a = row_vector({1.5625, 8.0, -3.6875});
  CHECK(kappa(a, BlockOrientation::kRows) == doctest::Approx(10.24).epsilon(1e-12));
}

TEST_CASE("kappa of equal entries is 2") {
  Matrix a(3, 4, 0.7);
  CHECK(kappa(a, BlockOrientation::kRows) == 2.0);
  CHECK(kappa(a, BlockOrientation::kColumns) == 2.0);
}

TEST_CASE("kappa of a badly scaled pair matches the closed form") {
  double x = 0.8125;
  Matrix a = row_vector({std::ldexp(x, -100), 1.0});
  // 2 * max/min with max = 1, min = 2^-100 x.
  CHECK(kappa(a, BlockOrientation::kRows) ==
        doctest::Approx(std::ldexp(2.0 / x, 100)).epsilon(1e-12));
}

TEST_CASE("kappa ignores zero entries and flags zero blocks") {
  Matrix a(2, 3);
  a(0, 0) = 4.0;
  a(0, 2) = 1.0;  // zero in between should not blow up the ratio
  a(1, 1) = 3.0;
  CHECK(kappa(a, BlockOrientation::kRows) == 8.0);
  Matrix z(2, 2);
  CHECK(kappa(z, BlockOrientation::kRows) == 2.0);
  ScalingProfile p = scaling_profile(z, z);
  CHECK(p.a_has_zero_block);
  CHECK(p.b_has_zero_block);
  CHECK(p.kappa_a == 2.0);
}

TEST_CASE("kappa is invariant under power-of-two scaling and row permutation") {
  std::mt19937_64 rng(3);
  Matrix a = random_uniform(5, 6, 99, 0.1, 3.0);
  double base = kappa(a, BlockOrientation::kRows);
  Matrix scaled = a;
  for (std::size_t i = 0; i < scaled.size(); ++i)
    scaled.data()[i] = std::ldexp(scaled.data()[i], 12);
  CHECK(kappa(scaled, BlockOrientation::kRows) == base);
  Matrix permuted(5, 6);
  std::vector<int> perm{3, 1, 4, 0, 2};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j) permuted(i, j) = a(perm[i], j);
  CHECK(kappa(permuted, BlockOrientation::kRows) == base);
}

TEST_CASE("zeta evaluates its three terms") {
  double z = zeta(2.0, 2.0, 8, 8, 7);
  CHECK(z == 0x1p-55 + 0x1p-55 + 0x1p-110);
  CHECK(zeta(2.0, 3.0, 4, 6, 5) == zeta(3.0, 2.0, 6, 4, 5));  // symmetry
  CHECK(zeta(2.0, 2.0, 16, 8, 7) < zeta(2.0, 2.0, 8, 8, 7));  // monotone in s_A
}

TEST_CASE("gamma factor") {
  CHECK(gamma_factor(0, 0x1p-53) == 0.0);
  CHECK(gamma_factor(1, 0x1p-53) == 0x1p-53 / (1.0 - 0x1p-53));
  CHECK(gamma_factor(std::int64_t{1} << 52, 0x1p-53) == 1.0);
  CHECK_THROWS_AS(gamma_factor(std::int64_t{1} << 53, 0x1p-53), std::domain_error);
}

TEST_CASE("bound coefficient structure for the full schedule") {
  Matrix a = random_uniform(6, 6, 5);
  Matrix b = random_uniform(6, 6, 6);
  MmaConfig cfg = MmaConfig::int8_int32();
  MultiplyPlan plan = make_plan(cfg, 6, 4, 4, ScheduleKind::kFull);
  ErrorReport report = error_bound(a, b, plan);
  CHECK(report.kind == BoundKind::kFull);
  double expect = report.zeta_ab + report.gamma_psi * (1.0 + report.zeta_ab);
  CHECK(report.coefficient == expect);
  for (std::size_t i = 0; i < report.bound.size(); ++i)
    CHECK(report.bound.data()[i] >= 0.0);
}

TEST_CASE("first-order coefficient is close to the full one when truncation is deep") {
  Matrix a = random_uniform(4, 4, 7);
  Matrix b = random_uniform(4, 4, 8);
  MmaConfig cfg = MmaConfig::int8_int32();
  MultiplyPlan plan = make_plan(cfg, 4, 9, 9, ScheduleKind::kFull);
  ErrorReport report = error_bound(a, b, plan);
  CHECK(report.first_order_coefficient <= 2.0 * report.coefficient);
  CHECK(report.coefficient <= 2.0 * report.first_order_coefficient);
}

TEST_CASE("measured error is inside the a-priori bound") {
  std::mt19937_64 rng(11);
  MmaConfig cfg = MmaConfig::int8_int32();
  for (int trial = 0; trial < 25; ++trial) {
    std::size_t n = 4 + rng() % 12;
    Matrix a = random_normal(n, n, rng());
    Matrix b = random_normal(n, n, rng());
    int sa = 1 + static_cast<int>(rng() % 6);
    int sb = 1 + static_cast<int>(rng() % 6);
    auto kind = (rng() & 1) ? ScheduleKind::kFull : ScheduleKind::kReduced;
    auto strat = std::vector<Accumulation>{Accumulation::kFloatPerProduct,
                                           Accumulation::kDiagonalInteger,
                                           Accumulation::kLevelledExact}[rng() % 3];
    MultiplyPlan plan = make_plan(cfg, n, sa, sb, kind, strat);
    Matrix chat = multiply(a, b, cfg, plan).c;
    Matrix c = exact_gemm(a, b).to_matrix();
    ErrorReport report = error_bound(a, b, plan);
    for (std::size_t idx = 0; idx < chat.size(); ++idx) {
      CAPTURE(trial);
      REQUIRE(std::abs(chat.data()[idx] - c.data()[idx]) <= report.bound.data()[idx]);
    }
  }
}

TEST_CASE("error is zero and bound nonnegative at the exact slice counts") {
  MmaConfig cfg = MmaConfig::int8_int32();
  Matrix a = random_uniform(5, 5, 21);
  Matrix b = random_uniform(5, 5, 22);
  int t = optimal_slice_width(cfg, 5);
  int sa = min_exact_slices(a, t, BlockOrientation::kRows);
  int sb = min_exact_slices(b, t, BlockOrientation::kColumns);
  MultiplyPlan plan = make_plan(cfg, 5, sa, sb, ScheduleKind::kFull);
  Matrix chat = multiply(a, b, cfg, plan).c;
  Matrix c = exact_gemm(a, b).to_matrix();
  CHECK(chat == c);
  ErrorReport report = error_bound(a, b, plan);
  for (std::size_t idx = 0; idx < report.bound.size(); ++idx)
    CHECK(report.bound.data()[idx] >= 0.0);
}

TEST_CASE("slice selection for a well-scaled pair lands at 8 + 8") {
  SliceSelection sel = select_slices(2.0, 2.0, 7, 0x1p-53, 24);
  CHECK(sel.slices_a == 8);
  CHECK(sel.slices_b == 8);
  CHECK(sel.products == 36);
}

TEST_CASE("slice selection is asymmetric for one-sided badness") {
  SliceSelection sel = select_slices(0x1p101, 2.0, 7, 0x1p-53, 32);
  CHECK(sel.slices_a > sel.slices_b);
  CHECK(sel.slices_b <= 8);
  // Feasibility at the choice.
  CHECK(sel.lhs <= sel.target);
}

TEST_CASE("slice selection minimizes the product count over feasible pairs") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    double ka = std::ldexp(2.0, static_cast<int>(rng() % 40));
    double kb = std::ldexp(2.0, static_cast<int>(rng() % 40));
    int s_max = 16;
    SliceSelection sel;
    try {
      sel = select_slices(ka, kb, 7, 0x1p-53, s_max);
    } catch (const SelectionInfeasible&) {
      continue;
    }
    // Independent brute force with the same per-pair target definition.
    std::int64_t best_cost = -1;
    for (int sa = 1; sa <= s_max; ++sa)
      for (int sb = 1; sb <= s_max; ++sb) {
        double lhs = std::ldexp(ka, -sa * 7) + std::ldexp(kb, -sb * 7);
        long long psi =
            plan_levels(53, 7, 31, std::max(sa, sb)).inexact_adds;
        double target = gamma_factor(std::max(psi, 1LL), 0x1p-53);
        if (lhs > target) continue;
        std::int64_t cost = chi(sa, sb);
        if (best_cost < 0 || cost < best_cost) best_cost = cost;
      }
    REQUIRE(best_cost == sel.products);
  }
}

TEST_CASE("infeasible selection reports the gap") {
  CHECK_THROWS_AS(select_slices(0x1p200, 0x1p200, 7, 0x1p-53, 18),
                  SelectionInfeasible);
  try {
    select_slices(0x1p200, 0x1p200, 7, 0x1p-53, 18);
  } catch (const SelectionInfeasible& e) {
    CHECK(e.gap > 1.0);
    CHECK(e.best_lhs > e.target);
  }
}

TEST_CASE("explicit targets override the derived one") {
  SliceSelection strict = select_slices(2.0, 2.0, 7, 0x1p-53, 24,
                                        {.target = 0x1p-45});
  SliceSelection loose = select_slices(2.0, 2.0, 7, 0x1p-53, 24,
                                       {.target = 0x1p-20});
  CHECK(loose.products < strict.products);
  CHECK(strict.lhs <= 0x1p-45);
  CHECK(loose.lhs <= 0x1p-20);
}
