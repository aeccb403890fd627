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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

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

Matrix col_vector(std::vector<double> v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

}  // namespace

TEST_CASE("exact product of the worked example") {
  Matrix a = row_vector({1.5625, 8.0, -3.6875});
  Matrix b = col_vector({1.3828125, -7.625, 3.625});
  ExactProduct p = exact_gemm(a, b);
  CHECK(p.entry(0, 0).to_double() == -72.20654296875);
  CHECK(p.entry(0, 0).equals_double(-72.20654296875));
}

TEST_CASE("exact product of zero is zero") {
  Matrix a(2, 3);
  Matrix b(3, 2, 1.5);
  ExactProduct p = exact_gemm(a, b);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(p.entry(i, j).is_zero());
      CHECK(p.entry(i, j).to_double() == 0.0);
    }
}

TEST_CASE("exact product matches binary64 when every step is exact") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix a(4, 4), b(4, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.data()[i] = std::ldexp((rng() & 1) ? 1.0 : -1.0,
                               static_cast<int>(rng() % 16) - 8);
      b.data()[i] = std::ldexp((rng() & 1) ? 1.0 : -1.0,
                               static_cast<int>(rng() % 16) - 8);
    }
    // Power-of-two entries: the triple loop is exact except for potential
    // cancellation, which is also exact here.
    Matrix plain = gemm_reference(a, b);
    Matrix rounded = exact_gemm(a, b).to_matrix();
    REQUIRE(plain == rounded);
  }
}

TEST_CASE("summation order does not change the exact result") {
  std::mt19937_64 rng(5);
  std::vector<double> values(40);
  for (double& v : values) {
    double frac = std::ldexp(static_cast<double>(rng() >> 11), -53);
    v = std::ldexp(1.0 + frac, static_cast<int>(rng() % 240) - 120) *
        ((rng() & 1) ? 1.0 : -1.0);
  }
  ExactValue reference;
  for (double v : values) reference.add(v);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(values.begin(), values.end(), rng);
    ExactValue shuffled;
    for (double v : values) shuffled.add(v);
    CHECK(shuffled.to_double() == reference.to_double());
    ExactValue diff = shuffled;
    diff.negate();
    diff.add(reference);
    CHECK(diff.is_zero());
  }
}

TEST_CASE("rounding to binary64 matches long-division cross-check") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    // Sum of a handful of scaled values, compared against the sum computed
    // with __float128-free pairwise exact arithmetic at matching scales.
    double x = std::ldexp(static_cast<double>(rng() >> 11) + 1.0,
                          static_cast<int>(rng() % 40) - 20);
    double y = std::ldexp(static_cast<double>(rng() >> 11) + 1.0,
                          static_cast<int>(rng() % 40) - 20);
    ExactValue v;
    v.add_product(x, y);
    // x * y with one rounding is exactly fl(xy), which is what to_double
    // must reproduce for a two-factor product.
    CHECK(v.to_double() == x * y);
  }
}

TEST_CASE("forward error basics") {
  ExactValue c = ExactValue::from_double(-72.20654296875);
  CHECK(forward_error(-72.20654296875, c) == 0.0);
  double err = forward_error(-72.21875, c);
  CHECK(err == doctest::Approx(1.6909e-4).epsilon(1e-3));
  ExactValue two = ExactValue::from_double(2.0);
  CHECK(forward_error(4.0, two) == 1.0);
  ExactValue zero;
  CHECK(forward_error(0.0, zero) == 0.0);
  CHECK(std::isinf(forward_error(1.0, zero)));
}

TEST_CASE("max elementwise error handles rounded references") {
  std::mt19937_64 rng(11);
  Matrix a = random_uniform(6, 6, 77);
  Matrix b = random_uniform(6, 6, 78);
  ExactProduct exact = exact_gemm(a, b);
  Matrix rounded = exact.to_matrix();
  double err = max_elementwise_error(rounded, exact);
  CHECK(err <= 0x1p-53 / (1.0 - 0x1p-53));
  Matrix self = Matrix::identity(4);
  ExactProduct pid = exact_gemm(self, self);
  CHECK(max_elementwise_error(self, pid) == 0.0);
}

TEST_CASE("normwise error of the reference itself is zero") {
  Matrix a = random_uniform(5, 4, 31);
  Matrix b = random_uniform(4, 5, 32);
  Matrix c(5, 5);
  ExactProduct exact = exact_gemm_axpby(1.0, a, b, 0.0, c);
  Matrix d = exact.to_matrix();
  CHECK(normwise_gemm_error(d, exact, a, b, c, 1.0, 0.0) == 0.0);
}

TEST_CASE("normwise error distinguishes good and truncated emulation") {
  MmaConfig cfg = MmaConfig::int8_int32();
  Matrix a = random_uniform(64, 64, 1001);
  Matrix b = random_uniform(64, 64, 1002);
  Matrix c(64, 64);
  ExactProduct exact = exact_gemm_axpby(1.0, a, b, 0.0, c);

  MultiplyPlan good = make_plan(cfg, 64, 8, 8, ScheduleKind::kReduced);
  Matrix d_good = multiply(a, b, cfg, good).c;
  CHECK(normwise_gemm_error(d_good, exact, a, b, c, 1.0, 0.0) < 0x1p-53);

  MultiplyPlan coarse = make_plan(cfg, 64, 3, 3, ScheduleKind::kReduced);
  Matrix d_coarse = multiply(a, b, cfg, coarse).c;
  CHECK(normwise_gemm_error(d_coarse, exact, a, b, c, 1.0, 0.0) > 0x1p-53);
}

TEST_CASE("scaled residual is tiny for an exactly solved diagonal system") {
  std::size_t n = 40;
  Matrix a(n, n);
  std::vector<double> b(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = std::ldexp(1.0, static_cast<int>(i % 7) - 3);
    b[i] = static_cast<double>(i + 1);
    x[i] = b[i] / a(i, i);  // exact: power-of-two divisor
  }
  CHECK(hpl_residual(a, x, b) == 0.0);
}

TEST_CASE("scaled residual explodes for a corrupted solution") {
  std::size_t n = 100;
  Matrix a = Matrix::identity(n);
  std::vector<double> b(n, 1.0);
  std::vector<double> x(n, 1.0);
  x[3] += 1.0;
  CHECK(hpl_residual(a, x, b) > 1e6);
}

TEST_CASE("block LU on the identity returns the right-hand side") {
  Matrix a = Matrix::identity(12);
  std::vector<double> b = random_rhs(12, 5);
  BlockLuResult r = block_lu_solve(a, b, 4, gemm_reference);
  CHECK(r.x == b);
  CHECK(r.max_slices_a == 1);
  CHECK(r.max_slices_b == 1);
}

TEST_CASE("plain binary64 block LU passes the residual threshold") {
  std::size_t n = 100;
  Matrix a = random_uniform(n, n, 91);
  std::vector<double> b = random_rhs(n, 92);
  BlockLuResult r = block_lu_solve(a, b, 10, gemm_reference);
  CHECK(hpl_residual(a, r.x, b) <= 16.0);
}

TEST_CASE("zero pivot reports singularity") {
  Matrix a(3, 3);
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;  // third column identically zero
  std::vector<double> b{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(block_lu_solve(a, b, 2, gemm_reference), std::runtime_error);
}

TEST_CASE("oracle-backed and plain GEMM baselines land close together") {
  std::size_t n = 60;
  Matrix a = random_normal(n, n, 314);
  std::vector<double> b = random_rhs(n, 315);
  GemmFn oracle_gemm = [](const Matrix& x, const Matrix& y) {
    return exact_gemm(x, y).to_matrix();
  };
  double r_plain = hpl_residual(a, block_lu_solve(a, b, 10, gemm_reference).x, b);
  double r_oracle = hpl_residual(a, block_lu_solve(a, b, 10, oracle_gemm).x, b);
  CHECK(r_plain <= 16.0);
  CHECK(r_oracle <= 16.0);
  double lo = std::min(r_plain, r_oracle), hi = std::max(r_plain, r_oracle);
  CHECK(hi <= 10.0 * std::max(lo, 0.1));
}

TEST_CASE("a single-slice emulated Schur update suffices for minij") {
  std::size_t n = 100;
  Matrix a = minij(n);
  std::vector<double> b = random_rhs(n, 71);
  MmaConfig cfg = MmaConfig::int8_int32();
  GemmFn gemm = [&](const Matrix& x, const Matrix& y) {
    MultiplyPlan plan = make_plan(cfg, x.cols(), 1, 1, ScheduleKind::kReduced,
                                  Accumulation::kLevelledExact);
    return multiply(x, y, cfg, plan).c;
  };
  BlockLuResult r = block_lu_solve(a, b, 10, gemm);
  CHECK(hpl_residual(a, r.x, b) <= 16.0);
  CHECK(r.max_slices_a == 1);
  CHECK(r.max_slices_b == 1);
}

TEST_CASE("more slices give smaller elementwise error on spread-out data") {
  MmaConfig cfg = MmaConfig::int8_int32();
  auto [a, b] = gen_lognormal(10, 10, 10, 8.0, 123);
  ExactProduct exact = exact_gemm(a, b);
  MultiplyPlan coarse = make_plan(cfg, 10, 2, 2, ScheduleKind::kReduced);
  MultiplyPlan fine = make_plan(cfg, 10, 8, 8, ScheduleKind::kReduced);
  double err2 = max_elementwise_error(multiply(a, b, cfg, coarse).c, exact);
  double err8 = max_elementwise_error(multiply(a, b, cfg, fine).c, exact);
  CHECK(err8 < err2);
}

TEST_CASE("recorded slice minima make the emulated Schur updates exact") {
  std::size_t n = 40;
  Matrix a = random_uniform(n, n, 2718);
  std::vector<double> b = random_rhs(n, 2719);
  MmaConfig cfg = MmaConfig::int8_int32();

  GemmFn oracle_gemm = [](const Matrix& x, const Matrix& y) {
    return exact_gemm(x, y).to_matrix();
  };
  BlockLuResult first = block_lu_solve(a, b, 8, oracle_gemm);

  GemmFn emulated = [&](const Matrix& x, const Matrix& y) {
    int t = optimal_slice_width(cfg, static_cast<std::int64_t>(x.cols()));
    int sa = min_exact_slices(x, t, BlockOrientation::kRows);
    int sb = min_exact_slices(y, t, BlockOrientation::kColumns);
    MultiplyPlan plan = make_plan(cfg, x.cols(), sa, sb, ScheduleKind::kFull,
                                  Accumulation::kLevelledExact);
    return multiply(x, y, cfg, plan).c;
  };
  BlockLuResult second = block_lu_solve(a, b, 8, emulated);
  // Every Schur product rounds identically, so the whole factorizations and
  // solutions coincide bitwise.
  CHECK(first.x == second.x);
  CHECK(first.max_slices_a == second.max_slices_a);
  CHECK(first.max_slices_b == second.max_slices_b);
}
