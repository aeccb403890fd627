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

#ifndef OZMUL_ORACLE_HPP
#define OZMUL_ORACLE_HPP

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <vector>

#include "ozmul/matrix.hpp"

namespace ozmul {

/// Exact dyadic rational sig * 2^exp.  Binary64 values are dyadic, so sums
/// of products of them are representable exactly; the exponent is kept at
/// the minimum over the accumulated addends.
class ExactValue {
 public:
  ExactValue() = default;
  static ExactValue from_double(double x);

  void clear() {
    sig_ = 0;
    exp_ = 0;
  }

  void add(double x) { add_product(x, 1.0); }
  void sub(double x) { add_product(x, -1.0); }
  void add_product(double a, double b);  // += a * b, exactly
  void add(const ExactValue& other);
  void mul(double x);  // *= x, exactly
  void negate();

  bool is_zero() const { return sig_ == 0; }
  int sign() const { return sgn(sig_); }

  /// Nearest binary64, ties to even.
  double to_double() const;

  /// |this| / |den| evaluated in binary64; den must be nonzero.
  double abs_ratio(const ExactValue& den) const;

  bool equals_double(double x) const;

 private:
  void align_to(long e);
  mpz_class sig_;
  long exp_ = 0;
};

/// Exact product (or general alpha*AB + beta*C) with one ExactValue per entry.
class ExactProduct {
 public:
  ExactProduct() = default;
  ExactProduct(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), entries_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  ExactValue& entry(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  const ExactValue& entry(std::size_t i, std::size_t j) const {
    return entries_[i * cols_ + j];
  }

  /// Entrywise rounding to nearest binary64.
  Matrix to_matrix() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<ExactValue> entries_;
};

/// Exact reference product AB of two binary64 matrices.
ExactProduct exact_gemm(const Matrix& a, const Matrix& b);

/// Exact alpha * AB + beta * C; alpha and beta are binary64 scalars and the
/// whole expression is evaluated without rounding.
ExactProduct exact_gemm_axpby(double alpha, const Matrix& a, const Matrix& b,
                              double beta, const Matrix& c);

/// Relative forward error |computed - exact| / |exact| with the exact
/// denominator.  Zero exact with nonzero computed reports infinity;
/// zero-zero reports zero.
double forward_error(double computed, const ExactValue& exact);

/// Maximum entrywise relative error of a computed matrix.
double max_elementwise_error(const Matrix& computed, const ExactProduct& exact);

/// Normwise error ||Dhat - D||_F / (|alpha| sqrt(k+2) ||A||_F ||B||_F
/// + 2 |beta| ||C||_F), with D the rounded exact reference.  The test-suite
/// pass predicate is value < 2^-53.
double normwise_gemm_error(const Matrix& dhat, const ExactProduct& dexact,
                           const Matrix& a, const Matrix& b, const Matrix& c,
                           double alpha, double beta);

/// Scaled infinity-norm residual ||A xhat - b||_inf /
/// (2u (||A||_inf ||xhat||_inf + ||b||_inf) n), with the raw residual
/// computed exactly and rounded once.  Pass threshold is 16.
double hpl_residual(const Matrix& a, const std::vector<double>& xhat,
                    const std::vector<double>& b);

using GemmFn = std::function<Matrix(const Matrix&, const Matrix&)>;

struct BlockLuResult {
  std::vector<double> x;
  int max_slices_a = 0;  // largest exact slice count needed by any L21 panel
  int max_slices_b = 0;  // largest exact slice count needed by any U12 panel
};

/// Solves Ax = b by block LU with partial pivoting.  The panel work and the
/// triangular solves run in plain binary64; the Schur update A22 - L21*U12
/// routes its product through `gemm`.  Also records, per step, the minimum
/// slice counts that split L21 (by rows) and U12 (by columns) exactly at
/// width 7, returning the maxima.  Throws std::runtime_error on a zero pivot.
BlockLuResult block_lu_solve(const Matrix& a, const std::vector<double>& b, int block,
                             const GemmFn& gemm);

}  // namespace ozmul

#endif  // OZMUL_ORACLE_HPP
