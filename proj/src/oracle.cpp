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

#include "ozmul/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ozmul/fpcore.hpp"
#include "ozmul/slicing.hpp"

namespace ozmul {

namespace {

// Signed integer significand and exponent with x = sig * 2^exp.
struct DyadicParts {
  std::int64_t sig = 0;
  long exp = 0;
};

DyadicParts dyadic_parts(double x) {
  SignificandView v = significand_view(x);
  DyadicParts p;
  p.sig = v.negative ? -static_cast<std::int64_t>(v.significand)
                     : static_cast<std::int64_t>(v.significand);
  p.exp = v.exponent - 52;
  return p;
}

void mpz_add_int128(mpz_class& acc, __int128 v) {
  if (v == 0) return;
  bool neg = v < 0;
  unsigned __int128 mag = neg ? -static_cast<unsigned __int128>(v)
                              : static_cast<unsigned __int128>(v);
  mpz_class m;
  std::uint64_t hi = static_cast<std::uint64_t>(mag >> 64);
  std::uint64_t lo = static_cast<std::uint64_t>(mag);
  if (hi) {
    m = hi;
    m <<= 64;
    m += lo;
  } else {
    m = lo;
  }
  if (neg)
    acc -= m;
  else
    acc += m;
}

double frobenius_norm(const Matrix& m) {
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) sum += m.data()[i] * m.data()[i];
  return std::sqrt(sum);
}

double inf_norm(const Matrix& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) row += std::abs(m(i, j));
    best = std::max(best, row);
  }
  return best;
}

double inf_norm(const std::vector<double>& v) {
  double best = 0.0;
  for (double x : v) best = std::max(best, std::abs(x));
  return best;
}

}  // namespace

ExactValue ExactValue::from_double(double x) {
  ExactValue v;
  v.add(x);
  return v;
}

void ExactValue::align_to(long e) {
  if (sig_ == 0 || e >= exp_) {
    if (sig_ == 0) exp_ = e;
    return;
  }
  sig_ <<= static_cast<unsigned long>(exp_ - e);
  exp_ = e;
}

void ExactValue::add_product(double a, double b) {
  if (a == 0.0 || b == 0.0) return;
  DyadicParts pa = dyadic_parts(a);
  DyadicParts pb = dyadic_parts(b);
  __int128 term = static_cast<__int128>(pa.sig) * pb.sig;
  long term_exp = pa.exp + pb.exp;
  if (sig_ == 0) {
    sig_ = 0;
    exp_ = term_exp;
    mpz_add_int128(sig_, term);
    return;
  }
  if (term_exp >= exp_) {
    mpz_class t;
    mpz_add_int128(t, term);
    t <<= static_cast<unsigned long>(term_exp - exp_);
    sig_ += t;
  } else {
    align_to(term_exp);
    mpz_add_int128(sig_, term);
  }
}

void ExactValue::add(const ExactValue& other) {
  if (other.sig_ == 0) return;
  if (sig_ == 0) {
    sig_ = other.sig_;
    exp_ = other.exp_;
    return;
  }
  if (other.exp_ >= exp_) {
    mpz_class t = other.sig_;
    t <<= static_cast<unsigned long>(other.exp_ - exp_);
    sig_ += t;
  } else {
    align_to(other.exp_);
    sig_ += other.sig_;
  }
}

void ExactValue::mul(double x) {
  if (sig_ == 0) return;
  if (x == 0.0) {
    sig_ = 0;
    exp_ = 0;
    return;
  }
  DyadicParts p = dyadic_parts(x);
  sig_ *= static_cast<long>(p.sig);
  exp_ += p.exp;
}

void ExactValue::negate() { sig_ = -sig_; }

double ExactValue::to_double() const {
  if (sig_ == 0) return 0.0;
  bool neg = sig_ < 0;
  mpz_class mag = abs(sig_);
  std::size_t nbits = mpz_sizeinbase(mag.get_mpz_t(), 2);
  long e = exp_;
  // Keep 55 bits and fold the rest into a sticky low bit; the two guard
  // bits make the final integer-to-double conversion round to nearest
  // correctly despite the intermediate truncation.
  if (nbits > 55) {
    unsigned long drop = static_cast<unsigned long>(nbits - 55);
    bool sticky = mpz_scan1(mag.get_mpz_t(), 0) < drop;
    mag >>= drop;
    e += static_cast<long>(drop);
    if (sticky && mpz_even_p(mag.get_mpz_t())) mag += 1;
  }
  // At most 56 bits now, so the value fits an unsigned 64-bit word and the
  // conversion to double applies the one correct rounding.
  double d = static_cast<double>(mpz_get_ui(mag.get_mpz_t()));
  if (e > std::numeric_limits<int>::max() || e < std::numeric_limits<int>::min())
    throw std::overflow_error("ExactValue::to_double: exponent out of range");
  double r = std::ldexp(d, static_cast<int>(e));
  return neg ? -r : r;
}

double ExactValue::abs_ratio(const ExactValue& den) const {
  if (den.sig_ == 0) throw std::domain_error("ExactValue::abs_ratio: zero denominator");
  if (sig_ == 0) return 0.0;

  // Top 53 bits of each magnitude convert to double exactly; the quotient
  // then carries at most a couple of ulps of error, which is ample for an
  // error metric.
  auto top = [](const mpz_class& sig, long exp, long& e_out) {
    mpz_class mag = abs(sig);
    std::size_t nbits = mpz_sizeinbase(mag.get_mpz_t(), 2);
    if (nbits > 53) {
      unsigned long drop = static_cast<unsigned long>(nbits - 53);
      mag >>= drop;
      exp += static_cast<long>(drop);
    }
    e_out = exp;
    return static_cast<double>(mpz_get_ui(mag.get_mpz_t()));
  };
  long en = 0, ed = 0;
  double mn = top(sig_, exp_, en);
  double md = top(den.sig_, den.exp_, ed);
  long shift = en - ed;
  if (shift > 4000) return std::numeric_limits<double>::infinity();
  if (shift < -4000) return 0.0;
  return std::ldexp(mn / md, static_cast<int>(shift));
}

bool ExactValue::equals_double(double x) const {
  ExactValue diff = *this;
  diff.negate();
  diff.add(x);
  return diff.is_zero();
}

Matrix ExactProduct::to_matrix() const {
  Matrix out(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(i, j) = entry(i, j).to_double();
  return out;
}

ExactProduct exact_gemm(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("exact_gemm: shape mismatch");
  ExactProduct out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      ExactValue& acc = out.entry(i, j);
      for (std::size_t r = 0; r < a.cols(); ++r) acc.add_product(a(i, r), b(r, j));
    }
  return out;
}

ExactProduct exact_gemm_axpby(double alpha, const Matrix& a, const Matrix& b,
                              double beta, const Matrix& c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols())
    throw std::invalid_argument("exact_gemm_axpby: shape mismatch");
  ExactProduct out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      ExactValue& acc = out.entry(i, j);
      // alpha * sum_r a_ir b_rj + beta * c_ij, exact throughout: the scalar
      // factors are dyadic too.
      for (std::size_t r = 0; r < a.cols(); ++r) acc.add_product(a(i, r), b(r, j));
      acc.mul(alpha);
      ExactValue last;
      last.add_product(beta, c(i, j));
      acc.add(last);
    }
  return out;
}

double forward_error(double computed, const ExactValue& exact) {
  if (exact.is_zero())
    return computed == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  ExactValue diff = exact;
  diff.negate();
  diff.add(computed);
  if (diff.is_zero()) return 0.0;
  return diff.abs_ratio(exact);
}

double max_elementwise_error(const Matrix& computed, const ExactProduct& exact) {
  if (computed.rows() != exact.rows() || computed.cols() != exact.cols())
    throw std::invalid_argument("max_elementwise_error: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < computed.rows(); ++i)
    for (std::size_t j = 0; j < computed.cols(); ++j)
      worst = std::max(worst, forward_error(computed(i, j), exact.entry(i, j)));
  return worst;
}

double normwise_gemm_error(const Matrix& dhat, const ExactProduct& dexact,
                           const Matrix& a, const Matrix& b, const Matrix& c,
                           double alpha, double beta) {
  Matrix d_ref = dexact.to_matrix();
  if (dhat.rows() != d_ref.rows() || dhat.cols() != d_ref.cols())
    throw std::invalid_argument("normwise_gemm_error: shape mismatch");
  double num = 0.0;
  for (std::size_t i = 0; i < dhat.size(); ++i) {
    double diff = dhat.data()[i] - d_ref.data()[i];
    num += diff * diff;
  }
  num = std::sqrt(num);
  double k = static_cast<double>(a.cols());
  double denom = std::abs(alpha) * std::sqrt(k + 2.0) * frobenius_norm(a) *
                     frobenius_norm(b) +
                 2.0 * std::abs(beta) * frobenius_norm(c);
  if (denom == 0.0)
    throw std::domain_error("normwise_gemm_error: zero denominator");
  return num / denom;
}

double hpl_residual(const Matrix& a, const std::vector<double>& xhat,
                    const std::vector<double>& b) {
  std::size_t n = a.rows();
  if (a.cols() != n || xhat.size() != n || b.size() != n)
    throw std::invalid_argument("hpl_residual: shape mismatch");
  double res_inf = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ExactValue acc;
    for (std::size_t j = 0; j < n; ++j) acc.add_product(a(i, j), xhat[j]);
    acc.sub(b[i]);
    res_inf = std::max(res_inf, std::abs(acc.to_double()));
  }
  const double u = 0x1p-53;
  double denom =
      2.0 * u * (inf_norm(a) * inf_norm(xhat) + inf_norm(b)) * static_cast<double>(n);
  if (denom == 0.0) return res_inf == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return res_inf / denom;
}

BlockLuResult block_lu_solve(const Matrix& a, const std::vector<double>& b, int block,
                             const GemmFn& gemm) {
  std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n)
    throw std::invalid_argument("block_lu_solve: need a square system");
  if (block < 1) throw std::invalid_argument("block_lu_solve: block must be >= 1");

  Matrix lu = a;
  std::vector<std::size_t> piv(n);
  BlockLuResult result;

  for (std::size_t start = 0; start < n; start += block) {
    std::size_t bw = std::min<std::size_t>(block, n - start);
    std::size_t panel_end = start + bw;

    // Panel factorization with partial pivoting over the full column.
    for (std::size_t col = start; col < panel_end; ++col) {
      std::size_t p = col;
      for (std::size_t r = col + 1; r < n; ++r)
        if (std::abs(lu(r, col)) > std::abs(lu(p, col))) p = r;
      if (lu(p, col) == 0.0)
        throw std::runtime_error("block_lu_solve: zero pivot, matrix is singular");
      piv[col] = p;
      if (p != col)
        for (std::size_t c = 0; c < n; ++c) std::swap(lu(col, c), lu(p, c));
      double pivot = lu(col, col);
      for (std::size_t r = col + 1; r < n; ++r) {
        lu(r, col) /= pivot;
        double mult = lu(r, col);
        if (mult == 0.0) continue;
        for (std::size_t c = col + 1; c < panel_end; ++c)
          lu(r, c) -= mult * lu(col, c);
      }
    }

    if (panel_end >= n) continue;

    // U12 = L11^-1 A12 by forward substitution with the unit diagonal.
    for (std::size_t r = start + 1; r < panel_end; ++r)
      for (std::size_t r2 = start; r2 < r; ++r2) {
        double mult = lu(r, r2);
        if (mult == 0.0) continue;
        for (std::size_t c = panel_end; c < n; ++c) lu(r, c) -= mult * lu(r2, c);
      }

    Matrix l21(n - panel_end, bw);
    for (std::size_t i = 0; i < l21.rows(); ++i)
      for (std::size_t j = 0; j < bw; ++j) l21(i, j) = lu(panel_end + i, start + j);
    Matrix u12(bw, n - panel_end);
    for (std::size_t i = 0; i < bw; ++i)
      for (std::size_t j = 0; j < u12.cols(); ++j) u12(i, j) = lu(start + i, panel_end + j);

    result.max_slices_a = std::max(
        result.max_slices_a, min_exact_slices(l21, 7, BlockOrientation::kRows));
    result.max_slices_b = std::max(
        result.max_slices_b, min_exact_slices(u12, 7, BlockOrientation::kColumns));

    // Schur update through the injected product.
    Matrix prod = gemm(l21, u12);
    for (std::size_t i = 0; i < l21.rows(); ++i)
      for (std::size_t j = 0; j < u12.cols(); ++j)
        lu(panel_end + i, panel_end + j) -= prod(i, j);
  }

  // Ly = Pb, then Ux = y.
  std::vector<double> x = b;
  for (std::size_t i = 0; i < n; ++i) std::swap(x[i], x[piv[i]]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x[i] -= lu(i, j) * x[j];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu(i, j) * x[j];
    x[i] /= lu(i, i);
  }
  result.x = std::move(x);
  return result;
}

}  // namespace ozmul
