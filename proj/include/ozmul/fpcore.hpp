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

#ifndef OZMUL_FPCORE_HPP
#define OZMUL_FPCORE_HPP

#include <cstdint>
#include <span>

namespace ozmul {

/// A binary floating-point format with p significant bits and exponent
/// range [1 - e_max, e_max].  Values of any instance must be representable
/// in binary64, which is the carrier type throughout: p <= 53, e_max <= 1023.
struct FloatFormat {
  int precision;  // p, number of significand bits
  int e_max;      // largest exponent; e_min = 1 - e_max

  int e_min() const { return 1 - e_max; }
  double unit_roundoff() const;  // 2^-p
  double max_value() const;      // (2 - 2^(1-p)) * 2^e_max

  static constexpr FloatFormat binary64() { return {53, 1023}; }

  void validate() const;  // throws std::invalid_argument on a bad format
};

/// Signed two's complement integer format with t + 1 bits, representing
/// the range [-2^t, 2^t - 1].
struct IntFormat {
  int width;  // t

  std::int64_t min_value() const { return -(std::int64_t{1} << width); }
  std::int64_t max_value() const { return (std::int64_t{1} << width) - 1; }
  bool contains(std::int64_t v) const { return v >= min_value() && v <= max_value(); }
};

/// Rounds a finite binary64 value to the nearest element of fmt, ties to
/// even.  Throws std::overflow_error when the rounded magnitude exceeds the
/// format's largest finite value.
double round_nearest(double x, const FloatFormat& fmt);

/// Integer view of a finite binary64: |x| = significand * 2^(exponent - 52)
/// with significand < 2^53.  Zero has significand 0.
struct SignificandView {
  std::uint64_t significand = 0;
  int exponent = 0;
  bool negative = false;
};

SignificandView significand_view(double x);  // throws on non-finite input

/// Exponent q of the block scale 2^q: the smallest power of two strictly
/// larger than max|values|.  Guarantees 0.5 <= max|values| / 2^q < 1.
/// An all-zero block gets q = 0 by convention, so it contributes exact zeros.
int scale_exponent(std::span<const double> values);

/// Same scale exponent computed from a single precomputed block maximum.
/// Requires m > 0 and finite.
int scale_exponent_direct(double m);

/// Scale exponent via the binary64 expression u^-1*m + (1 - u^-1)*m, whose
/// roundoff lands exactly on the scale.  An exact power of two survives the
/// evaluation unchanged, so that case needs one doubling to restore the
/// strict inequality.  Subnormal or near-overflow m falls back to the
/// direct computation.
int scale_exponent_fl_trick(double m);

/// Scale exponent by bit manipulation: clear the fraction field of m and
/// increment the exponent field by adding a one at bit 52.  Subnormal or
/// maximum-exponent m falls back to the direct computation.
int scale_exponent_bit_trick(double m);

}  // namespace ozmul

#endif  // OZMUL_FPCORE_HPP
