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

#include "ozmul/fpcore.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ozmul {

double FloatFormat::unit_roundoff() const { return std::ldexp(1.0, -precision); }

double FloatFormat::max_value() const {
  return std::ldexp(2.0 - std::ldexp(1.0, 1 - precision), e_max);
}

void FloatFormat::validate() const {
  if (precision < 2 || precision > 53)
    throw std::invalid_argument("FloatFormat: precision must be in [2, 53]");
  if (e_max < 1 || e_max > 1023)
    throw std::invalid_argument("FloatFormat: e_max must be in [1, 1023]");
}

double round_nearest(double x, const FloatFormat& fmt) {
  fmt.validate();
  if (!std::isfinite(x)) throw std::invalid_argument("round_nearest: non-finite input");
  if (x == 0.0) return 0.0;

  // Exponent of x in the m in [1, 2) normalization.
  int e = std::ilogb(x);
  // Below e_min the quantum freezes at the subnormal spacing.
  int quantum = std::max(e, fmt.e_min()) - fmt.precision + 1;

  // x * 2^-quantum is exact: same significand, shifted exponent.  nearbyint
  // rounds to integer with ties to even under the default rounding mode.
  double scaled = std::ldexp(x, -quantum);
  double rounded = std::nearbyint(scaled);
  double result = std::ldexp(rounded, quantum);

  if (std::abs(result) > fmt.max_value())
    throw std::overflow_error("round_nearest: value exceeds format range");
  return result;
}

SignificandView significand_view(double x) {
  if (!std::isfinite(x))
    throw std::invalid_argument("significand_view: non-finite input");
  SignificandView v;
  v.negative = std::signbit(x);
  std::uint64_t bits = std::bit_cast<std::uint64_t>(std::abs(x));
  std::uint64_t biased = bits >> 52;
  std::uint64_t frac = bits & ((std::uint64_t{1} << 52) - 1);
  if (biased == 0) {
    v.significand = frac;  // subnormal or zero
    v.exponent = -1022;
  } else {
    v.significand = frac | (std::uint64_t{1} << 52);
    v.exponent = static_cast<int>(biased) - 1023;
  }
  return v;
}

int scale_exponent(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0;
  return scale_exponent_direct(m);
}

int scale_exponent_direct(double m) {
  if (!(m > 0.0) || !std::isfinite(m))
    throw std::invalid_argument("scale_exponent_direct: need finite m > 0");
  return std::ilogb(m) + 1;
}

int scale_exponent_fl_trick(double m) {
  if (!(m > 0.0) || !std::isfinite(m))
    throw std::invalid_argument("scale_exponent_fl_trick: need finite m > 0");
  // u^-1 * m must not overflow and m must be normal for the roundoff
  // cancellation to land on the scale.
  if (m < 0x1p-1022 || m >= 0x1p970) return scale_exponent_direct(m);
  const double u_inv = 0x1p53;
  double alpha = u_inv * m + (1.0 - u_inv) * m;
  // An exact power of two comes back unchanged; the scale must be strictly
  // larger than m.
  if (alpha <= m) alpha *= 2.0;
  return std::ilogb(alpha);
}

int scale_exponent_bit_trick(double m) {
  if (!(m > 0.0) || !std::isfinite(m))
    throw std::invalid_argument("scale_exponent_bit_trick: need finite m > 0");
  constexpr std::uint64_t kFractionMask = (std::uint64_t{1} << 52) - 1;
  constexpr std::uint64_t kExponentLsb = std::uint64_t{1} << 52;
  std::uint64_t bits = std::bit_cast<std::uint64_t>(m);
  std::uint64_t exponent_field = bits & ~kFractionMask;
  if (exponent_field == 0 || (exponent_field >> 52) >= 2046)
    return scale_exponent_direct(m);  // subnormal, or increment would overflow
  double alpha = std::bit_cast<double>(exponent_field + kExponentLsb);
  return std::ilogb(alpha);
}

}  // namespace ozmul
