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

#include "ozmul/slicing.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "ozmul/fpcore.hpp"

namespace ozmul {

namespace {

// First fraction-bit position of slice `index` (0-based) in the given mode.
int start_bit(int index, int width, SliceMode mode) {
  if (mode == SliceMode::kNearest) return index == 0 ? 1 : index * width;
  return index * width + 1;
}

// Bits of floor(significand * 2^(end - lsb_pos)) below 2^nbits, where the
// significand's least significant bit sits at fraction position lsb_pos.
std::uint64_t extract_field(std::uint64_t significand, int lsb_pos, int end, int nbits) {
  std::uint64_t mask = (std::uint64_t{1} << nbits) - 1;
  int shift = end - lsb_pos;
  if (shift >= 0) {
    if (shift >= nbits) return 0;  // value has >= nbits trailing zeros
    return (significand & (mask >> shift)) << shift;
  }
  int down = -shift;
  if (down >= 64) return 0;
  return (significand >> down) & mask;
}

// Round-up decision for discarding the bits of `significand` strictly below
// fraction position `kept_end`; ties to even on the kept integer, whose
// parity is `kept_lsb_odd`.
bool rounds_up(std::uint64_t significand, int lsb_pos, int kept_end, bool kept_lsb_odd) {
  int dropped = lsb_pos - kept_end;  // number of discarded low bits
  if (dropped <= 0) return false;    // split is exact at this width
  std::uint64_t rem, half;
  if (dropped >= 64) {
    if (dropped - 1 >= 64) return false;  // half >= 2^64 > significand
    rem = significand;
    half = std::uint64_t{1} << (dropped - 1);
  } else {
    rem = significand & ((std::uint64_t{1} << dropped) - 1);
    half = std::uint64_t{1} << (dropped - 1);
  }
  if (rem > half) return true;
  if (rem < half) return false;
  return kept_lsb_odd;  // tie
}

SlicedMatrix split(const Matrix& m, int width, int count, SliceMode mode,
                   BlockOrientation orientation) {
  if (width < 1 || width > 62) throw std::invalid_argument("split: width out of range");
  if (count < 1) throw std::invalid_argument("split: need at least one slice");
  if (mode == SliceMode::kNearest && width < 2)
    throw std::invalid_argument("split: nearest mode needs width >= 2");

  SlicedMatrix out;
  out.orientation = orientation;
  out.mode = mode;
  out.width = width;
  out.rows = m.rows();
  out.cols = m.cols();
  std::size_t blocks = orientation == BlockOrientation::kRows ? m.rows() : m.cols();
  out.scale_exponents.resize(blocks);
  out.slices.assign(count, IntMatrix(m.rows(), m.cols()));

  for (std::size_t b = 0; b < blocks; ++b) {
    double max_abs = 0.0;
    std::size_t len = orientation == BlockOrientation::kRows ? m.cols() : m.rows();
    for (std::size_t j = 0; j < len; ++j) {
      double v = orientation == BlockOrientation::kRows ? m(b, j) : m(j, b);
      if (!std::isfinite(v)) throw std::invalid_argument("split: non-finite entry");
      max_abs = std::max(max_abs, std::abs(v));
    }
    int q = max_abs == 0.0 ? 0 : scale_exponent_direct(max_abs);
    out.scale_exponents[b] = q;

    for (std::size_t j = 0; j < len; ++j) {
      std::size_t r = orientation == BlockOrientation::kRows ? b : j;
      std::size_t c = orientation == BlockOrientation::kRows ? j : b;
      SignificandView d = significand_view(m(r, c));
      if (d.significand == 0) continue;
      // Fraction position of the significand's least significant bit in the
      // block fixed-point representation of |entry| / 2^q.
      int lsb_pos = q + 52 - d.exponent;

      std::int64_t sign = d.negative ? -1 : 1;
      for (int l = 0; l < count; ++l) {
        int end = out.end_bit(l);
        int nbits = end - start_bit(l, width, mode) + 1;
        std::uint64_t v = extract_field(d.significand, lsb_pos, end, nbits);
        out.slices[l](r, c) = sign * static_cast<std::int64_t>(v);
      }

      if (mode == SliceMode::kNearest) {
        int last = count - 1;
        std::int64_t last_v = std::abs(out.slices[last](r, c));
        if (rounds_up(d.significand, lsb_pos, out.end_bit(last), (last_v & 1) != 0)) {
          // Propagate the carry upward through the sign-magnitude fields.
          for (int l = last; l >= 0; --l) {
            int nbits = out.end_bit(l) - start_bit(l, width, mode) + 1;
            std::int64_t cap = std::int64_t{1} << nbits;
            std::int64_t v = std::abs(out.slices[l](r, c)) + 1;
            if (v < cap || l == 0) {
              out.slices[l](r, c) = sign * v;
              break;
            }
            out.slices[l](r, c) = 0;
          }
        }
      }
    }
  }
  return out;
}

// Rounds magnitude * 2^exp to binary64, where `inexact_tail` marks nonzero
// discarded bits strictly below the magnitude's last bit.
double round_magnitude(unsigned __int128 magnitude, int exp, bool inexact_tail) {
  if (magnitude == 0) return 0.0;
  int nbits = 128 - std::countl_zero(std::uint64_t(magnitude >> 64));
  if (magnitude >> 64 == 0) nbits = 64 - std::countl_zero(std::uint64_t(magnitude));
  // Reduce to at most 55 bits with a sticky low bit; two guard bits make the
  // final conversion round correctly despite the intermediate truncation.
  if (nbits > 55) {
    int drop = nbits - 55;
    unsigned __int128 kept = magnitude >> drop;
    if ((kept << drop) != magnitude) inexact_tail = true;
    magnitude = kept;
    exp += drop;
  }
  std::uint64_t low = static_cast<std::uint64_t>(magnitude);
  if (inexact_tail) low |= 1;
  return std::ldexp(static_cast<double>(low), exp);
}

}  // namespace

SlicedMatrix split_rows(const Matrix& a, int width, int count, SliceMode mode) {
  return split(a, width, count, mode, BlockOrientation::kRows);
}

SlicedMatrix split_cols(const Matrix& b, int width, int count, SliceMode mode) {
  return split(b, width, count, mode, BlockOrientation::kColumns);
}

Matrix reconstruct(const SlicedMatrix& s) {
  Matrix out(s.rows, s.cols);
  for (std::size_t i = 0; i < s.rows; ++i) {
    for (std::size_t j = 0; j < s.cols; ++j) {
      std::size_t block = s.orientation == BlockOrientation::kRows ? i : j;
      int q = s.scale_exponents.empty() ? 0 : s.scale_exponents[block];

      // Accumulate slices most significant first.  acc holds the exact value
      // scaled so that its unit bit sits at fraction position acc_end; once
      // the window cannot grow further, lower slices fold into a sticky bit.
      __int128 acc = 0;
      int acc_end = 0;
      bool sticky = false;
      for (int l = 0; l < s.slice_count(); ++l) {
        std::int64_t v = s.slices[l](i, j);
        if (v == 0) continue;
        if (acc == 0) {
          acc = v;
          acc_end = s.end_bit(l);
          continue;
        }
        int gap = s.end_bit(l) - acc_end;
        unsigned __int128 mag = acc < 0 ? -(unsigned __int128)acc : (unsigned __int128)acc;
        int used = 128 - (mag >> 64 ? std::countl_zero(std::uint64_t(mag >> 64))
                                    : 64 + std::countl_zero(std::uint64_t(mag)));
        if (used + gap > 126) {
          sticky = true;  // beyond the exact window
          continue;
        }
        acc = (acc << gap) + v;
        acc_end = s.end_bit(l);
      }
      if (acc == 0) continue;
      bool neg = acc < 0;
      unsigned __int128 mag = neg ? -(unsigned __int128)acc : (unsigned __int128)acc;
      double v = round_magnitude(mag, q - acc_end, sticky);
      out(i, j) = neg ? -v : v;
    }
  }
  return out;
}

int bit_spread(double x) {
  SignificandView d = significand_view(x);
  if (d.significand == 0) return 0;
  return std::bit_width(d.significand) - std::countr_zero(d.significand);
}

int min_exact_slices(const Matrix& m, int width, BlockOrientation orientation,
                     SliceMode mode) {
  if (width < 1) throw std::invalid_argument("min_exact_slices: width must be >= 1");
  std::size_t blocks = orientation == BlockOrientation::kRows ? m.rows() : m.cols();
  std::size_t len = orientation == BlockOrientation::kRows ? m.cols() : m.rows();

  int required_bits = 0;  // deepest fraction position holding a set bit
  for (std::size_t b = 0; b < blocks; ++b) {
    double max_abs = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      double v = orientation == BlockOrientation::kRows ? m(b, j) : m(j, b);
      max_abs = std::max(max_abs, std::abs(v));
    }
    if (max_abs == 0.0) continue;
    int q = scale_exponent_direct(max_abs);
    for (std::size_t j = 0; j < len; ++j) {
      double v = orientation == BlockOrientation::kRows ? m(b, j) : m(j, b);
      SignificandView d = significand_view(v);
      if (d.significand == 0) continue;
      int lsb_pos = q + 52 - d.exponent - std::countr_zero(d.significand);
      required_bits = std::max(required_bits, lsb_pos);
    }
  }

  int count;
  if (mode == SliceMode::kNearest)
    count = std::max(1, (required_bits + 1 + width - 1) / width);
  else
    count = std::max(1, (required_bits + width - 1) / width);

  // The bit positions above are exact, so the round-trip is a sanity check.
  SlicedMatrix s = orientation == BlockOrientation::kRows
                       ? split_rows(m, width, count, mode)
                       : split_cols(m, width, count, mode);
  if (!(reconstruct(s) == m))
    throw std::logic_error("min_exact_slices: round-trip validation failed");
  return count;
}

}  // namespace ozmul
