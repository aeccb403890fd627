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

#ifndef OZMUL_SLICING_HPP
#define OZMUL_SLICING_HPP

#include <vector>

#include "ozmul/matrix.hpp"

namespace ozmul {

enum class SliceMode {
  kTruncate,  // round toward zero at the last kept bit
  kNearest,   // round the discarded tail to nearest, ties to even
};

enum class BlockOrientation {
  kRows,     // one scale per row (left factor)
  kColumns,  // one scale per column (right factor)
};

/// A matrix in block fixed-point form, split into signed integer slices.
///
/// Each block (a row or a column, depending on orientation) carries one
/// power-of-two scale 2^q.  The fraction bits of entry / 2^q are numbered
/// 1, 2, ... to the right of the binary point, and slice l (1-based) holds
/// a consecutive group of them as a sign-magnitude integer:
///
///   truncate: slice l holds bits (l-1)t + 1 .. lt, magnitudes < 2^t;
///   nearest:  slice 1 holds bits 1 .. t-1 and later slices t bits each,
///             so a rounding carry can ripple up without leaving I_t.
///
/// Immutable after construction; safe to share across threads.
struct SlicedMatrix {
  BlockOrientation orientation;
  SliceMode mode;
  int width;  // t, bits per full slice
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> scale_exponents;  // one per block
  std::vector<IntMatrix> slices;     // index 0 is the most significant slice

  int slice_count() const { return static_cast<int>(slices.size()); }

  /// Fraction-bit position of the last bit held by slice `index` (0-based).
  /// The slice's weight in the reconstruction is 2^-end_bit(index).
  int end_bit(int index) const {
    int last = (index + 1) * width;
    return mode == SliceMode::kNearest ? last - 1 : last;
  }
};

/// Splits A into `count` row-block slices of `width` bits each.
SlicedMatrix split_rows(const Matrix& a, int width, int count,
                        SliceMode mode = SliceMode::kTruncate);

/// Splits B into `count` column-block slices of `width` bits each.
SlicedMatrix split_cols(const Matrix& b, int width, int count,
                        SliceMode mode = SliceMode::kTruncate);

/// Evaluates the sliced representation back into binary64.  The result is
/// exact whenever an entry's bits span at most 53 positions, and correctly
/// rounded (nearest, ties to even) otherwise.
Matrix reconstruct(const SlicedMatrix& s);

/// Number of bits between the most and least significant set bit of the
/// significand, inclusive.  0 for zero, 1 for powers of two, at most 53.
int bit_spread(double x);

/// Smallest slice count for which splitting at `width` bits reproduces m
/// exactly, computed from exact per-entry bit positions and then validated
/// by one reconstruction round-trip.
int min_exact_slices(const Matrix& m, int width, BlockOrientation orientation,
                     SliceMode mode = SliceMode::kTruncate);

}  // namespace ozmul

#endif  // OZMUL_SLICING_HPP
