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

#ifndef OZMUL_IO_HPP
#define OZMUL_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "ozmul/matrix.hpp"

namespace ozmul {

/// Matrix files start with the header line "ozm1 <rows> <cols>" followed by
/// row-major entries.  Hex mode stores each entry as the 16-hex-digit
/// big-endian binary64 bit pattern, so files round-trip bit for bit; decimal
/// mode uses shortest-representation decimal, which also round-trips.
enum class MatrixFormat { kHex, kDec };

Matrix read_matrix(std::istream& in, MatrixFormat format);
Matrix read_matrix_file(const std::string& path, MatrixFormat format);
void write_matrix(std::ostream& out, const Matrix& m, MatrixFormat format);
void write_matrix_file(const std::string& path, const Matrix& m, MatrixFormat format);

/// Sweep grammar: "a:b" is an inclusive integer range, "a:step:b" a stepped
/// range, "{x,y,z}" an explicit set, and a bare token a single value.
std::vector<long long> parse_int_sweep(const std::string& text);
std::vector<double> parse_double_sweep(const std::string& text);

}  // namespace ozmul

#endif  // OZMUL_IO_HPP
