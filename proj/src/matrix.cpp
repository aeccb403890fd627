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

#include "ozmul/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace ozmul {

bool is_clean_input(const Matrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    double v = m.data()[i];
    if (!std::isfinite(v)) return false;
    if (v == 0.0 && std::signbit(v)) return false;
  }
  return true;
}

Matrix abs_product(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("abs_product: shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t r = 0; r < a.cols(); ++r) {
      double ar = std::abs(a(i, r));
      if (ar == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += ar * std::abs(b(r, j));
    }
  return out;
}

Matrix gemm_reference(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("gemm_reference: shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t r = 0; r < a.cols(); ++r) {
      double ar = a(i, r);
      if (ar == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += ar * b(r, j);
    }
  return out;
}

}  // namespace ozmul
