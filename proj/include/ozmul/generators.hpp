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

#ifndef OZMUL_GENERATORS_HPP
#define OZMUL_GENERATORS_HPP

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ozmul/matrix.hpp"

namespace ozmul {

/// Deterministic random stream: mt19937_64 seeded through splitmix64, with
/// substreams derived as splitmix64(seed + stream index).  Uniforms come
/// from the top 53 bits of each draw; normals from the Box-Muller transform
/// of two uniforms.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double uniform();                        // [0, 1), 53-bit
  double uniform(double lo, double hi);    // lo + u * (hi - lo)
  double normal();                         // standard normal

  static std::uint64_t split(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct GenSpec {
  std::string family;  // inner-phi | lognormal-phi | kappad | named family
  std::size_t m = 0, k = 0, n = 0;
  double badness = 0.0;  // phi or kappa_D
  std::uint64_t seed = 0;
  bool rotate = false;
};

/// Inner-product pair a = [2^-phi x, 1], b = [2^phi y, 1] with x, y standard
/// normal.  Integer phi is applied by exponent manipulation, so the scaling
/// is exact.
std::pair<std::vector<double>, std::vector<double>> gen_inner_phi(double phi,
                                                                  std::uint64_t seed);

/// A_ij = a_ij e^(phi x_ij), B_ij = b_ij e^(phi y_ij), with a, b uniform on
/// (-0.5, 0.5) and x, y standard normal.
std::pair<Matrix, Matrix> gen_lognormal(std::size_t m, std::size_t k, std::size_t n,
                                        double phi, std::uint64_t seed);

/// Badly scaled pair A = Abar D, B = D^-1 Bbar with Abar, Bbar uniform on
/// (1, 2) and D geometric from kappa_D^-1/2 to kappa_D^1/2.  With rotate,
/// row i of A and column i of B are circularly rotated by i places.
std::pair<Matrix, Matrix> gen_kappa_d(std::size_t n, double kappa_d, std::uint64_t seed,
                                      bool rotate);

Matrix minij(std::size_t n);                      // a_ij = min(i, j)
Matrix wilkinson(std::size_t n);                  // tridiagonal |i - (n+1)/2| pattern
Matrix hanowa(std::size_t n, double d = -1.0);    // [dI, -D; D, dI], D = diag(1..n/2)
Matrix random_uniform(std::size_t m, std::size_t n, std::uint64_t seed,
                      double lo = 0.0, double hi = 1.0);
Matrix random_normal(std::size_t m, std::size_t n, std::uint64_t seed);

/// Right-hand side with entries uniform on (0, 1).
std::vector<double> random_rhs(std::size_t n, std::uint64_t seed);

}  // namespace ozmul

#endif  // OZMUL_GENERATORS_HPP
