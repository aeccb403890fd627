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

#include "ozmul/generators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ozmul {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t RandomStream::split(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed + stream);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(split(seed, stream)) {}

std::uint64_t RandomStream::next_u64() { return engine_(); }

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1p-53;
}

double RandomStream::uniform(double lo, double hi) {
  return lo + uniform() * (hi - lo);
}

double RandomStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; the first uniform is nudged away from zero so the log is
  // finite.
  double u1 = uniform();
  if (u1 == 0.0) u1 = 0x1p-53;
  double u2 = uniform();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

std::pair<std::vector<double>, std::vector<double>> gen_inner_phi(double phi,
                                                                  std::uint64_t seed) {
  if (phi < 0) throw std::invalid_argument("gen_inner_phi: phi must be >= 0");
  RandomStream rng(seed);
  double x = rng.normal();
  double y = rng.normal();
  double lo, hi;
  if (phi == std::floor(phi) && std::abs(phi) < 4000) {
    int e = static_cast<int>(phi);
    lo = std::ldexp(x, -e);
    hi = std::ldexp(y, e);
  } else {
    lo = x * std::exp2(-phi);
    hi = y * std::exp2(phi);
  }
  return {{lo, 1.0}, {hi, 1.0}};
}

std::pair<Matrix, Matrix> gen_lognormal(std::size_t m, std::size_t k, std::size_t n,
                                        double phi, std::uint64_t seed) {
  if (phi < 0) throw std::invalid_argument("gen_lognormal: phi must be >= 0");
  RandomStream rng_a(seed, 1);
  RandomStream rng_b(seed, 2);
  Matrix a(m, k), b(k, n);
  for (std::size_t i = 0; i < a.size(); ++i) {
    double base = rng_a.uniform(-0.5, 0.5);
    a.data()[i] = base * std::exp(phi * rng_a.normal());
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    double base = rng_b.uniform(-0.5, 0.5);
    b.data()[i] = base * std::exp(phi * rng_b.normal());
  }
  return {std::move(a), std::move(b)};
}

std::pair<Matrix, Matrix> gen_kappa_d(std::size_t n, double kappa_d, std::uint64_t seed,
                                      bool rotate) {
  if (!(kappa_d >= 1.0)) throw std::invalid_argument("gen_kappa_d: kappa_d must be >= 1");
  RandomStream rng_a(seed, 1);
  RandomStream rng_b(seed, 2);
  Matrix a(n, n), b(n, n);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = rng_a.uniform(1.0, 2.0);
  for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = rng_b.uniform(1.0, 2.0);

  // d_ii geometric from kappa_d^-1/2 to kappa_d^1/2.
  std::vector<double> d(n, 1.0);
  double log_kd = std::log(kappa_d);
  for (std::size_t i = 0; i < n; ++i) {
    double frac = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5;
    d[i] = std::exp(log_kd * (frac - 0.5));
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      a(i, j) *= d[j];   // A = Abar D
      b(i, j) /= d[i];   // B = D^-1 Bbar
    }

  if (rotate) {
    // Row i of A and column i of B rotate by i+1 places (1-based row index).
    Matrix ra(n, n), rb(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t shift = (i + 1) % n;
      for (std::size_t j = 0; j < n; ++j) {
        ra(i, (j + shift) % n) = a(i, j);
        rb((j + shift) % n, i) = b(j, i);
      }
    }
    a = std::move(ra);
    b = std::move(rb);
  }
  return {std::move(a), std::move(b)};
}

Matrix minij(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m(i, j) = static_cast<double>(std::min(i, j) + 1);
  return m;
}

Matrix wilkinson(std::size_t n) {
  Matrix m(n, n);
  double center = (static_cast<double>(n) + 1.0) / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = std::abs(static_cast<double>(i + 1) - center);
    if (i + 1 < n) {
      m(i, i + 1) = 1.0;
      m(i + 1, i) = 1.0;
    }
  }
  return m;
}

Matrix hanowa(std::size_t n, double d) {
  if (n % 2 != 0) throw std::invalid_argument("hanowa: n must be even");
  std::size_t half = n / 2;
  Matrix m(n, n);
  for (std::size_t i = 0; i < half; ++i) {
    m(i, i) = d;
    m(half + i, half + i) = d;
    m(i, half + i) = -static_cast<double>(i + 1);
    m(half + i, i) = static_cast<double>(i + 1);
  }
  return m;
}

Matrix random_uniform(std::size_t m, std::size_t n, std::uint64_t seed, double lo,
                      double hi) {
  RandomStream rng(seed);
  Matrix out(m, n);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = rng.uniform(lo, hi);
  return out;
}

Matrix random_normal(std::size_t m, std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  Matrix out(m, n);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = rng.normal();
  return out;
}

std::vector<double> random_rhs(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> out(n);
  for (double& v : out) v = rng.uniform();
  return out;
}

}  // namespace ozmul
