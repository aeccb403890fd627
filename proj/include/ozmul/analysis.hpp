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

#ifndef OZMUL_ANALYSIS_HPP
#define OZMUL_ANALYSIS_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ozmul/matrix.hpp"
#include "ozmul/scheme.hpp"

namespace ozmul {

/// Scaling badness of a factor pair: twice the worst max/min-nonzero
/// magnitude ratio over rows of A and over columns of B.
struct ScalingProfile {
  double kappa_a = 2.0;
  double kappa_b = 2.0;
  std::vector<double> row_ratios_a;  // per-row max/min-nonzero ratio
  std::vector<double> col_ratios_b;  // per-column ratio
  bool a_has_zero_block = false;     // some row of A is entirely zero
  bool b_has_zero_block = false;
};

/// kappa of one matrix over the given block orientation.  The minimum is
/// taken over nonzero magnitudes; zero entries convert exactly and do not
/// weaken the bound.  An all-zero matrix returns 2.
double kappa(const Matrix& m, BlockOrientation orientation);

ScalingProfile scaling_profile(const Matrix& a, const Matrix& b);

/// Truncation coefficient
/// 2^(-s_A t) kappa_A + 2^(-s_B t) kappa_B + 2^(-(s_A+s_B) t) kappa_A kappa_B.
double zeta(double kappa_a, double kappa_b, int slices_a, int slices_b, int width);

/// The summation constant n*u / (1 - n*u); requires n*u < 1.
double gamma_factor(std::int64_t n, double u);

enum class BoundKind {
  kFull,            // every slice product computed
  kReducedALeB,     // reduced schedule, s_A <= s_B
  kReducedAGtB,     // reduced schedule, s_A > s_B
};

/// A-priori entrywise bound on |Chat - C| for a given plan, as a
/// coefficient on |A||B| plus the evaluated bound matrix.
struct ErrorReport {
  double kappa_a = 0.0;
  double kappa_b = 0.0;
  double zeta_ab = 0.0;
  double gamma_psi = 0.0;
  double coefficient = 0.0;              // multiplies |A||B| entrywise
  double first_order_coefficient = 0.0;  // truncation + psi*u approximation
  BoundKind kind = BoundKind::kFull;
  Matrix bound;                          // coefficient * |A||B|, inflated by 1 + 8u
  bool a_has_zero_block = false;
  bool b_has_zero_block = false;
};

ErrorReport error_bound(const Matrix& a, const Matrix& b, const MultiplyPlan& plan,
                        double u = 0x1p-53);

/// No (s_A, s_B) pair within the search box meets the accuracy target.
class SelectionInfeasible : public std::runtime_error {
 public:
  SelectionInfeasible(double gap, double best_lhs, double target, int s_max);
  double gap;       // best_lhs / target
  double best_lhs;  // smallest achievable truncation term
  double target;
};

struct SliceSelection {
  int slices_a = 1;
  int slices_b = 1;
  double lhs = 0.0;     // kappa_A 2^(-s_A t) + kappa_B 2^(-s_B t) at the choice
  double target = 0.0;  // threshold the choice satisfies
  std::int64_t products = 0;  // chi(s_A, s_B)
};

struct SelectOptions {
  std::optional<double> target;  // default: gamma_psi of each candidate's plan
  ScheduleKind schedule = ScheduleKind::kReduced;
  Accumulation strategy = Accumulation::kLevelledExact;
  int acc_bits_used = 31;  // accumulator bits assumed when k is unknown
  int precision = 53;
};

/// Enumerates (s_A, s_B) in [1, s_max]^2, keeps pairs whose truncation term
/// meets the target, and returns the feasible pair minimizing chi.  Ties
/// break toward smaller max(s_A, s_B), then smaller s_A.  Throws
/// SelectionInfeasible when no pair qualifies.
SliceSelection select_slices(double kappa_a, double kappa_b, int width, double u,
                             int s_max, const SelectOptions& options = {});

}  // namespace ozmul

#endif  // OZMUL_ANALYSIS_HPP
