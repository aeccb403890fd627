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

#include "ozmul/analysis.hpp"

#include <cmath>
#include <limits>

namespace ozmul {

namespace {

// Per-block max/min-nonzero magnitude ratio; 1.0 for an all-zero block.
std::vector<double> block_ratios(const Matrix& m, BlockOrientation orientation,
                                 bool* has_zero_block) {
  std::size_t blocks = orientation == BlockOrientation::kRows ? m.rows() : m.cols();
  std::size_t len = orientation == BlockOrientation::kRows ? m.cols() : m.rows();
  std::vector<double> ratios(blocks, 1.0);
  if (has_zero_block) *has_zero_block = false;
  for (std::size_t b = 0; b < blocks; ++b) {
    double max_abs = 0.0;
    double min_abs = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < len; ++j) {
      double v = std::abs(orientation == BlockOrientation::kRows ? m(b, j) : m(j, b));
      if (v == 0.0) continue;
      max_abs = std::max(max_abs, v);
      min_abs = std::min(min_abs, v);
    }
    if (max_abs == 0.0) {
      if (has_zero_block) *has_zero_block = true;
      continue;
    }
    ratios[b] = max_abs / min_abs;
  }
  return ratios;
}

}  // namespace

double kappa(const Matrix& m, BlockOrientation orientation) {
  std::vector<double> ratios = block_ratios(m, orientation, nullptr);
  double worst = 1.0;
  for (double r : ratios) worst = std::max(worst, r);
  return 2.0 * worst;
}

ScalingProfile scaling_profile(const Matrix& a, const Matrix& b) {
  ScalingProfile p;
  p.row_ratios_a = block_ratios(a, BlockOrientation::kRows, &p.a_has_zero_block);
  p.col_ratios_b = block_ratios(b, BlockOrientation::kColumns, &p.b_has_zero_block);
  double wa = 1.0, wb = 1.0;
  for (double r : p.row_ratios_a) wa = std::max(wa, r);
  for (double r : p.col_ratios_b) wb = std::max(wb, r);
  p.kappa_a = 2.0 * wa;
  p.kappa_b = 2.0 * wb;
  return p;
}

double zeta(double kappa_a, double kappa_b, int slices_a, int slices_b, int width) {
  if (!(kappa_a > 0.0) || !(kappa_b > 0.0))
    throw std::invalid_argument("zeta: kappas must be positive");
  double ta = std::ldexp(kappa_a, -slices_a * width);
  double tb = std::ldexp(kappa_b, -slices_b * width);
  double tab = std::ldexp(kappa_a * kappa_b, -(slices_a + slices_b) * width);
  return ta + tb + tab;
}

double gamma_factor(std::int64_t n, double u) {
  if (n < 0) throw std::invalid_argument("gamma_factor: n must be >= 0");
  double nu = static_cast<double>(n) * u;
  if (nu >= 1.0) throw std::domain_error("gamma_factor: n*u >= 1, bound is meaningless");
  return nu / (1.0 - nu);
}

ErrorReport error_bound(const Matrix& a, const Matrix& b, const MultiplyPlan& plan,
                        double u) {
  ErrorReport report;
  ScalingProfile profile = scaling_profile(a, b);
  report.kappa_a = profile.kappa_a;
  report.kappa_b = profile.kappa_b;
  report.a_has_zero_block = profile.a_has_zero_block;
  report.b_has_zero_block = profile.b_has_zero_block;

  int t = plan.width;
  int sa = plan.slices_a, sb = plan.slices_b;
  report.zeta_ab = zeta(report.kappa_a, report.kappa_b, sa, sb, t);
  report.gamma_psi = gamma_factor(plan.psi, u);

  if (plan.schedule.kind == ScheduleKind::kFull) {
    report.kind = BoundKind::kFull;
    report.coefficient =
        report.zeta_ab + report.gamma_psi * (1.0 + report.zeta_ab);
  } else {
    // Dropping the products with l + h > max(s_A, s_B) + 1 costs an extra
    // truncation term on the side with fewer slices.
    double cut;
    if (sa <= sb) {
      report.kind = BoundKind::kReducedALeB;
      cut = std::ldexp(static_cast<double>(sa) * report.kappa_a * report.kappa_b,
                       -sb * t);
    } else {
      report.kind = BoundKind::kReducedAGtB;
      cut = std::ldexp(static_cast<double>(sb) * report.kappa_a * report.kappa_b,
                       -sa * t);
    }
    double gamma_next = gamma_factor(plan.psi + 1, u);
    report.coefficient =
        report.zeta_ab + cut + gamma_next * (1.0 + report.zeta_ab + cut);
  }

  report.first_order_coefficient = std::ldexp(report.kappa_a, -sa * t) +
                                   std::ldexp(report.kappa_b, -sb * t) +
                                   static_cast<double>(plan.psi) * u;

  Matrix prod = abs_product(a, b);
  double inflated = report.coefficient * (1.0 + 8.0 * u);
  for (std::size_t idx = 0; idx < prod.size(); ++idx) prod.data()[idx] *= inflated;
  report.bound = std::move(prod);
  return report;
}

SelectionInfeasible::SelectionInfeasible(double gap_, double best_lhs_, double target_,
                                         int s_max)
    : std::runtime_error("select_slices: no feasible pair within s_max = " +
                         std::to_string(s_max) + "; best achievable term exceeds the "
                         "target by a factor " + std::to_string(gap_)),
      gap(gap_),
      best_lhs(best_lhs_),
      target(target_) {}

SliceSelection select_slices(double kappa_a, double kappa_b, int width, double u,
                             int s_max, const SelectOptions& options) {
  if (width < 1 || s_max < 1 || s_max > 64 || !(u > 0.0) || !(u < 1.0))
    throw std::invalid_argument("select_slices: bad arguments");
  if (!(kappa_a > 0.0) || !(kappa_b > 0.0))
    throw std::invalid_argument("select_slices: kappas must be positive");

  bool found = false;
  SliceSelection best;
  double best_lhs_any = std::numeric_limits<double>::infinity();
  double target_at_best_lhs = 0.0;

  for (int sa = 1; sa <= s_max; ++sa) {
    for (int sb = 1; sb <= s_max; ++sb) {
      double lhs = std::ldexp(kappa_a, -sa * width) + std::ldexp(kappa_b, -sb * width);
      double target;
      if (options.target) {
        target = *options.target;
      } else {
        // psi of the plan the caller intends to run with this pair.
        int diagonals = options.schedule == ScheduleKind::kFull
                            ? sa + sb - 1
                            : std::max(sa, sb);
        long long psi;
        if (options.strategy == Accumulation::kLevelledExact)
          psi = plan_levels(options.precision, width, options.acc_bits_used, diagonals)
                    .inexact_adds;
        else if (options.strategy == Accumulation::kDiagonalInteger)
          psi = diagonals - 1;
        else
          psi = (options.schedule == ScheduleKind::kFull
                     ? static_cast<std::int64_t>(sa) * sb
                     : chi(sa, sb)) - 1;
        target = gamma_factor(std::max(psi, 1LL), u);
      }
      if (lhs < best_lhs_any) {
        best_lhs_any = lhs;
        target_at_best_lhs = target;
      }
      if (lhs > target) continue;

      std::int64_t cost = chi(sa, sb);
      bool better = false;
      if (!found) {
        better = true;
      } else if (cost != best.products) {
        better = cost < best.products;
      } else if (std::max(sa, sb) != std::max(best.slices_a, best.slices_b)) {
        better = std::max(sa, sb) < std::max(best.slices_a, best.slices_b);
      } else {
        better = sa < best.slices_a;
      }
      if (better) {
        best = {sa, sb, lhs, target, cost};
        found = true;
      }
    }
  }

  if (!found) {
    double gap = best_lhs_any / std::max(target_at_best_lhs,
                                         std::numeric_limits<double>::min());
    throw SelectionInfeasible(gap, best_lhs_any, target_at_best_lhs, s_max);
  }
  return best;
}

}  // namespace ozmul
