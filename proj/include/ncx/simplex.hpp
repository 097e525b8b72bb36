#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ncx/common.hpp"

namespace ncx {

/// Equality-form linear program: maximize c.x subject to A x = b, x >= 0,
/// and optional componentwise upper bounds. Callers convert inequalities via
/// slack variables.
struct LinearProgram {
  std::vector<double> objective;             // length n
  std::vector<std::vector<double>> eq_lhs;   // m rows of length n
  std::vector<double> eq_rhs;                // length m
  std::vector<double> upper_bounds;          // empty, or length n (inf = unbounded)
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  std::vector<double> x;
  double value = 0.0;
  LpStatus status = LpStatus::infeasible;
  std::string message;
};

/// Two-phase dense simplex with Bland's anti-cycling rule. Deterministic:
/// identical input bits yield identical output bits. Pivot tolerance 1e-11,
/// feasibility tolerance 1e-9.
inline LpSolution solve(const LinearProgram& lp) {
  constexpr double kPivotTol = 1e-11;
  constexpr double kFeasTol = 1e-9;

  const std::size_t n_orig = lp.objective.size();
  std::size_t m_orig = lp.eq_lhs.size();
  if (lp.eq_rhs.size() != m_orig)
    throw ValidationError("LinearProgram: rhs length mismatch");
  for (const auto& row : lp.eq_lhs)
    if (row.size() != n_orig) throw ValidationError("LinearProgram: ragged constraint row");
  if (!lp.upper_bounds.empty() && lp.upper_bounds.size() != n_orig)
    throw ValidationError("LinearProgram: upper bound length mismatch");
  if (m_orig > n_orig)
    throw ValidationError("LinearProgram: more equality constraints than variables");
  for (const auto& row : lp.eq_lhs)
    for (double v : row)
      if (!std::isfinite(v)) throw ValidationError("LinearProgram: non-finite entry");

  // Expand finite upper bounds into rows x_i + s = u with fresh slacks.
  std::vector<std::vector<double>> a = lp.eq_lhs;
  std::vector<double> b = lp.eq_rhs;
  std::size_t n = n_orig;
  if (!lp.upper_bounds.empty()) {
    for (std::size_t i = 0; i < n_orig; ++i) {
      if (!std::isfinite(lp.upper_bounds[i])) continue;
      for (auto& row : a) row.push_back(0.0);
      std::vector<double> row(n + 1, 0.0);
      row[i] = 1.0;
      row[n] = 1.0;
      a.push_back(std::move(row));
      b.push_back(lp.upper_bounds[i]);
      ++n;
    }
    // previously added bound rows need entries for later slacks
    for (auto& row : a) row.resize(n, 0.0);
  }
  const std::size_t m = a.size();

  // Tableau: m x (n + m artificials + 1 rhs), artificial basis.
  std::vector<std::vector<double>> t(m, std::vector<double>(n + m + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = b[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) t[i][j] = sign * a[i][j];
    t[i][n + m] = sign * b[i];
    t[i][n + i] = 1.0;
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;

  auto pivot_on = [&](std::size_t row, std::size_t col) {
    const double pv = t[row][col];
    for (auto& v : t[row]) v /= pv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == row || t[i][col] == 0.0) continue;
      const double f = t[i][col];
      for (std::size_t j = 0; j <= n + m; ++j) t[i][j] -= f * t[row][j];
    }
    basis[row] = col;
  };

  // Bland: lowest-index entering column with positive reduced cost, lowest
  // basis index among minimum-ratio leaving rows. Returns false if unbounded.
  auto run = [&](const std::vector<double>& cost, std::size_t ncols) -> bool {
    for (long iter = 0; iter < 100000; ++iter) {
      long enter = -1;
      for (std::size_t j = 0; j < ncols; ++j) {
        double red = cost[j];
        for (std::size_t i = 0; i < m; ++i) red -= cost[basis[i]] * t[i][j];
        if (red > kFeasTol) {
          bool in_basis = false;
          for (std::size_t i = 0; i < m; ++i) in_basis |= basis[i] == j;
          if (!in_basis) {
            enter = static_cast<long>(j);
            break;
          }
        }
      }
      if (enter < 0) return true;
      long leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        if (t[i][enter] > kPivotTol) {
          const double ratio = t[i][n + m] / t[i][enter];
          if (ratio < best_ratio - kPivotTol ||
              (ratio < best_ratio + kPivotTol &&
               (leave < 0 || basis[i] < basis[leave]))) {
            best_ratio = ratio;
            leave = static_cast<long>(i);
          }
        }
      }
      if (leave < 0) return false;
      pivot_on(static_cast<std::size_t>(leave), static_cast<std::size_t>(enter));
    }
    throw NumericalError("simplex: iteration limit exceeded");
  };

  // Phase 1: drive out the artificials.
  std::vector<double> cost1(n + m, 0.0);
  for (std::size_t j = n; j < n + m; ++j) cost1[j] = -1.0;
  run(cost1, n + m);
  double art_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] >= n) art_sum += t[i][n + m];
  if (art_sum > kFeasTol) {
    LpSolution s;
    s.status = LpStatus::infeasible;
    s.message = "infeasible: residual " + fmt17(art_sum) + " after phase 1";
    return s;
  }
  // Pivot remaining zero-valued artificials out where possible; rows with no
  // eligible column are redundant and stay harmlessly basic at zero.
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(t[i][j]) > kPivotTol) {
        pivot_on(i, j);
        break;
      }
    }
  }

  // Phase 2: the real objective. Entering columns are restricted to the
  // first n, so any artificial left basic on a redundant row stays at zero.
  std::vector<double> cost2(n + m, 0.0);
  for (std::size_t j = 0; j < n_orig; ++j) cost2[j] = lp.objective[j];
  if (!run(cost2, n)) {
    LpSolution s;
    s.status = LpStatus::unbounded;
    s.message = "objective unbounded above";
    return s;
  }

  LpSolution s;
  s.status = LpStatus::optimal;
  s.x.assign(n_orig, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n_orig) s.x[basis[i]] = t[i][n + m];
  s.value = 0.0;
  for (std::size_t j = 0; j < n_orig; ++j) s.value += lp.objective[j] * s.x[j];
  return s;
}

}  // namespace ncx
