// Test-only oracles, kept independent of the implementation paths they check.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

namespace oracles {

using C2 = std::complex<double>;
using Mat2 = std::array<std::array<C2, 2>, 2>;

// Density operator (I + r.sigma)/2 as an explicit 2x2 complex matrix.
inline Mat2 density(const std::array<double, 3>& r) {
  const C2 i(0.0, 1.0);
  return {{{C2(0.5 * (1.0 + r[2])), 0.5 * (r[0] - i * r[1])},
           {0.5 * (r[0] + i * r[1]), C2(0.5 * (1.0 - r[2]))}}};
}

// Effect (e0 I + e.sigma)/2.
inline Mat2 effect(double e0, const std::array<double, 3>& e) {
  const C2 i(0.0, 1.0);
  return {{{C2(0.5 * (e0 + e[2])), 0.5 * (e[0] - i * e[1])},
           {0.5 * (e[0] + i * e[1]), C2(0.5 * (e0 - e[2]))}}};
}

// Born rule via the matrix trace, p = Re tr(E rho).
inline double born_trace(double e0, const std::array<double, 3>& e,
                         const std::array<double, 3>& r) {
  const Mat2 E = effect(e0, e), R = density(r);
  C2 tr(0.0);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) tr += E[i][k] * R[k][i];
  return tr.real();
}

// Dense Gaussian elimination with partial pivoting; nullopt when singular.
inline std::optional<std::vector<double>> gauss_solve(
    std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-12) return std::nullopt;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

// Brute-force LP oracle: enumerate every basis (m-subset of columns), solve
// the square system, keep feasible ones, return the best objective.
// Maximize c.x s.t. A x = b, x >= 0.
struct BruteResult {
  bool feasible = false;
  double value = 0.0;
  std::vector<double> x;
};

inline void enumerate_subsets(std::size_t n, std::size_t m,
                              std::vector<std::size_t>& cur, std::size_t start,
                              const std::function<void(const std::vector<std::size_t>&)>& f) {
  if (cur.size() == m) {
    f(cur);
    return;
  }
  for (std::size_t j = start; j < n; ++j) {
    cur.push_back(j);
    enumerate_subsets(n, m, cur, j + 1, f);
    cur.pop_back();
  }
}

inline BruteResult brute_force_lp(const std::vector<double>& c,
                                  const std::vector<std::vector<double>>& a,
                                  const std::vector<double>& b) {
  const std::size_t m = a.size(), n = c.size();
  BruteResult best;
  std::vector<std::size_t> cur;
  enumerate_subsets(n, m, cur, 0, [&](const std::vector<std::size_t>& basis) {
    std::vector<std::vector<double>> sq(m, std::vector<double>(m));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) sq[i][k] = a[i][basis[k]];
    const auto sol = gauss_solve(sq, b);
    if (!sol) return;
    for (double v : *sol)
      if (v < -1e-9) return;
    std::vector<double> x(n, 0.0);
    for (std::size_t k = 0; k < m; ++k) x[basis[k]] = std::max(0.0, (*sol)[k]);
    double val = 0.0;
    for (std::size_t j = 0; j < n; ++j) val += c[j] * x[j];
    if (!best.feasible || val > best.value) {
      best.feasible = true;
      best.value = val;
      best.x = x;
    }
  });
  return best;
}

}  // namespace oracles
