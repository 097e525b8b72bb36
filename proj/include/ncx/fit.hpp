#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <json.hpp>

#include "ncx/common.hpp"
#include "ncx/data_matrix.hpp"

namespace ncx {

/// The four parameters {a,b,c,d} of the tomographic-completeness constraint
/// a*p1 + b*p2 + c*p3 + d*p4 - 1 = 0. The fixed -1 offset makes the
/// representation unique (no scale or sign freedom).
class Hyperplane {
 public:
  Hyperplane(double a, double b, double c, double d) : c_{a, b, c, d} {
    if (a == 0.0 && b == 0.0 && c == 0.0 && d == 0.0)
      throw ValidationError("Hyperplane: all coefficients zero");
  }
  explicit Hyperplane(const Vec4& c) : Hyperplane(c[0], c[1], c[2], c[3]) {}

  double a() const { return c_[0]; }
  double b() const { return c_[1]; }
  double c() const { return c_[2]; }
  double d() const { return c_[3]; }
  const Vec4& coeffs() const { return c_; }

  double residual(const Vec4& p) const { return dot(c_, p) - 1.0; }

  nlohmann::json to_json() const {
    return {{"a", c_[0]}, {"b", c_[1]}, {"c", c_[2]}, {"d", c_[3]}};
  }
  static Hyperplane from_json(const nlohmann::json& j) {
    return Hyperplane(j.at("a").get<double>(), j.at("b").get<double>(),
                      j.at("c").get<double>(), j.at("d").get<double>());
  }

 private:
  Vec4 c_;
};

/// Weighted squared distance of one data column to the hyperplane,
/// chi2 = (a r1 + b r2 + c r3 + d r4 - 1)^2 / sum_i (c_i dr_i)^2.
inline double column_chi2(const Vec4& r, const Vec4& dr, const Hyperplane& h) {
  double denom = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (!(dr[i] > 0.0)) throw ValidationError("column_chi2: uncertainties must be positive");
    denom += h.coeffs()[i] * h.coeffs()[i] * dr[i] * dr[i];
  }
  if (denom <= 0.0) throw NumericalError("column_chi2: zero denominator");
  const double num = h.residual(r);
  return num * num / denom;
}

/// Closest point on the hyperplane in the Mahalanobis metric given by dr,
/// from the Lagrange-multiplier solution:
/// p_i = r_i - c_i dr_i^2 (sum_j c_j r_j - 1) / (sum_j c_j^2 dr_j^2).
inline Vec4 project_column(const Vec4& r, const Vec4& dr, const Hyperplane& h) {
  double denom = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (!(dr[i] > 0.0))
      throw ValidationError("project_column: uncertainties must be positive");
    denom += h.coeffs()[i] * h.coeffs()[i] * dr[i] * dr[i];
  }
  if (denom <= 0.0) throw NumericalError("project_column: zero denominator");
  const double scale = h.residual(r) / denom;
  Vec4 p;
  for (int i = 0; i < 4; ++i) p[i] = r[i] - h.coeffs()[i] * dr[i] * dr[i] * scale;
  return p;
}

namespace detail {

// Regularized incomplete gamma functions, series and continued-fraction
// branches (Lentz), to absolute accuracy well below 1e-10.
inline double gamma_p_series(double a, double x) {
  double sum = 1.0 / a, term = sum, ap = a;
  for (int n = 0; n < 1000; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, f = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return f * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

/// Upper-tail probability of a chi-squared distribution with `dof` degrees of
/// freedom: Q(dof/2, x/2). Series branch for x < dof+1, continued fraction
/// otherwise.
inline double chi2_p_value(double x, int dof) {
  if (x < 0.0 || dof < 1) throw ValidationError("chi2_p_value: need x >= 0, dof >= 1");
  if (x == 0.0) return 1.0;
  const double a = 0.5 * dof, z = 0.5 * x;
  if (x < dof + 1.0) return 1.0 - detail::gamma_p_series(a, z);
  return detail::gamma_q_contfrac(a, z);
}

struct FitResult {
  Hyperplane hyperplane;
  DataMatrix primary;                  // the projected 4x8 matrix D of best fit
  double chi2_total = 0.0;
  std::array<double, 8> chi2_per_column{};
  double p_value = 0.0;
  bool degenerate_warning = false;     // columns affinely span < 3 dimensions

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["hyperplane"] = hyperplane.to_json();
    j["primary"] = primary.to_json();
    j["chi2_total"] = chi2_total;
    j["chi2_per_column"] = chi2_per_column;
    j["p_value"] = p_value;
    j["degenerate_warning"] = degenerate_warning;
    return j;
  }
  static FitResult from_json(const nlohmann::json& j) {
    FitResult f{Hyperplane::from_json(j.at("hyperplane")),
                DataMatrix::from_json(j.at("primary"))};
    f.chi2_total = j.at("chi2_total").get<double>();
    f.chi2_per_column = j.at("chi2_per_column").get<std::array<double, 8>>();
    f.p_value = j.at("p_value").get<double>();
    f.degenerate_warning = j.value("degenerate_warning", false);
    return f;
  }
};

namespace detail {

struct FitColumns {
  std::array<Vec4, 8> r;
  std::array<Vec4, 8> dr;
};

inline double fit_objective(const FitColumns& cols, const Vec4& c) {
  double total = 0.0;
  for (int j = 0; j < 8; ++j) {
    double num = dot(c, cols.r[j]) - 1.0;
    double den = 0.0;
    for (int i = 0; i < 4; ++i) den += c[i] * c[i] * cols.dr[j][i] * cols.dr[j][i];
    if (den < 1e-300) return std::numeric_limits<double>::infinity();
    total += num * num / den;
  }
  return total;
}

inline Vec4 fit_gradient(const FitColumns& cols, const Vec4& c) {
  Vec4 g{0.0, 0.0, 0.0, 0.0};
  for (int j = 0; j < 8; ++j) {
    const double num = dot(c, cols.r[j]) - 1.0;
    double den = 0.0;
    for (int i = 0; i < 4; ++i) den += c[i] * c[i] * cols.dr[j][i] * cols.dr[j][i];
    for (int k = 0; k < 4; ++k) {
      const double w = cols.dr[j][k] * cols.dr[j][k];
      g[k] += 2.0 * num * cols.r[j][k] / den -
              2.0 * c[k] * w * num * num / (den * den);
    }
  }
  return g;
}

// Gaussian elimination with partial pivoting for a 4x4 system; returns false
// when the matrix is numerically singular.
inline bool solve4(std::array<Vec4, 4> m, Vec4 rhs, Vec4& out) {
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) < 1e-12) return false;
    std::swap(m[col], m[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (int r = col + 1; r < 4; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[r][k] -= f * m[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int r = 3; r >= 0; --r) {
    double s = rhs[r];
    for (int k = r + 1; k < 4; ++k) s -= m[r][k] * out[k];
    out[r] = s / m[r][r];
  }
  return true;
}

// BFGS with Armijo backtracking on the 4-d objective. Stops on gradient norm
// < 1e-12, step < 1e-14, or 200 iterations.
inline std::pair<Vec4, double> bfgs_minimize(const FitColumns& cols, Vec4 x) {
  using Mat4 = std::array<Vec4, 4>;
  auto identity = [] {
    Mat4 h{};
    for (int i = 0; i < 4; ++i) h[i][i] = 1.0;
    return h;
  };
  Mat4 h = identity();
  double f = fit_objective(cols, x);
  if (!std::isfinite(f)) return {x, f};
  Vec4 g = fit_gradient(cols, x);
  for (int iter = 0; iter < 200; ++iter) {
    double gnorm = std::sqrt(dot(g, g));
    if (gnorm < 1e-12) break;
    Vec4 dir{};
    for (int i = 0; i < 4; ++i) dir[i] = -dot(h[i], g);
    if (dot(dir, g) >= 0.0) {  // not a descent direction: reset curvature
      h = identity();
      for (int i = 0; i < 4; ++i) dir[i] = -g[i];
    }
    const double slope = dot(dir, g);
    double t = 1.0;
    Vec4 xn;
    double fn = std::numeric_limits<double>::infinity();
    for (int ls = 0; ls < 60; ++ls) {
      for (int i = 0; i < 4; ++i) xn[i] = x[i] + t * dir[i];
      fn = fit_objective(cols, xn);
      if (fn <= f + 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (!(fn < f)) break;
    Vec4 s;
    for (int i = 0; i < 4; ++i) s[i] = xn[i] - x[i];
    if (std::sqrt(dot(s, s)) < 1e-14) {
      x = xn;
      f = fn;
      break;
    }
    Vec4 gn = fit_gradient(cols, xn);
    Vec4 y;
    for (int i = 0; i < 4; ++i) y[i] = gn[i] - g[i];
    const double sy = dot(s, y);
    if (sy > 1e-18) {
      // H <- (I - s y^T / sy) H (I - y s^T / sy) + s s^T / sy
      Vec4 hy{};
      for (int i = 0; i < 4; ++i) hy[i] = dot(h[i], y);
      const double yhy = dot(y, hy);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          h[i][j] += (sy + yhy) * s[i] * s[j] / (sy * sy) -
                     (hy[i] * s[j] + s[i] * hy[j]) / sy;
    }
    x = xn;
    f = fn;
    g = gn;
  }
  return {x, f};
}

// Affine rank of the eight columns; < 3 flags a degenerate configuration.
inline int affine_rank(const std::array<Vec4, 8>& cols) {
  Vec4 mean{};
  for (const auto& c : cols)
    for (int i = 0; i < 4; ++i) mean[i] += c[i] / 8.0;
  std::vector<Vec4> m;
  for (const auto& c : cols) {
    Vec4 d;
    for (int i = 0; i < 4; ++i) d[i] = c[i] - mean[i];
    m.push_back(d);
  }
  int rank = 0;
  for (int col = 0; col < 4 && rank < static_cast<int>(m.size()); ++col) {
    int piv = -1;
    double best = 1e-9;
    for (std::size_t r = rank; r < m.size(); ++r)
      if (std::abs(m[r][col]) > best) {
        best = std::abs(m[r][col]);
        piv = static_cast<int>(r);
      }
    if (piv < 0) continue;
    std::swap(m[rank], m[piv]);
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (static_cast<int>(r) == rank) continue;
      const double f = m[r][col] / m[rank][col];
      for (int k = 0; k < 4; ++k) m[r][k] -= f * m[rank][k];
    }
    ++rank;
  }
  return rank;
}

}  // namespace detail

/// Fits the best hyperplane to a 4x8 raw matrix by minimizing the total
/// weighted squared distance, then projects every column onto it.
///
/// Multistart quasi-Newton: the all-ones plane a=b=c=d=1/2 plus 15 exact
/// hyperplanes through random 4-subsets of the columns (fixed internal seed,
/// fully deterministic). Ties between starts go to the lowest start index.
inline FitResult fit_hyperplane(const DataMatrix& raw) {
  raw.require_shape(4, 8, "fit_hyperplane");
  if (!raw.has_uncertainties())
    throw ValidationError("fit_hyperplane: raw matrix needs uncertainties");

  detail::FitColumns cols;
  double floor_sigma = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 4; ++i) {
      const double s = raw.sigma(i, j);
      if (s > 0.0) floor_sigma = std::min(floor_sigma, s);
    }
  if (!std::isfinite(floor_sigma))
    throw ValidationError("fit_hyperplane: all uncertainties are zero");
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 4; ++i) {
      cols.r[j][i] = raw.at(i, j);
      const double s = raw.sigma(i, j);
      cols.dr[j][i] = s > 0.0 ? s : floor_sigma;  // degenerate cells get the floor
    }

  std::vector<Vec4> starts;
  starts.push_back(Vec4{0.5, 0.5, 0.5, 0.5});
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<int> pick(0, 7);
  int guard = 0;
  while (starts.size() < 16 && ++guard < 400) {
    std::array<int, 4> idx{};
    bool dup = false;
    for (int k = 0; k < 4; ++k) {
      idx[k] = pick(rng);
      for (int l = 0; l < k; ++l) dup |= idx[l] == idx[k];
    }
    if (dup) continue;
    std::array<Vec4, 4> m;
    Vec4 rhs{1.0, 1.0, 1.0, 1.0};
    for (int k = 0; k < 4; ++k) m[k] = cols.r[idx[k]];
    Vec4 c;
    if (detail::solve4(m, rhs, c)) starts.push_back(c);
  }

  Vec4 best_x{0.5, 0.5, 0.5, 0.5};
  double best_f = std::numeric_limits<double>::infinity();
  for (const Vec4& s : starts) {
    auto [x, f] = detail::bfgs_minimize(cols, s);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  if (!std::isfinite(best_f))
    throw NumericalError("fit_hyperplane: optimizer failed to converge from any start");

  const Hyperplane h(best_x);
  Grid primary(4, std::vector<double>(8));
  std::array<double, 8> per_col{};
  double total = 0.0;
  for (int j = 0; j < 8; ++j) {
    per_col[j] = column_chi2(cols.r[j], cols.dr[j], h);
    total += per_col[j];
    const Vec4 p = project_column(cols.r[j], cols.dr[j], h);
    for (int i = 0; i < 4; ++i)
      primary[i][j] = clamp_probability(p[i], tol::kProbability, "projected probability");
  }

  FitResult result{h, DataMatrix(raw.row_ids(), raw.col_ids(), primary)};
  result.chi2_total = total;
  result.chi2_per_column = per_col;
  result.p_value = chi2_p_value(total, 4);
  result.degenerate_warning = detail::affine_rank(cols.r) < 3;
  return result;
}

}  // namespace ncx
