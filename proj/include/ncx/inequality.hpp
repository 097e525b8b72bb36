#pragma once

#include <array>
#include <string>
#include <vector>

#include "ncx/common.hpp"
#include "ncx/data_matrix.hpp"
#include "ncx/ontological.hpp"
#include "ncx/rational.hpp"
#include "ncx/simplex.hpp"

namespace ncx {

/// The average degree of correlation between the outcome X and the
/// preparation variable b: A = (1/6) sum_{t,b} p(X=b | M_t, P_{t,b}).
struct AValue {
  double value = 0.0;
  std::array<double, 6> per_term{};  // order (1,0) (1,1) (2,0) (2,1) (3,0) (3,1)
};

/// A from a 3x6 secondary matrix of outcome-0 probabilities:
/// the b=0 terms are the diagonal cells, the b=1 terms their complements.
inline AValue compute_A(const DataMatrix& ds) {
  ds.require_shape(3, 6, "compute_A");
  AValue a;
  for (int t = 0; t < 3; ++t) {
    a.per_term[2 * t] = ds.at(t, 2 * t);
    a.per_term[2 * t + 1] = 1.0 - ds.at(t, 2 * t + 1);
  }
  for (double v : a.per_term) a.value += v / 6.0;
  return a;
}

template <class Scalar>
Scalar compute_A_exact(const std::vector<std::vector<Scalar>>& grid) {
  if (grid.size() != 3 || grid[0].size() != 6)
    throw ValidationError("compute_A_exact: need a 3x6 grid");
  Scalar sum{};
  for (int t = 0; t < 3; ++t) {
    sum += grid[t][2 * t];
    sum += Scalar{1} - grid[t][2 * t + 1];
  }
  return sum / Scalar{6};
}

/// The six vertices of the polygon cut out of the unit cube by the coin-flip
/// constraint (xi_1 + xi_2 + xi_3)/3 = 1/2: all permutations of (1, 1/2, 0).
inline std::vector<std::array<Rat, 3>> polygon_vertices() {
  const Rat one(1), half(1, 2), zero(0);
  return {{one, half, zero}, {one, zero, half}, {half, one, zero},
          {half, zero, one}, {zero, one, half}, {zero, half, one}};
}

/// The tight noncontextual bound on A, by enumerating the polygon vertices
/// and maximizing (1/3) sum_t max(xi_t, 1-xi_t). Exact rational 5/6.
inline Rat noncontextual_bound() {
  Rat best(0);
  for (const auto& v : polygon_vertices()) {
    Rat avg(0);
    for (const Rat& x : v) avg += std::max(x, Rat(1) - x);
    avg /= 3;
    best = std::max(best, avg);
  }
  return best;
}

struct NcMaximum {
  double value = 0.0;
  OntologicalModel witness;
};

/// Maximum of A over noncontextual models whose ontic states sit on the
/// polygon vertices (response functions fixed by the vertex coordinates;
/// the mu(lambda|P_{t,b}) are LP variables under the preparation-NC
/// constraint). The optimum is the tight bound 5/6.
inline NcMaximum max_noncontextual_A(int n_lambda) {
  if (n_lambda < 6) throw ValidationError("max_noncontextual_A: need n_lambda >= 6");
  const auto vertices = polygon_vertices();
  std::vector<std::array<double, 3>> xi(n_lambda);
  for (int l = 0; l < n_lambda; ++l)
    for (int t = 0; t < 3; ++t) xi[l][t] = to_double(vertices[l % 6][t]);

  // Variables mu[t][b][lambda], flattened (t,b) row-major.
  const int n = 6 * n_lambda;
  auto idx = [n_lambda](int t, int b, int l) { return (2 * t + b) * n_lambda + l; };

  LinearProgram lp;
  lp.objective.assign(n, 0.0);
  // A = 1/2 + (1/6) sum_t sum_l xi_t(l) (mu_{t,0}(l) - mu_{t,1}(l))
  for (int t = 0; t < 3; ++t)
    for (int l = 0; l < n_lambda; ++l) {
      lp.objective[idx(t, 0, l)] += xi[l][t] / 6.0;
      lp.objective[idx(t, 1, l)] -= xi[l][t] / 6.0;
    }
  for (int t = 0; t < 3; ++t)
    for (int b = 0; b < 2; ++b) {
      std::vector<double> row(n, 0.0);
      for (int l = 0; l < n_lambda; ++l) row[idx(t, b, l)] = 1.0;
      lp.eq_lhs.push_back(std::move(row));
      lp.eq_rhs.push_back(1.0);
    }
  // Preparation noncontextuality: mu(.|P_t) identical for t = 1,2,3.
  for (int t = 1; t < 3; ++t)
    for (int l = 0; l < n_lambda; ++l) {
      std::vector<double> row(n, 0.0);
      row[idx(0, 0, l)] += 1.0;
      row[idx(0, 1, l)] += 1.0;
      row[idx(t, 0, l)] -= 1.0;
      row[idx(t, 1, l)] -= 1.0;
      lp.eq_lhs.push_back(std::move(row));
      lp.eq_rhs.push_back(0.0);
    }

  const LpSolution sol = solve(lp);
  if (sol.status != LpStatus::optimal)
    throw NumericalError("max_noncontextual_A: LP failed: " + sol.message);

  NcMaximum out;
  out.value = 0.5 + sol.value;
  out.witness.n_lambda = n_lambda;
  for (int t = 0; t < 3; ++t)
    for (int b = 0; b < 2; ++b) {
      std::vector<double> dist(n_lambda);
      double sum = 0.0;
      for (int l = 0; l < n_lambda; ++l) {
        dist[l] = std::max(0.0, sol.x[idx(t, b, l)]);
        sum += dist[l];
      }
      for (auto& p : dist) p /= sum;  // scrub LP roundoff
      out.witness.mu["P" + std::to_string(t + 1) + "," + std::to_string(b)] =
          std::move(dist);
    }
  for (int t = 0; t < 3; ++t) {
    std::vector<double> resp(n_lambda);
    for (int l = 0; l < n_lambda; ++l) resp[l] = xi[l][t];
    out.witness.xi["M" + std::to_string(t + 1)] = std::move(resp);
  }
  out.witness.validate();
  return out;
}

/// The noncontextual model saturating A = 5/6: ontic states are the six
/// polygon vertices, and each mu(.|P_{t,b}) solves the linear system that
/// puts the operational statistics at the corresponding row of the
/// saturating table. There is a one-parameter family of solutions
/// (alpha in [1/3, 5/12] on the two own-vertex weights); alpha = 1/3 is the
/// choice fixed here, which makes every mixed preparation uniform.
inline ExactOntologicalModel saturating_model() {
  ExactOntologicalModel m;
  m.n_lambda = 6;
  const auto verts = polygon_vertices();
  for (int t = 0; t < 3; ++t) {
    std::vector<Rat> resp(6);
    for (int l = 0; l < 6; ++l) resp[l] = verts[l][t];
    m.xi["M" + std::to_string(t + 1)] = std::move(resp);
  }
  const Rat th(1, 3), sx(1, 6), z(0);
  // alpha = 1/3 solution for P_{1,b}; the other t's are coordinate
  // permutations of the vertex list: swap(1,2) maps vertices (1 3)(2 5)(4 6),
  // swap(1,3) maps (1 6)(2 4)(3 5).
  const std::vector<Rat> mu10{th, th, sx, sx, z, z};
  const std::vector<Rat> mu11{z, z, sx, sx, th, th};
  auto permute = [](const std::vector<Rat>& v, const std::array<int, 6>& p) {
    std::vector<Rat> out(6);
    for (int i = 0; i < 6; ++i) out[i] = v[p[i]];
    return out;
  };
  const std::array<int, 6> swap12{2, 4, 0, 5, 1, 3};
  const std::array<int, 6> swap13{5, 3, 4, 1, 2, 0};
  m.mu["P1,0"] = mu10;
  m.mu["P1,1"] = mu11;
  m.mu["P2,0"] = permute(mu10, swap12);
  m.mu["P2,1"] = permute(mu11, swap12);
  m.mu["P3,0"] = permute(mu10, swap13);
  m.mu["P3,1"] = permute(mu11, swap13);
  m.validate();
  return m;
}

/// A preparation-noncontextual but measurement-contextual model beating the
/// bound with A = 9/10. Eight ontic states carrying deterministic responses
/// (the corners of the response cube, so the coin-flip constraint fails at
/// every ontic state); each P_{t,b} mixes the three corners that answer b on
/// M_t but disagree with b somewhere else (weight 3/10 each) plus the corner
/// that disagrees with b on every measurement (weight 1/10).
inline ExactOntologicalModel contextual_example_model() {
  ExactOntologicalModel m;
  m.n_lambda = 8;
  // Corner order: (1,0,0) (0,1,0) (0,0,1) (0,1,1) (1,0,1) (1,1,0) (1,1,1) (0,0,0)
  const std::array<std::array<int, 3>, 8> corners{{{1, 0, 0},
                                                   {0, 1, 0},
                                                   {0, 0, 1},
                                                   {0, 1, 1},
                                                   {1, 0, 1},
                                                   {1, 1, 0},
                                                   {1, 1, 1},
                                                   {0, 0, 0}}};
  for (int t = 0; t < 3; ++t) {
    std::vector<Rat> resp(8);
    for (int l = 0; l < 8; ++l) resp[l] = Rat(corners[l][t]);
    m.xi["M" + std::to_string(t + 1)] = std::move(resp);
  }
  const Rat w(3, 10), s(1, 10);
  for (int t = 0; t < 3; ++t) {
    for (int b = 0; b < 2; ++b) {
      std::vector<Rat> dist(8, Rat(0));
      for (int l = 0; l < 8; ++l) {
        const bool own = corners[l][t] == (b == 0 ? 1 : 0);
        int agree = 0;
        for (int tt = 0; tt < 3; ++tt) agree += corners[l][tt] == (b == 0 ? 1 : 0);
        if (own && agree < 3) dist[l] = w;       // answers b on M_t, not everywhere
        if (!own && agree == 0) dist[l] = s;     // the all-wrong corner
      }
      m.mu["P" + std::to_string(t + 1) + "," + std::to_string(b)] = std::move(dist);
    }
  }
  m.validate();
  return m;
}

/// Expected operational statistics of the saturating model (the table with
/// diagonal 5/6): rows M1 M2 M3 M*, columns P1,0 .. P3,1 then P1 P2 P3.
inline std::vector<std::vector<Rat>> saturating_table() {
  auto r = [](long long n, long long d) { return Rat(n, d); };
  std::vector<std::vector<Rat>> t = {
      {r(5, 6), r(1, 6), r(1, 3), r(2, 3), r(1, 3), r(2, 3), r(1, 2), r(1, 2), r(1, 2)},
      {r(1, 3), r(2, 3), r(5, 6), r(1, 6), r(1, 3), r(2, 3), r(1, 2), r(1, 2), r(1, 2)},
      {r(1, 3), r(2, 3), r(1, 3), r(2, 3), r(5, 6), r(1, 6), r(1, 2), r(1, 2), r(1, 2)},
      {r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2)}};
  return t;
}

/// Expected statistics of the contextual example (diagonal 9/10), same layout.
inline std::vector<std::vector<Rat>> contextual_table() {
  auto r = [](long long n, long long d) { return Rat(n, d); };
  std::vector<std::vector<Rat>> t = {
      {r(9, 10), r(1, 10), r(3, 10), r(7, 10), r(3, 10), r(7, 10), r(1, 2), r(1, 2), r(1, 2)},
      {r(3, 10), r(7, 10), r(9, 10), r(1, 10), r(3, 10), r(7, 10), r(1, 2), r(1, 2), r(1, 2)},
      {r(3, 10), r(7, 10), r(3, 10), r(7, 10), r(9, 10), r(1, 10), r(1, 2), r(1, 2), r(1, 2)},
      {r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2)}};
  return t;
}

/// Full statistics grid of an exact model in the table layout above
/// (columns P1,0..P3,1, P1, P2, P3; rows M1, M2, M3, M*).
inline std::vector<std::vector<Rat>> exact_table_statistics(
    const ExactOntologicalModel& m) {
  ExactOntologicalModel ext = m;
  for (int t = 1; t <= 3; ++t)
    ext.mu["P" + std::to_string(t)] = mixed_preparation(m, t);
  ext.xi["M*"] = coin_response(m);
  const std::vector<std::string> preps{"P1,0", "P1,1", "P2,0", "P2,1", "P3,0",
                                       "P3,1", "P1",   "P2",   "P3"};
  const std::vector<std::string> meas{"M1", "M2", "M3", "M*"};
  return model_statistics_grid(ext, preps, meas);
}

/// The 3x6 block of an exact model's statistics, as needed by compute_A.
inline std::vector<std::vector<Rat>> exact_secondary_block(
    const ExactOntologicalModel& m) {
  const std::vector<std::string> preps{"P1,0", "P1,1", "P2,0",
                                       "P2,1", "P3,0", "P3,1"};
  const std::vector<std::string> meas{"M1", "M2", "M3"};
  return model_statistics_grid(m, preps, meas);
}

}  // namespace ncx
