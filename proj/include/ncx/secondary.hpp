#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ncx/common.hpp"
#include "ncx/data_matrix.hpp"
#include "ncx/gpt.hpp"
#include "ncx/simplex.hpp"

namespace ncx {

/// Row-stochastic 6x8 table: each secondary preparation (t,b), t=1..3, as a
/// mixture of the eight primaries.
struct PrepWeights {
  Grid u;  // 6 rows x 8 columns

  void validate() const {
    if (u.size() != 6) throw ValidationError("PrepWeights: need 6 rows");
    for (const auto& row : u) {
      if (row.size() != 8) throw ValidationError("PrepWeights: need 8 columns");
      double s = 0.0;
      for (double w : row) {
        if (w < -1e-12) throw ValidationError("PrepWeights: negative weight");
        s += w;
      }
      if (std::abs(s - 1.0) > tol::kAlgebraic)
        throw ValidationError("PrepWeights: row sums to " + fmt17(s));
    }
  }
};

/// Row-stochastic table over the measurement candidate columns. The reduced
/// candidate set is (M1 M2 M3 M4, flipped-M4, always-1, always-0); a full set
/// adds the flipped M1..M3.
struct MeasWeights {
  Grid v;  // 3 rows x candidates
  std::vector<std::string> candidates;

  void validate() const {
    if (v.size() != 3) throw ValidationError("MeasWeights: need 3 rows");
    for (const auto& row : v) {
      if (row.size() != candidates.size())
        throw ValidationError("MeasWeights: candidate count mismatch");
      double s = 0.0;
      for (double w : row) {
        if (w < -1e-12) throw ValidationError("MeasWeights: negative weight");
        s += w;
      }
      if (std::abs(s - 1.0) > tol::kAlgebraic)
        throw ValidationError("MeasWeights: row sums to " + fmt17(s));
    }
  }
};

enum class MeasCandidateSet { reduced, full };

inline std::vector<std::string> candidate_labels(MeasCandidateSet set) {
  std::vector<std::string> labels{"M1", "M2", "M3", "M4", "not-M4", "always-1",
                                  "always-0"};
  if (set == MeasCandidateSet::full) {
    labels.push_back("not-M1");
    labels.push_back("not-M2");
    labels.push_back("not-M3");
  }
  return labels;
}

/// Candidate measurement-event rows over the eight preparation columns.
inline std::vector<std::vector<double>> candidate_rows(const DataMatrix& dp,
                                                       MeasCandidateSet set) {
  dp.require_shape(4, 8, "candidate_rows");
  std::vector<std::vector<double>> rows;
  for (int t = 0; t < 4; ++t) rows.push_back(dp.row(t));
  rows.push_back(post_process_row(dp.row(3), PostProcess::flip));
  rows.push_back(std::vector<double>(8, 1.0));
  rows.push_back(std::vector<double>(8, 0.0));
  if (set == MeasCandidateSet::full)
    for (int t = 0; t < 3; ++t)
      rows.push_back(post_process_row(dp.row(t), PostProcess::flip));
  return rows;
}

struct SecondaryResult {
  PrepWeights prep_weights;
  MeasWeights meas_weights;
  double C_P = 0.0;
  double C_M = 0.0;
  DataMatrix Ds;  // 3x6

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["prep_weights"] = prep_weights.u;
    j["meas_weights"] = meas_weights.v;
    j["meas_candidates"] = meas_weights.candidates;
    j["C_P"] = C_P;
    j["C_M"] = C_M;
    j["Ds"] = Ds.to_json();
    return j;
  }
};

/// Secondary preparations: maximize C_P = (1/6) sum_t,b u[t,b][t,b] over
/// row-stochastic u subject to the three pair averages
/// (P^s_{t,0}+P^s_{t,1})/2 coinciding exactly (encoded as differences to the
/// t=1 pair, two vector equalities over the four measurement rows).
inline std::pair<PrepWeights, double> build_secondary_preparations(const DataMatrix& dp) {
  dp.require_shape(4, 8, "build_secondary_preparations");
  const std::size_t nvar = 48;  // u[i][j], i row-major
  auto idx = [](std::size_t i, std::size_t j) { return i * 8 + j; };

  LinearProgram lp;
  lp.objective.assign(nvar, 0.0);
  for (std::size_t i = 0; i < 6; ++i) lp.objective[idx(i, i)] = 1.0;

  for (std::size_t i = 0; i < 6; ++i) {  // row sums
    std::vector<double> row(nvar, 0.0);
    for (std::size_t j = 0; j < 8; ++j) row[idx(i, j)] = 1.0;
    lp.eq_lhs.push_back(std::move(row));
    lp.eq_rhs.push_back(1.0);
  }
  for (int t = 1; t < 3; ++t) {  // pair-average differences to the t=1 pair
    for (std::size_t m = 0; m < 4; ++m) {
      std::vector<double> row(nvar, 0.0);
      for (std::size_t j = 0; j < 8; ++j) {
        const double c = dp.at(m, j);
        row[idx(0, j)] += c;
        row[idx(1, j)] += c;
        row[idx(2 * t, j)] -= c;
        row[idx(2 * t + 1, j)] -= c;
      }
      lp.eq_lhs.push_back(std::move(row));
      lp.eq_rhs.push_back(0.0);
    }
  }

  const LpSolution sol = solve(lp);
  if (sol.status != LpStatus::optimal)
    throw NumericalError("secondary preparation LP " +
                         std::string(sol.status == LpStatus::infeasible ? "infeasible"
                                                                        : "unbounded") +
                         ": " + sol.message);
  PrepWeights w;
  w.u.assign(6, std::vector<double>(8, 0.0));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 8; ++j) w.u[i][j] = std::max(0.0, sol.x[idx(i, j)]);
  w.validate();
  return {w, sol.value / 6.0};
}

/// Secondary measurements: maximize C_M = (1/3) sum_t v[t][t] over
/// row-stochastic v subject to (M^s_1+M^s_2+M^s_3)/3 = 1/2 on every
/// preparation column.
inline std::pair<MeasWeights, double> build_secondary_measurements(
    const DataMatrix& dp, MeasCandidateSet set = MeasCandidateSet::reduced) {
  dp.require_shape(4, 8, "build_secondary_measurements");
  const auto cand = candidate_rows(dp, set);
  const std::size_t k = cand.size();
  const std::size_t nvar = 3 * k;
  auto idx = [k](std::size_t i, std::size_t j) { return i * k + j; };

  LinearProgram lp;
  lp.objective.assign(nvar, 0.0);
  for (std::size_t i = 0; i < 3; ++i) lp.objective[idx(i, i)] = 1.0;

  for (std::size_t i = 0; i < 3; ++i) {  // row sums
    std::vector<double> row(nvar, 0.0);
    for (std::size_t j = 0; j < k; ++j) row[idx(i, j)] = 1.0;
    lp.eq_lhs.push_back(std::move(row));
    lp.eq_rhs.push_back(1.0);
  }
  for (std::size_t col = 0; col < 8; ++col) {  // coin-flip equivalence per column
    std::vector<double> row(nvar, 0.0);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < k; ++j) row[idx(i, j)] = cand[j][col];
    lp.eq_lhs.push_back(std::move(row));
    lp.eq_rhs.push_back(1.5);
  }

  const LpSolution sol = solve(lp);
  if (sol.status != LpStatus::optimal) {
    // Diagnose the failure direction: where the unconstrained uniform mixture
    // of the three primaries lands relative to 1/2.
    double lo = 1.0, hi = 0.0;
    for (std::size_t col = 0; col < 8; ++col) {
      const double avg = (dp.at(0, col) + dp.at(1, col) + dp.at(2, col)) / 3.0;
      lo = std::min(lo, avg);
      hi = std::max(hi, avg);
    }
    throw NumericalError(
        "secondary measurement LP infeasible: primary coin-flip averages span [" +
        fmt17(lo) + ", " + fmt17(hi) + "]; " + sol.message);
  }
  MeasWeights w;
  w.candidates = candidate_labels(set);
  w.v.assign(3, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < k; ++j) w.v[i][j] = std::max(0.0, sol.x[idx(i, j)]);
  w.validate();
  return {w, sol.value / 3.0};
}

/// The 3x6 secondary data matrix: rows mixed by v over the candidate events,
/// columns mixed by u over the primaries.
inline DataMatrix secondary_matrix(const DataMatrix& dp, const PrepWeights& u,
                                   const MeasWeights& v) {
  dp.require_shape(4, 8, "secondary_matrix");
  u.validate();
  v.validate();
  const auto cand = candidate_rows(
      dp, v.candidates.size() == 7 ? MeasCandidateSet::reduced : MeasCandidateSet::full);
  if (cand.size() != v.candidates.size())
    throw ValidationError("secondary_matrix: weight/candidate shape mismatch");

  // Secondary measurement rows on the primary preparations.
  Grid ms(3, std::vector<double>(8, 0.0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < cand.size(); ++j)
      for (std::size_t col = 0; col < 8; ++col) ms[i][col] += v.v[i][j] * cand[j][col];

  Grid s(3, std::vector<double>(6, 0.0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t p = 0; p < 6; ++p)
      for (std::size_t j = 0; j < 8; ++j) s[i][p] += u.u[p][j] * ms[i][j];

  return DataMatrix(DataMatrix::measurement_ids(3),
                    DataMatrix::preparation_ids(3), s);
}

}  // namespace ncx
