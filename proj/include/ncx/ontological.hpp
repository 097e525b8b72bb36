#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncx/common.hpp"
#include "ncx/data_matrix.hpp"
#include "ncx/rational.hpp"

namespace ncx {

/// Finite ontological model: a set Lambda of ontic states, distributions
/// mu(lambda|P) for each preparation, and outcome-0 response functions
/// xi(0|M,lambda) for each measurement.
///
/// Scalar is double for fitted/sampled models and Rat for the exact table
/// fixtures. Preparation keys follow the matrix column labels ("P1,0");
/// measurement keys the row labels ("M1").
template <class Scalar>
struct BasicOntologicalModel {
  int n_lambda = 0;
  std::map<std::string, std::vector<Scalar>> mu;
  std::map<std::string, std::vector<Scalar>> xi;

  void validate(double tolerance = tol::kAlgebraic) const {
    if (n_lambda < 1) throw ValidationError("OntologicalModel: n_lambda must be >= 1");
    for (const auto& [id, dist] : mu) {
      if (static_cast<int>(dist.size()) != n_lambda)
        throw ValidationError("OntologicalModel: mu[" + id + "] has wrong length");
      Scalar sum{};
      for (const Scalar& p : dist) {
        if (p < Scalar{}) throw ValidationError("OntologicalModel: negative mu in " + id);
        sum += p;
      }
      if (!sums_to_one(sum, tolerance))
        throw ValidationError("OntologicalModel: mu[" + id + "] is not normalized");
    }
    for (const auto& [id, resp] : xi) {
      if (static_cast<int>(resp.size()) != n_lambda)
        throw ValidationError("OntologicalModel: xi[" + id + "] has wrong length");
      for (const Scalar& x : resp)
        if (x < Scalar{} || x > Scalar{1})
          throw ValidationError("OntologicalModel: xi[" + id + "] outside [0,1]");
    }
  }

  const std::vector<Scalar>& mu_of(const std::string& id) const {
    const auto it = mu.find(id);
    if (it == mu.end()) throw ValidationError("unknown preparation: " + id);
    return it->second;
  }
  const std::vector<Scalar>& xi_of(const std::string& id) const {
    const auto it = xi.find(id);
    if (it == xi.end()) throw ValidationError("unknown measurement: " + id);
    return it->second;
  }

 private:
  static bool sums_to_one(const Scalar& s, double tolerance) {
    if constexpr (std::is_same_v<Scalar, double>) {
      return std::abs(s - 1.0) <= tolerance;
    } else {
      (void)tolerance;
      return s == Scalar{1};
    }
  }
};

using OntologicalModel = BasicOntologicalModel<double>;
using ExactOntologicalModel = BasicOntologicalModel<Rat>;

/// mu(lambda|P_t) for the equal mixture of P_{t,0} and P_{t,1}.
template <class Scalar>
std::vector<Scalar> mixed_preparation(const BasicOntologicalModel<Scalar>& m, int t) {
  const auto& a = m.mu_of("P" + std::to_string(t) + ",0");
  const auto& b = m.mu_of("P" + std::to_string(t) + ",1");
  std::vector<Scalar> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] + b[i]) / Scalar{2};
  return out;
}

/// xi(0|M*,lambda) for the uniform mixture of M1, M2, M3.
template <class Scalar>
std::vector<Scalar> coin_response(const BasicOntologicalModel<Scalar>& m) {
  const auto& x1 = m.xi_of("M1");
  const auto& x2 = m.xi_of("M2");
  const auto& x3 = m.xi_of("M3");
  std::vector<Scalar> out(x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i)
    out[i] = (x1[i] + x2[i] + x3[i]) / Scalar{3};
  return out;
}

/// Operational statistics p(0|M,P) = sum_lambda xi(0|M,lambda) mu(lambda|P)
/// for the given preparation and measurement ids.
template <class Scalar>
std::vector<std::vector<Scalar>> model_statistics_grid(
    const BasicOntologicalModel<Scalar>& m, const std::vector<std::string>& preps,
    const std::vector<std::string>& meas) {
  std::vector<std::vector<Scalar>> grid(meas.size(),
                                        std::vector<Scalar>(preps.size()));
  for (std::size_t r = 0; r < meas.size(); ++r) {
    const auto& resp = m.xi_of(meas[r]);
    for (std::size_t c = 0; c < preps.size(); ++c) {
      const auto& dist = m.mu_of(preps[c]);
      Scalar cell{};
      for (int l = 0; l < m.n_lambda; ++l) cell += resp[l] * dist[l];
      grid[r][c] = cell;
    }
  }
  return grid;
}

inline DataMatrix model_statistics(const OntologicalModel& m,
                                   const std::vector<std::string>& preps,
                                   const std::vector<std::string>& meas) {
  return DataMatrix(meas, preps, model_statistics_grid(m, preps, meas));
}

inline double scalar_to_double(double x) { return x; }
inline double scalar_to_double(const Rat& x) { return to_double(x); }

struct NcCheck {
  bool prep_nc = false;
  bool meas_nc = false;
  double prep_residual = 0.0;  // max pointwise gap between the mixed mu's
  double meas_residual = 0.0;  // max |mean_t xi_t - 1/2| over lambda
};

/// Noncontextuality flags: preparation-NC iff the three mixed distributions
/// mu(.|P_t) coincide pointwise; measurement-NC iff the uniform response
/// average equals 1/2 at every ontic state.
template <class Scalar>
NcCheck check_model_noncontextuality(const BasicOntologicalModel<Scalar>& m) {
  m.validate();
  NcCheck out;
  const auto p1 = mixed_preparation(m, 1);
  const auto p2 = mixed_preparation(m, 2);
  const auto p3 = mixed_preparation(m, 3);
  const auto coin = coin_response(m);
  double prep_dev = 0.0, meas_dev = 0.0;
  for (int l = 0; l < m.n_lambda; ++l) {
    const double a = scalar_to_double(p1[l]), b = scalar_to_double(p2[l]),
                 c = scalar_to_double(p3[l]);
    prep_dev = std::max({prep_dev, std::abs(a - b), std::abs(a - c), std::abs(b - c)});
    meas_dev = std::max(meas_dev, std::abs(scalar_to_double(coin[l]) - 0.5));
  }
  out.prep_residual = prep_dev;
  out.meas_residual = meas_dev;
  out.prep_nc = prep_dev <= tol::kAlgebraic;
  out.meas_nc = meas_dev <= tol::kAlgebraic;
  return out;
}

inline nlohmann::json to_json(const OntologicalModel& m) {
  nlohmann::json j;
  j["n_lambda"] = m.n_lambda;
  j["mu"] = m.mu;
  j["xi"] = m.xi;
  return j;
}

inline nlohmann::json to_json(const ExactOntologicalModel& m) {
  nlohmann::json j;
  j["n_lambda"] = m.n_lambda;
  for (const auto& [id, dist] : m.mu)
    for (const auto& v : dist) j["mu"][id].push_back(to_string(v));
  for (const auto& [id, resp] : m.xi)
    for (const auto& v : resp) j["xi"][id].push_back(to_string(v));
  return j;
}

namespace detail {
inline Rat json_rational(const nlohmann::json& v) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rat(v.get<long long>());
  throw ValidationError("exact model entries must be rationals, got " + v.dump());
}
}  // namespace detail

/// Accepts numeric entries or rational strings ("5/6").
inline OntologicalModel ontological_from_json(const nlohmann::json& j) {
  OntologicalModel m;
  m.n_lambda = j.at("n_lambda").get<int>();
  for (const auto& [id, arr] : j.at("mu").items()) {
    std::vector<double> dist;
    for (const auto& v : arr)
      dist.push_back(v.is_string() ? to_double(parse_rational(v.get<std::string>()))
                                   : v.get<double>());
    m.mu[id] = std::move(dist);
  }
  for (const auto& [id, arr] : j.at("xi").items()) {
    std::vector<double> resp;
    for (const auto& v : arr)
      resp.push_back(v.is_string() ? to_double(parse_rational(v.get<std::string>()))
                                   : v.get<double>());
    m.xi[id] = std::move(resp);
  }
  m.validate();
  return m;
}

/// Exact loader: every entry must be an integer or a rational string.
inline ExactOntologicalModel exact_ontological_from_json(const nlohmann::json& j) {
  ExactOntologicalModel m;
  m.n_lambda = j.at("n_lambda").get<int>();
  for (const auto& [id, arr] : j.at("mu").items()) {
    std::vector<Rat> dist;
    for (const auto& v : arr) dist.push_back(detail::json_rational(v));
    m.mu[id] = std::move(dist);
  }
  for (const auto& [id, arr] : j.at("xi").items()) {
    std::vector<Rat> resp;
    for (const auto& v : arr) resp.push_back(detail::json_rational(v));
    m.xi[id] = std::move(resp);
  }
  m.validate();
  return m;
}

inline ExactOntologicalModel load_exact_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open: " + path);
  nlohmann::json j;
  f >> j;
  return exact_ontological_from_json(j);
}

}  // namespace ncx
