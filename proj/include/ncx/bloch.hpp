#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncx/common.hpp"
#include "ncx/data_matrix.hpp"
#include "ncx/gpt.hpp"

namespace ncx {

/// Qubit state as a Bloch vector, |r| <= 1.
class BlochState {
 public:
  explicit BlochState(const Vec3& r) : r_(r) {
    if (norm(r_) > 1.0 + 1e-12)
      throw ValidationError("BlochState: |r| = " + fmt17(norm(r_)) + " > 1");
  }
  const Vec3& r() const { return r_; }

 private:
  Vec3 r_;
};

/// Two-outcome effect E = (e0*I + e.sigma)/2 in Bloch-like coordinates.
/// Positivity of E and I-E is the intersection of two cones:
/// 0 <= e0 <= 2, |e| <= e0, |e| <= 2-e0.
class BlochEffect {
 public:
  BlochEffect(double e0, const Vec3& e) : e0_(e0), e_(e) {
    const double n = norm(e_);
    if (!(e0_ >= -1e-12 && e0_ <= 2.0 + 1e-12) || n > e0_ + 1e-12 ||
        n > 2.0 - e0_ + 1e-12)
      throw ValidationError("BlochEffect: cone constraints violated (e0=" +
                            fmt17(e0_) + ", |e|=" + fmt17(n) + ")");
  }
  double e0() const { return e0_; }
  const Vec3& e() const { return e_; }

 private:
  double e0_;
  Vec3 e_;
};

/// Noise applied to the ideal procedures before any sampling.
/// Composition order is shrink, then the global rotation (states only),
/// then independent per-procedure jitter rotations.
struct NoiseModel {
  double depolarize_v = 1.0;        // Bloch shrink factor on states
  Vec3 rotation{0.0, 0.0, 0.0};     // global rotation of all states (radians, Rx,Ry,Rz order)
  double effect_sharpness = 1.0;    // shrink factor on effect vectors e
  double effect_bias = 0.0;         // added to every e0
  double per_procedure_jitter = 0.0;  // stddev of the per-procedure rotation angle

  bool is_identity() const {
    return depolarize_v == 1.0 && rotation == Vec3{0.0, 0.0, 0.0} &&
           effect_sharpness == 1.0 && effect_bias == 0.0 &&
           per_procedure_jitter == 0.0;
  }

  nlohmann::json to_json() const {
    return {{"depolarize_v", depolarize_v},
            {"rotation", rotation},
            {"effect_sharpness", effect_sharpness},
            {"effect_bias", effect_bias},
            {"per_procedure_jitter", per_procedure_jitter}};
  }

  static NoiseModel from_json(const nlohmann::json& j) {
    NoiseModel m;
    m.depolarize_v = j.value("depolarize_v", 1.0);
    if (j.contains("rotation")) m.rotation = j.at("rotation").get<Vec3>();
    m.effect_sharpness = j.value("effect_sharpness", 1.0);
    m.effect_bias = j.value("effect_bias", 0.0);
    m.per_procedure_jitter = j.value("per_procedure_jitter", 0.0);
    if (m.depolarize_v < 0.0 || m.depolarize_v > 1.0 || m.effect_sharpness < 0.0 ||
        m.effect_sharpness > 1.0)
      throw ValidationError("NoiseModel: shrink factors must lie in [0,1]");
    return m;
  }
};

/// Detector counts per measurement/preparation pair.
struct CountTable {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  std::vector<std::vector<std::int64_t>> n0;
  std::vector<std::vector<std::int64_t>> n1;

  nlohmann::json to_json() const {
    return {{"rows", row_ids}, {"cols", col_ids}, {"n0", n0}, {"n1", n1}};
  }

  static CountTable from_json(const nlohmann::json& j) {
    CountTable t;
    t.row_ids = j.at("rows").get<std::vector<std::string>>();
    t.col_ids = j.at("cols").get<std::vector<std::string>>();
    t.n0 = j.at("n0").get<std::vector<std::vector<std::int64_t>>>();
    t.n1 = j.at("n1").get<std::vector<std::vector<std::int64_t>>>();
    return t;
  }
};

namespace detail {

using Mat3 = std::array<Vec3, 3>;

inline Vec3 mat_apply(const Mat3& m, const Vec3& v) {
  return {dot(m[0], v), dot(m[1], v), dot(m[2], v)};
}

inline Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      c[i][j] = 0.0;
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    }
  return c;
}

inline Mat3 rot_x(double a) {
  return {Vec3{1, 0, 0}, Vec3{0, std::cos(a), -std::sin(a)},
          Vec3{0, std::sin(a), std::cos(a)}};
}
inline Mat3 rot_y(double a) {
  return {Vec3{std::cos(a), 0, std::sin(a)}, Vec3{0, 1, 0},
          Vec3{-std::sin(a), 0, std::cos(a)}};
}
inline Mat3 rot_z(double a) {
  return {Vec3{std::cos(a), -std::sin(a), 0}, Vec3{std::sin(a), std::cos(a), 0},
          Vec3{0, 0, 1}};
}

}  // namespace detail

/// Rotation by Euler-style angles (ax, ay, az), applied as Rz * Ry * Rx.
inline Vec3 rotate_euler(const Vec3& angles, const Vec3& v) {
  using namespace detail;
  return mat_apply(matmul(rot_z(angles[2]), matmul(rot_y(angles[1]), rot_x(angles[0]))), v);
}

/// Rodrigues rotation about a unit axis.
inline Vec3 rotate_axis_angle(const Vec3& axis, double angle, const Vec3& v) {
  const double c = std::cos(angle), s = std::sin(angle);
  const Vec3 cross{axis[1] * v[2] - axis[2] * v[1], axis[2] * v[0] - axis[0] * v[2],
                   axis[0] * v[1] - axis[1] * v[0]};
  const double ad = dot(axis, v);
  Vec3 out;
  for (int i = 0; i < 3; ++i)
    out[i] = v[i] * c + cross[i] * s + axis[i] * ad * (1.0 - c);
  return out;
}

/// The ideal procedures: eigenstate pairs of three axes separated by 120
/// degrees in the x-z plane, supplemented by the +-y pair, and the four sharp
/// projectors onto +n1, +n2, +n3, +y.
///
/// State order matches the preparation columns P1,0 P1,1 ... P4,1 with b=0
/// on the positive axis.
inline std::pair<std::vector<BlochState>, std::vector<BlochEffect>> ideal_procedures() {
  const double h = std::sqrt(3.0) / 2.0;
  const std::array<Vec3, 4> axes{Vec3{0.0, 0.0, 1.0}, Vec3{h, 0.0, -0.5},
                                 Vec3{-h, 0.0, -0.5}, Vec3{0.0, 1.0, 0.0}};
  std::vector<BlochState> states;
  for (const Vec3& n : axes) {
    states.emplace_back(n);
    states.emplace_back(Vec3{-n[0], -n[1], -n[2]});
  }
  std::vector<BlochEffect> effects;
  for (const Vec3& n : axes) effects.emplace_back(1.0, n);
  return {states, effects};
}

/// Born rule in Bloch coordinates: p(0|E, r) = (e0 + e.r)/2.
inline Probability born(const BlochEffect& effect, const BlochState& state) {
  return Probability(0.5 * (effect.e0() + dot(effect.e(), state.r())));
}

/// Applies a noise model to procedure sets. Deterministic given the seed;
/// the jitter stream is consumed state 0..N-1 then effect 0..M-1.
inline std::pair<std::vector<BlochState>, std::vector<BlochEffect>> apply_noise(
    const std::vector<BlochState>& states, const std::vector<BlochEffect>& effects,
    const NoiseModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto jitter = [&](const Vec3& v) {
    if (model.per_procedure_jitter == 0.0) return v;
    Vec3 axis{gauss(rng), gauss(rng), gauss(rng)};
    const double n = norm(axis);
    const double angle = model.per_procedure_jitter * gauss(rng);
    if (n == 0.0) return v;
    for (auto& a : axis) a /= n;
    return rotate_axis_angle(axis, angle, v);
  };

  std::vector<BlochState> out_states;
  out_states.reserve(states.size());
  for (const auto& s : states) {
    Vec3 r = s.r();
    for (auto& x : r) x *= model.depolarize_v;
    r = rotate_euler(model.rotation, r);
    out_states.emplace_back(jitter(r));
  }
  std::vector<BlochEffect> out_effects;
  out_effects.reserve(effects.size());
  for (const auto& e : effects) {
    Vec3 v = e.e();
    for (auto& x : v) x *= model.effect_sharpness;
    out_effects.emplace_back(e.e0() + model.effect_bias, jitter(v));
  }
  return {out_states, out_effects};
}

/// Exact outcome-0 probabilities for every effect/state pair (no sampling).
inline DataMatrix true_matrix(const std::vector<BlochState>& states,
                              const std::vector<BlochEffect>& effects) {
  if (states.size() != 8 || effects.size() != 4)
    throw ValidationError("true_matrix: expected 8 states and 4 effects");
  Grid values(4, std::vector<double>(8));
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t p = 0; p < 8; ++p)
      values[m][p] = born(effects[m], states[p]);
  return DataMatrix(DataMatrix::measurement_ids(4), DataMatrix::preparation_ids(4),
                    values);
}

enum class ZeroCountPolicy { resample, error };

/// Relative-frequency uncertainty with a floor that keeps weights finite at
/// r in {0,1}: max(sqrt(r(1-r)/N), 1/(2N)).
inline double uncertainty_floor(double r, double n) {
  return std::max(std::sqrt(r * (1.0 - r) / n), 1.0 / (2.0 * n));
}

/// Poissonian counting statistics: per cell the total is N ~ Poisson(mean_total)
/// and n0 ~ Binomial(N, p). Returns the counts and the relative-frequency
/// matrix with uncertainties. Deterministic given the seed.
inline std::pair<CountTable, DataMatrix> sample_counts(
    const DataMatrix& truth, std::int64_t mean_total, std::uint64_t seed,
    ZeroCountPolicy policy = ZeroCountPolicy::resample) {
  if (mean_total < 1) throw ValidationError("sample_counts: mean_total must be >= 1");
  std::mt19937_64 rng(seed);
  std::poisson_distribution<std::int64_t> poisson(static_cast<double>(mean_total));

  CountTable counts;
  counts.row_ids = truth.row_ids();
  counts.col_ids = truth.col_ids();
  counts.n0.assign(truth.rows(), std::vector<std::int64_t>(truth.cols(), 0));
  counts.n1 = counts.n0;
  Grid values(truth.rows(), std::vector<double>(truth.cols()));
  Grid sigmas = values;

  for (std::size_t r = 0; r < truth.rows(); ++r) {
    for (std::size_t c = 0; c < truth.cols(); ++c) {
      std::int64_t total = poisson(rng);
      int attempts = 0;
      while (total == 0) {
        if (policy == ZeroCountPolicy::error || ++attempts > 1000)
          throw NumericalError("sample_counts: sampled a zero total count at cell (" +
                               truth.row_ids()[r] + ", " + truth.col_ids()[c] + ")");
        total = poisson(rng);
      }
      std::binomial_distribution<std::int64_t> binom(total, truth.at(r, c));
      const std::int64_t k = binom(rng);
      counts.n0[r][c] = k;
      counts.n1[r][c] = total - k;
      const double rel = static_cast<double>(k) / static_cast<double>(total);
      values[r][c] = rel;
      sigmas[r][c] = uncertainty_floor(rel, static_cast<double>(total));
    }
  }
  return {std::move(counts),
          DataMatrix(truth.row_ids(), truth.col_ids(), values, sigmas)};
}

}  // namespace ncx
