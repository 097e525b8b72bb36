#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "ncx/common.hpp"
#include "ncx/data_matrix.hpp"

namespace ncx {

/// A probability with a small numerical slack: values may carry rounding
/// residue of at most 1e-9 outside [0,1]; anything further is rejected.
/// The stored value is not clamped.
class Probability {
 public:
  explicit Probability(double v) : value_(v) {
    if (!(v >= -tol::kProbability && v <= 1.0 + tol::kProbability))
      throw NumericalError("probability out of range: " + fmt17(v));
  }
  double value() const { return value_; }
  operator double() const { return value_; }

 private:
  double value_;
};

/// GPT state: (1, p(0|M1,P), p(0|M2,P), p(0|M3,P)) for the three fiducial
/// measurements. The leading 1 is the normalization entry.
class GptState {
 public:
  explicit GptState(const Vec4& c) : c_(c) {
    if (c_[0] != 1.0) throw ValidationError("GptState: first component must be 1");
    for (int i = 1; i < 4; ++i)
      c_[i] = clamp_probability(c_[i], tol::kProbability, "GptState component");
  }
  static GptState from_fiducials(double p1, double p2, double p3) {
    return GptState(Vec4{1.0, p1, p2, p3});
  }
  const Vec4& components() const { return c_; }
  double operator[](std::size_t i) const { return c_[i]; }

 private:
  Vec4 c_;
};

/// GPT effect: a linear functional on states. The unit effect is (1,0,0,0),
/// the zero effect (0,0,0,0).
class GptEffect {
 public:
  explicit GptEffect(const Vec4& c) : c_(c) {}
  static GptEffect unit() { return GptEffect(Vec4{1.0, 0.0, 0.0, 0.0}); }
  static GptEffect zero() { return GptEffect(Vec4{0.0, 0.0, 0.0, 0.0}); }
  const Vec4& components() const { return c_; }
  double operator[](std::size_t i) const { return c_[i]; }

 private:
  Vec4 c_;
};

/// r . p. No clamping: a result outside [-1e-9, 1+1e-9] signals an
/// inconsistent state/effect pair and throws.
inline Probability predict(const GptEffect& effect, const GptState& state) {
  return Probability(dot(effect.components(), state.components()));
}

inline GptState mix_states(std::span<const double> weights,
                           std::span<const GptState> states) {
  if (weights.size() != states.size())
    throw ValidationError("mix_states: weight/state count mismatch");
  if (weights.empty()) throw ValidationError("mix_states: empty mixture");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ValidationError("mix_states: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > tol::kAlgebraic)
    throw ValidationError("mix_states: weights sum to " + fmt17(sum));
  Vec4 acc{0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < weights.size(); ++i)
    for (int k = 0; k < 4; ++k) acc[k] += weights[i] * states[i][k];
  acc[0] = 1.0;  // exact convex combination of exact 1s
  return GptState(acc);
}

enum class PostProcess { identity, flip, always0, always1 };

/// The four extremal classical post-processings of a binary outcome, acting
/// on the outcome-0 effect.
inline GptEffect post_process_effect(const GptEffect& e, PostProcess kind) {
  switch (kind) {
    case PostProcess::identity:
      return e;
    case PostProcess::flip: {
      Vec4 u = GptEffect::unit().components();
      return GptEffect(Vec4{u[0] - e[0], u[1] - e[1], u[2] - e[2], u[3] - e[3]});
    }
    case PostProcess::always0:
      return GptEffect::zero();
    case PostProcess::always1:
      return GptEffect::unit();
  }
  throw ValidationError("post_process_effect: unknown kind");
}

/// Same post-processings applied to a measurement-event row of outcome-0
/// probabilities (one entry per preparation): flip maps x -> 1-x.
inline std::vector<double> post_process_row(const std::vector<double>& row,
                                            PostProcess kind) {
  std::vector<double> out(row.size());
  switch (kind) {
    case PostProcess::identity:
      return row;
    case PostProcess::flip:
      for (std::size_t i = 0; i < row.size(); ++i) out[i] = 1.0 - row[i];
      return out;
    case PostProcess::always0:
      return std::vector<double>(row.size(), 0.0);
    case PostProcess::always1:
      return std::vector<double>(row.size(), 1.0);
  }
  throw ValidationError("post_process_row: unknown kind");
}

/// Deviation from the preparation operational equivalence on a matrix whose
/// six columns are grouped as (1,0),(1,1),(2,0),(2,1),(3,0),(3,1): the
/// largest difference, over measurement rows and pairs t,t', between the
/// pair averages (col_{t,0}+col_{t,1})/2. Zero means exact equivalence.
inline double check_prep_equivalence(const DataMatrix& d) {
  if (d.cols() != 6)
    throw ValidationError("check_prep_equivalence: need exactly 6 columns");
  double dev = 0.0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    double avg[3];
    for (int t = 0; t < 3; ++t) avg[t] = 0.5 * (d.at(r, 2 * t) + d.at(r, 2 * t + 1));
    for (int t = 0; t < 3; ++t)
      for (int s = t + 1; s < 3; ++s)
        dev = std::max(dev, std::abs(avg[t] - avg[s]));
  }
  return dev;
}

/// Deviation from the fair-coin equivalence for three measurement rows:
/// max over preparations of |mean(row_1..row_3) - 1/2|.
inline double check_coinflip_equivalence(const std::vector<double>& m1,
                                         const std::vector<double>& m2,
                                         const std::vector<double>& m3) {
  if (m1.size() != m2.size() || m2.size() != m3.size() || m1.empty())
    throw ValidationError("check_coinflip_equivalence: row length mismatch");
  double dev = 0.0;
  for (std::size_t c = 0; c < m1.size(); ++c)
    dev = std::max(dev, std::abs((m1[c] + m2[c] + m3[c]) / 3.0 - 0.5));
  return dev;
}

}  // namespace ncx
