#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncx {

// Thrown on malformed inputs (shapes, ranges, bad config). CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a computation leaves its numerical contract (non-convergence,
// out-of-range probabilities, infeasible programs). CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>;
using Grid = std::vector<std::vector<double>>;

namespace tol {
// Constraint-level checks (LP residuals, equivalence deviations).
inline constexpr double kConstraint = 1e-9;
// Algebraic identities that should hold to rounding.
inline constexpr double kAlgebraic = 1e-12;
// Slack allowed on probabilities before declaring an inconsistency.
inline constexpr double kProbability = 1e-9;
}  // namespace tol

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double dot(const Vec4& a, const Vec4& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Clamps values that are within `slack` of [0,1] onto the interval; anything
// further out is treated as a genuine inconsistency.
inline double clamp_probability(double x, double slack, const char* what) {
  if (x < -slack || x > 1.0 + slack) {
    throw NumericalError(std::string(what) + " out of range: " + fmt17(x));
  }
  if (x < 0.0) return 0.0;
  if (x > 1.0) return 1.0;
  return x;
}

}  // namespace ncx
