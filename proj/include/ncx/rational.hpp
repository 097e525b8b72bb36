#pragma once

#include <string>

#include <boost/rational.hpp>

#include "ncx/common.hpp"

namespace ncx {

using Rat = boost::rational<long long>;

inline double to_double(const Rat& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline std::string to_string(const Rat& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

/// Parses "3/10", "-1/2", or a plain integer.
inline Rat parse_rational(const std::string& s) {
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rat(std::stoll(s));
    const long long num = std::stoll(s.substr(0, slash));
    const long long den = std::stoll(s.substr(slash + 1));
    if (den == 0) throw ValidationError("rational with zero denominator: " + s);
    return Rat(num, den);
  } catch (const std::invalid_argument&) {
    throw ValidationError("not a rational: '" + s + "'");
  } catch (const std::out_of_range&) {
    throw ValidationError("rational out of range: '" + s + "'");
  }
}

}  // namespace ncx
