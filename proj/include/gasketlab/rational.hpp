#ifndef GASKETLAB_RATIONAL_HPP
#define GASKETLAB_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>
#include <string>
#include <stdexcept>

namespace gasketlab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Exact printed form is always "num/den" with den > 0, e.g. "2/81", "-7/75", "5/1".
inline std::string rat_str(const Rational& r) {
  return numerator(r).str() + "/" + denominator(r).str();
}

inline Rational rat_parse(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(s));
    BigInt num(s.substr(0, slash)), den(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Rational(num, den);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad rational literal: '" + s + "'");
  }
}

// r * 2^n for n of either sign (exact).
inline Rational scale_pow2(const Rational& r, int n) {
  BigInt p = BigInt(1) << (n >= 0 ? n : -n);
  return n >= 0 ? r * Rational(p) : r / Rational(p);
}

inline Rational pow_int(const Rational& base, int e) {
  Rational acc = 1, b = base;
  int n = e >= 0 ? e : -e;
  for (; n; n >>= 1) {
    if (n & 1) acc *= b;
    b *= b;
  }
  if (e < 0) {
    if (acc == 0) throw std::domain_error("pow_int: 0^negative");
    acc = Rational(1) / acc;
  }
  return acc;
}

}  // namespace gasketlab

#endif
