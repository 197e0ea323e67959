#pragma once

#include <cmath>
#include <vector>

#include "gasketlab/geometry.hpp"

namespace gasketlab {

// Truncated jump-kernel functional
//   Lambda_{v,r}(f) = sum_{dist(y,v) > r} dist(y,v)^{-d-alpha} f(y) w(y),
// evaluated in a dyadically normalized frame: the squared radius is rescaled
// by an exact power of 4 into [1,4) and the vertex weights by the matching
// power of 3 before any floating-point conversion. Jointly dilating
// (graph, v, r) by 2^n therefore shifts scale_pow by n and leaves the mantissa
// bit-for-bit unchanged — the dyadic scaling identity is exact by construction.
struct LambdaValue {
  double alpha = 0.0;
  int scale_pow = 0;      // n0 with r^2 * 4^{-n0} in [1, 4)
  double mantissa = 0.0;  // functional evaluated in the rescaled frame
  double value() const { return std::exp2(-alpha * (double)scale_pow) * mantissa; }
};

// f holds one value per graph vertex and must be nonnegative (up to roundoff).
LambdaValue lambda_functional(const GasketGraph& g, const ExactPoint& v, const Rational& r2,
                              const std::vector<double>& f, double alpha);

// Crude upper bound for the mass ignored beyond a window of the given radius
// (measure growth mu(B(0,R)) <= 4 R^d plus a geometric tail sum).
double lambda_truncation_bound(double radius, double alpha, double f_sup);

}  // namespace gasketlab
