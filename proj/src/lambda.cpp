#include "gasketlab/lambda.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gasketlab/subordination.hpp"

namespace gasketlab {

LambdaValue lambda_functional(const GasketGraph& g, const ExactPoint& v, const Rational& r2,
                              const std::vector<double>& f, double alpha) {
  if (!(alpha > 0.0) || !(alpha < kWalkDimension))
    throw std::invalid_argument("lambda_functional: alpha outside (0, log2 5)");
  if (r2 <= 0) throw std::invalid_argument("lambda_functional: radius must be positive");
  if ((int)f.size() != g.n())
    throw std::invalid_argument("lambda_functional: f size does not match graph");

  double fmax = 0.0;
  for (double x : f) fmax = std::max(fmax, std::abs(x));
  for (double x : f)
    if (x < -1e-12 * std::max(fmax, 1.0))
      throw std::invalid_argument("lambda_functional: f must be nonnegative");

  // Canonical dyadic frame: r2 * 4^{-n0} in [1,4), derived by exact comparisons.
  int n0 = 0;
  Rational r2hat = r2;
  while (r2hat >= 4) { r2hat /= 4; ++n0; }
  while (r2hat < 1) { r2hat *= 4; --n0; }

  const Rational w_scale = pow_int(Rational(3), -n0);
  const double ex = -0.5 * (kDimension + alpha);

  LambdaValue out;
  out.alpha = alpha;
  out.scale_pow = n0;
  double acc = 0.0;
  for (int i = 0; i < g.n(); ++i) {
    if (f[i] == 0.0) continue;
    Rational d2 = squared_distance(g.pts[i], v);
    if (!(d2 > r2)) continue;  // exact, strict: the sphere itself is excluded
    const double d2hat = to_double(scale_pow2(d2, -2 * n0));
    const double what = to_double(g.weight[i] * w_scale);
    acc += std::pow(d2hat, ex) * f[i] * what;
  }
  out.mantissa = acc;
  return out;
}

double lambda_truncation_bound(double radius, double alpha, double f_sup) {
  if (!(radius > 0.0) || !(alpha > 0.0)) return std::numeric_limits<double>::infinity();
  const double c_measure = 8.0;  // mu(B(0,R)) <= 8 R^d on the doubled window
  const double dyadic = std::exp2(kDimension) / (1.0 - std::exp2(-alpha));
  return c_measure * dyadic * f_sup * std::pow(radius, -alpha);
}

}  // namespace gasketlab
