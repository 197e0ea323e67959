#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "gasketlab/lambda.hpp"
#include "gasketlab/subordination.hpp"

using namespace gasketlab;

namespace {

// Direct evaluation without the normalized frame, used as an oracle.
double lambda_direct(const GasketGraph& g, const ExactPoint& v, const Rational& r2,
                     const std::vector<double>& f, double alpha) {
  double acc = 0.0;
  for (int i = 0; i < g.n(); ++i) {
    Rational d2 = squared_distance(g.pts[i], v);
    if (!(d2 > r2)) continue;
    acc += std::pow(to_double(d2), -0.5 * (kDimension + alpha)) * f[i] * to_double(g.weight[i]);
  }
  return acc;
}

std::vector<double> bumpy(const GasketGraph& g) {
  std::vector<double> f(g.n());
  for (int i = 0; i < g.n(); ++i) f[i] = 0.1 + 0.5 * (1.0 + std::sin(0.37 * i));
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("lambda");

TEST_CASE("zero function gives an exactly zero value") {
  GasketGraph g = build_graph(window_b(), 3);
  std::vector<double> f(g.n(), 0.0);
  LambdaValue lv = lambda_functional(g, {0, 0}, Rational(1, 2), f, 0.5);
  CHECK(lv.mantissa == 0.0);
  CHECK(lv.value() == 0.0);
}

TEST_CASE("single contributing vertex matches the kernel by hand") {
  GasketGraph g = build_graph(window_b(), 2);
  auto y0 = g.find_vertex({Rational(3, 4), Rational(1, 4)});
  REQUIRE(y0.has_value());
  REQUIRE(g.weight[*y0] == Rational(2, 27));
  std::vector<double> f(g.n(), 0.0);
  f[*y0] = 1.0;

  const double alpha = 0.5;
  LambdaValue lv = lambda_functional(g, {0, 0}, Rational(1, 2), f, alpha);
  CHECK(lv.scale_pow == -1);  // 1/2 * 4 = 2 lands in [1,4)
  const double direct = std::pow(0.75, -0.5 * (kDimension + alpha)) * (2.0 / 27.0);
  CHECK(lv.value() == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("normalized frame agrees with direct evaluation") {
  GasketGraph g = build_graph(window_b(), 4);
  std::vector<double> f = bumpy(g);
  for (double alpha : {0.3, 0.5, 0.9, 1.4}) {
    for (const Rational& r2 : {Rational(1, 100), Rational(1, 2), Rational(3), Rational(17, 5)}) {
      LambdaValue lv = lambda_functional(g, {0, 0}, r2, f, alpha);
      CHECK(lv.value() == doctest::Approx(lambda_direct(g, {0, 0}, r2, f, alpha)).epsilon(1e-12));
    }
  }
}

TEST_CASE("vertices exactly on the sphere are excluded") {
  GasketGraph g = build_graph(window_b(), 3);
  auto y0 = g.find_vertex({Rational(1, 2), Rational(0)});
  REQUIRE(y0.has_value());
  std::vector<double> f(g.n(), 0.0);
  f[*y0] = 1.0;
  // distance(y0, origin)^2 is exactly 1/4: strict inequality drops the vertex.
  CHECK(lambda_functional(g, {0, 0}, Rational(1, 4), f, 0.5).value() == 0.0);
  CHECK(lambda_functional(g, {0, 0}, Rational(1, 4) - Rational(1, 1000000), f, 0.5).value() > 0.0);
}

TEST_CASE("joint dyadic dilation preserves the mantissa bit for bit") {
  GasketGraph g = build_graph(window_b(), 4);
  std::vector<double> f = bumpy(g);
  const ExactPoint v{Rational(1, 4), Rational(1, 4)};
  const Rational r2(3, 8);
  for (double alpha : {0.3, 0.9}) {
    LambdaValue base = lambda_functional(g, v, r2, f, alpha);
    for (int n : {1, 2, 3}) {
      GasketGraph gd = dilate_graph(g, n);
      REQUIRE(gd.pts[7] == dilate(g.pts[7], n));  // indices survive dilation
      LambdaValue lv = lambda_functional(gd, dilate(v, n), scale_pow2(r2, 2 * n), f, alpha);
      CHECK(lv.mantissa == base.mantissa);
      CHECK(lv.scale_pow == base.scale_pow + n);
      CHECK(std::exp2(alpha * n) * lv.value() ==
            doctest::Approx(base.value()).epsilon(1e-15));
    }
  }
}

TEST_CASE("window truncation error decays like radius^-alpha") {
  // Fixed subdivision level, growing window: increments between successive
  // dyadic windows track the tail-integral rate both from above and below.
  for (double alpha : {0.4, 0.9}) {
    std::vector<double> lam;
    for (int w = 0; w <= 3; ++w) {
      GasketGraph g = build_graph(window_dilated(w), 3);
      std::vector<double> f(g.n(), 1.0);
      lam.push_back(lambda_functional(g, {0, 0}, Rational(1, 2), f, alpha).value());
    }
    std::vector<double> inc;
    for (size_t i = 1; i < lam.size(); ++i) {
      CHECK(lam[i] > lam[i - 1]);  // larger window only adds mass
      inc.push_back(lam[i] - lam[i - 1]);
      CHECK(inc.back() <= lambda_truncation_bound(std::exp2((double)i - 1.0), alpha, 1.0));
    }
    for (size_t i = 1; i < inc.size(); ++i) {
      const double ratio = inc[i] / inc[i - 1];
      CHECK(ratio <= 1.35 * std::exp2(-alpha));
      CHECK(ratio >= std::exp2(-alpha) / 1.35);
    }
  }
}

TEST_CASE("input validation") {
  GasketGraph g = build_graph(window_b(), 2);
  std::vector<double> f(g.n(), 1.0);
  CHECK_THROWS_AS(lambda_functional(g, {0, 0}, Rational(0), f, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(lambda_functional(g, {0, 0}, Rational(-1), f, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(lambda_functional(g, {0, 0}, Rational(1), f, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lambda_functional(g, {0, 0}, Rational(1), f, 2.4), std::invalid_argument);
  f[3] = -1.0;
  CHECK_THROWS_AS(lambda_functional(g, {0, 0}, Rational(1), f, 0.5), std::invalid_argument);
  std::vector<double> bad(g.n() + 1, 1.0);
  CHECK_THROWS_AS(lambda_functional(g, {0, 0}, Rational(1), bad, 0.5), std::invalid_argument);
}

TEST_CASE("repeated evaluation is bit-identical") {
  GasketGraph g = build_graph(window_b(), 4);
  std::vector<double> f = bumpy(g);
  LambdaValue a = lambda_functional(g, {0, 0}, Rational(2, 3), f, 0.7);
  LambdaValue b = lambda_functional(g, {0, 0}, Rational(2, 3), f, 0.7);
  CHECK(a.mantissa == b.mantissa);
  CHECK(a.scale_pow == b.scale_pow);
}

TEST_SUITE_END();
