#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "gasketlab/checks.hpp"
#include "gasketlab/solver.hpp"
#include "gasketlab/subordination.hpp"

using namespace gasketlab;

namespace {

std::vector<int> interior_ball(const GasketGraph& g, const ExactPoint& c, const Rational& r2) {
  std::vector<int> out;
  for (int v : ball_vertices(g, c, r2))
    if (!g.rim[v]) out.push_back(v);
  return out;
}

FracOptions spectral_killed() {
  FracOptions o;
  o.mode = FracMode::Spectral;
  o.killed = true;
  return o;
}

constexpr double kAlphaHalfBeta = 0.5 / 2.321928094887362;  // beta with alpha = 1/2

}  // namespace

TEST_SUITE_BEGIN("checks");

// Standard instance at ball scale rho: D is the interior 3rho/4-ball, probes
// live inside rho/2, exits are counted past rho.

TEST_CASE("escape ratio is finite, positive and attained on the probe set") {
  GasketGraph g = build_graph(window_b(), 4);
  FractionalOperator op(g, kAlphaHalfBeta, spectral_killed());
  std::vector<int> dom = interior_ball(g, {0, 0}, Rational(9, 64));
  EscapeResult r = escape_check(op, dom, {0, 0}, Rational(1, 16), Rational(1, 4));
  CHECK(r.probes > 0);
  CHECK(r.c_hat > 0.0);
  CHECK(std::isfinite(r.c_hat));
  REQUIRE(r.argmax_vertex >= 0);
  CHECK(squared_distance(g.pts[r.argmax_vertex], {0, 0}) < Rational(1, 16));
}

TEST_CASE("escape constant grows with the probe radius") {
  GasketGraph g = build_graph(window_b(), 4);
  FractionalOperator op(g, kAlphaHalfBeta, spectral_killed());
  std::vector<int> dom = interior_ball(g, {0, 0}, Rational(9, 64));
  double prev = 0.0;
  for (const Rational& p1_sq : {Rational(1, 64), Rational(1, 16), Rational(9, 64)}) {
    EscapeResult r = escape_check(op, dom, {0, 0}, p1_sq, Rational(1, 4));
    INFO("p1^2 = ", rat_str(p1_sq), "  c = ", r.c_hat);
    CHECK(r.c_hat >= prev);  // probe sets nest, so the max cannot drop
    prev = r.c_hat;
  }
  CHECK(prev > 0.0);
}

TEST_CASE("escape constant is stable when the configuration shrinks by half") {
  // Fixed window, D and all radii halved, one level deeper (k - m fixed).
  struct Inst {
    int level;
    Rational rho_sq;  // squared ball scale
  };
  const Inst insts[] = {{5, Rational(1, 4)}, {6, Rational(1, 16)}};
  double esc[2];
  for (int i = 0; i < 2; ++i) {
    GasketGraph g = build_graph(window_b(), insts[i].level);
    FractionalOperator op(g, kAlphaHalfBeta, spectral_killed());
    std::vector<int> dom = interior_ball(g, {0, 0}, insts[i].rho_sq * 9 / 16);
    esc[i] = escape_check(op, dom, {0, 0}, insts[i].rho_sq / 4, insts[i].rho_sq).c_hat;
  }
  INFO("escape ", esc[0], " vs ", esc[1]);
  CHECK(std::abs(esc[1] - esc[0]) <= 0.25 * esc[0]);
}

TEST_CASE("factorization constants survive the full dyadic homothety") {
  // Everything doubles: window, domain, radii, target, with the subdivision
  // pitch doubling too. The doubled window at one level less is the same
  // lattice scaled by 2, so the calibrated constants must agree to roundoff;
  // this exercises the whole normalization chain (frame, weights, time unit).
  GasketGraph ga = build_graph(window_b(), 5);
  GasketGraph gb = build_graph(window_dilated(1), 4);
  FractionalOperator opa(ga, kAlphaHalfBeta, spectral_killed());
  FractionalOperator opb(gb, kAlphaHalfBeta, spectral_killed());

  std::vector<int> doma = interior_ball(ga, {0, 0}, Rational(9, 64));
  std::vector<int> domb = interior_ball(gb, {0, 0}, Rational(9, 16));
  REQUIRE(doma.size() == domb.size());

  auto ta = ga.find_vertex({Rational(1, 2), Rational(1, 4)});
  auto tb = gb.find_vertex({Rational(1), Rational(1, 2)});
  REQUIRE(ta.has_value());
  REQUIRE(tb.has_value());

  FactorizationResult fa =
      factorization_check(opa, doma, {*ta}, {0, 0}, Rational(1, 16), Rational(3, 16));
  FactorizationResult fb =
      factorization_check(opb, domb, {*tb}, {0, 0}, Rational(1, 4), Rational(3, 4));
  REQUIRE_FALSE(fa.degenerate);
  REQUIRE_FALSE(fb.degenerate);
  INFO("c_high ", fa.c_high, " vs ", fb.c_high, "; c_low ", fa.c_low, " vs ", fb.c_low);
  CHECK(fb.c_high == doctest::Approx(fa.c_high).epsilon(1e-9));
  CHECK(fb.c_low == doctest::Approx(fa.c_low).epsilon(1e-9));
}

TEST_CASE("factorization constants converge under level refinement") {
  // Fixed domain and a patch target (a set, so its measure persists across
  // levels): refining k -> k+1 moves the calibrated constants only mildly.
  double chigh[2], clow[2];
  int lvl = 0;
  for (int k : {5, 6}) {
    GasketGraph g = build_graph(window_b(), k);
    FractionalOperator op(g, kAlphaHalfBeta, spectral_killed());
    std::vector<int> dom = interior_ball(g, {0, 0}, Rational(9, 64));
    std::vector<int> target;
    for (int v : ball_vertices(g, {Rational(1, 2), Rational(1, 4)}, Rational(1, 64), true))
      if (!g.rim[v]) target.push_back(v);
    REQUIRE(target.size() > 3);
    FactorizationResult f =
        factorization_check(op, dom, target, {0, 0}, Rational(1, 16), Rational(3, 16));
    REQUIRE_FALSE(f.degenerate);
    chigh[lvl] = f.c_high;
    clow[lvl] = f.c_low;
    ++lvl;
  }
  INFO("c_high ", chigh[0], " vs ", chigh[1], "; c_low ", clow[0], " vs ", clow[1]);
  CHECK(std::abs(chigh[1] - chigh[0]) <= 0.30 * chigh[0]);
  CHECK(std::abs(clow[1] - clow[0]) <= 0.30 * clow[0]);
}

TEST_CASE("escape validates its hypotheses") {
  GasketGraph g = build_graph(window_b(), 3);
  std::vector<int> dom = interior_ball(g, {0, 0}, Rational(9, 64));

  FractionalOperator bad(g, 0.5, spectral_killed());  // alpha = 0.5*log2(5) > 1
  CHECK_THROWS_AS(escape_check(bad, dom, {0, 0}, Rational(1, 16), Rational(1, 4)),
                  std::invalid_argument);

  FractionalOperator op(g, kAlphaHalfBeta, spectral_killed());
  // D not inside B(v, p2)
  CHECK_THROWS_AS(escape_check(op, dom, {0, 0}, Rational(1, 100), Rational(1, 16)),
                  std::invalid_argument);
  // empty probe set: a far single-vertex domain misses B(v, p1)
  auto far = g.find_vertex({Rational(1, 2), Rational(1, 4)});
  REQUIRE(far.has_value());
  CHECK_THROWS_AS(escape_check(op, {*far}, {0, 0}, Rational(1, 16), Rational(1)),
                  std::invalid_argument);
  // degenerate radii and a ball that swallows the rim
  CHECK_THROWS_AS(escape_check(op, dom, {0, 0}, Rational(1, 4), Rational(1, 16)),
                  std::invalid_argument);
  CHECK_THROWS_AS(escape_check(op, dom, {0, 0}, Rational(1, 16), Rational(2)),
                  std::invalid_argument);
}

TEST_CASE("upper bound constant from a point-mass target") {
  GasketGraph g = build_graph(window_b(), 4);
  FractionalOperator op(g, kAlphaHalfBeta, spectral_killed());
  std::vector<int> dom = interior_ball(g, {0, 0}, Rational(9, 64));
  auto t = g.find_vertex({Rational(1, 2), Rational(1, 4)});
  REQUIRE(t.has_value());
  UpperResult r = upper_check(op, dom, {*t}, {0, 0}, Rational(1, 16), Rational(3, 16));
  REQUIRE_FALSE(r.degenerate);
  CHECK(r.probes > 0);
  CHECK(r.c_hat > 0.0);
  CHECK(std::isfinite(r.c_hat));
}

TEST_CASE("factorization constants bracket each other") {
  GasketGraph g = build_graph(window_b(), 4);
  FractionalOperator op(g, kAlphaHalfBeta, spectral_killed());
  std::vector<int> dom = interior_ball(g, {0, 0}, Rational(9, 64));
  auto t = g.find_vertex({Rational(1, 2), Rational(1, 4)});
  REQUIRE(t.has_value());
  FactorizationResult r =
      factorization_check(op, dom, {*t}, {0, 0}, Rational(1, 16), Rational(3, 16));
  REQUIRE_FALSE(r.degenerate);
  CHECK(r.c_low > 0.0);
  CHECK(r.c_low <= r.c_high);
  CHECK(std::isfinite(r.c_high));
  CHECK(r.c_high / r.c_low < 1e3);
}

TEST_CASE("an empty target degenerates gracefully") {
  GasketGraph g = build_graph(window_b(), 3);
  FractionalOperator op(g, kAlphaHalfBeta, spectral_killed());
  std::vector<int> dom = interior_ball(g, {0, 0}, Rational(9, 64));
  UpperResult u = upper_check(op, dom, {}, {0, 0}, Rational(1, 16), Rational(3, 16));
  CHECK(u.degenerate);
  CHECK(std::isnan(u.c_hat));
  FactorizationResult f = factorization_check(op, dom, {}, {0, 0}, Rational(1, 16), Rational(3, 16));
  CHECK(f.degenerate);
  CHECK(std::isnan(f.c_high));
  CHECK(std::isnan(f.c_low));
}

TEST_CASE("upper and factorization validate hypotheses") {
  GasketGraph g = build_graph(window_b(), 3);
  FractionalOperator op(g, kAlphaHalfBeta, spectral_killed());
  std::vector<int> dom = interior_ball(g, {0, 0}, Rational(9, 64));
  auto rimv = g.find_vertex({Rational(1), Rational(0)});
  REQUIRE(rimv.has_value());
  REQUIRE(g.rim[*rimv]);
  // target absorbed at the rim of a killed operator
  CHECK_THROWS_AS(upper_check(op, dom, {*rimv}, {0, 0}, Rational(1, 16), Rational(3, 16)),
                  std::invalid_argument);
  // target inside B(v,p5)
  auto nearv = g.find_vertex({Rational(1, 2), Rational(1, 4)});
  REQUIRE(nearv.has_value());
  CHECK_THROWS_AS(upper_check(op, dom, {*nearv}, {0, 0}, Rational(1, 16), Rational(3)),
                  std::invalid_argument);
  // target inside D
  CHECK_THROWS_AS(factorization_check(op, dom, {dom[0]}, {0, 0}, Rational(1, 16), Rational(3, 16)),
                  std::invalid_argument);
  // radii out of order
  CHECK_THROWS_AS(upper_check(op, dom, {}, {0, 0}, Rational(3, 16), Rational(1, 16)),
                  std::invalid_argument);
  FractionalOperator bad(g, 0.5, spectral_killed());
  CHECK_THROWS_AS(factorization_check(bad, dom, {}, {0, 0}, Rational(1, 16), Rational(3, 16)),
                  std::invalid_argument);
}

TEST_SUITE_END();
