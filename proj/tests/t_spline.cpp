#include <doctest.h>

#include <map>
#include <vector>

#include "gasketlab/calculus.hpp"
#include "gasketlab/geometry.hpp"
#include "gasketlab/spline.hpp"

using namespace gasketlab;

namespace {

// Every (path, slot) resolution of every vertex, collected independently of the
// canonical addressing: descend exhaustively and record each corner value.
void collect_all(const TriCell& cell, const SplineState& s, int depth,
                 std::map<ExactPoint, Rational>& out, long long& conflicts) {
  for (int i = 0; i < 3; ++i) {
    auto it = out.find(cell.v[i]);
    if (it == out.end())
      out.emplace(cell.v[i], s[i]);
    else if (it->second != s[i])
      ++conflicts;
  }
  if (depth == 0) return;
  auto ch = cell.children();
  for (int i = 0; i < 3; ++i) collect_all(ch[i], descend(s, i), depth - 1, out, conflicts);
}

Rational rabs(const Rational& x) { return x < 0 ? Rational(-x) : x; }

}  // namespace

TEST_SUITE("spline") {

TEST_CASE("descent matrices: printed entries and corner relabelings") {
  const int printed[6][6] = {
      {75, 0, 0, 0, 0, 0},      {36, 36, 3, -7, -7, -1}, {36, 3, 36, -7, -1, -7},
      {0, 0, 0, 45, 0, 0},      {-90, 90, 0, 15, -15, 0}, {-90, 0, 90, 15, 0, -15},
  };
  const Mat6& m0 = descent_matrix(0);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) CHECK(m0[i][j] == Rational(printed[i][j], 75));

  // Child 1 swaps corners 0 and 1 in both blocks; spot-check a full row.
  const Mat6& m1 = descent_matrix(1);
  CHECK(m1[1][1] == 1);                     // kept corner value passes through
  CHECK(m1[0][0] == Rational(36, 75));      // midpoint row, relabeled
  CHECK(m1[0][1] == Rational(36, 75));
  CHECK(m1[0][2] == Rational(3, 75));
  CHECK(m1[0][3] == Rational(-7, 75));
  CHECK(m1[0][4] == Rational(-7, 75));
  CHECK(m1[0][5] == Rational(-1, 75));
  CHECK(m1[4][4] == Rational(45, 75));      // derivative contraction row
  const Mat6& m2 = descent_matrix(2);
  CHECK(m2[2][2] == 1);
  CHECK(m2[5][5] == Rational(45, 75));
  CHECK_THROWS(descent_matrix(3));

  SplineState root = phi0_state({});
  CHECK(root == spline_initial(0));
  CHECK(root[0] == 1);
  for (int i = 1; i < 6; ++i) CHECK(root[i] == 0);
}

TEST_CASE("level-1 midpoint values are 12/25, 12/25, 1/25") {
  SplineState c1 = phi0_state({0});
  CHECK(c1[0] == 1);
  CHECK(c1[1] == Rational(12, 25));
  CHECK(c1[2] == Rational(12, 25));
  CHECK(c1[3] == 0);
  CHECK(c1[4] == Rational(-6, 5));
  CHECK(c1[5] == Rational(-6, 5));

  SplineState c2 = phi0_state({1});
  CHECK(c2[0] == Rational(12, 25));  // midpoint of corners 0,1
  CHECK(c2[1] == 0);
  CHECK(c2[2] == Rational(1, 25));   // midpoint of corners 1,2
  CHECK(Rational(12, 25) + Rational(12, 25) + Rational(1, 25) == 1);

  // Same numbers through the geometric addressing, for all three rotations.
  ExactPoint m01{Rational(1, 2), 0}, m02{Rational(1, 4), Rational(1, 4)},
      m12{Rational(3, 4), Rational(1, 4)};
  CHECK(phi0_at_vertex(m01, 0) == Rational(12, 25));
  CHECK(phi0_at_vertex(m02, 0) == Rational(12, 25));
  CHECK(phi0_at_vertex(m12, 0) == Rational(1, 25));
  CHECK(phi0_at_vertex(m01, 1) == Rational(12, 25));
  CHECK(phi0_at_vertex(m12, 1) == Rational(12, 25));
  CHECK(phi0_at_vertex(m02, 1) == Rational(1, 25));
  CHECK(phi0_at_vertex(m01, 0) + phi0_at_vertex(m01, 1) + phi0_at_vertex(m01, 2) == 1);

  CHECK(phi0_at_vertex({0, 0}) == 1);
  CHECK(phi0_at_vertex({1, 0}) == 0);
  CHECK(phi0_at_vertex({Rational(1, 2), Rational(1, 2)}) == 0);
}

TEST_CASE("vertex addressing: every sibling path resolves identically (level 4)") {
  std::map<ExactPoint, Rational> all;
  long long conflicts = 0;
  collect_all(cell_fplus(), spline_initial(0), 4, all, conflicts);
  CHECK(conflicts == 0);
  CHECK((long long)all.size() == vertices_per_unit(4));
  for (const auto& kv : all) CHECK(phi0_at_vertex(kv.first) == kv.second);
}

TEST_CASE("exhaustive condition check to depth 6") {
  SplineConditionReport r0 = verify_spline_condition(0);
  CHECK(r0.ok());
  CHECK(r0.states_checked == 1);

  SplineConditionReport rep = verify_spline_condition(6);
  CHECK(rep.depth == 6);
  CHECK(rep.states_checked == 1093);  // all paths of length <= 6
  CHECK(rep.violations == 0);
  CHECK(rep.sibling_consistent);
  CHECK(rep.partition_ok);
  CHECK(rep.derivative_chain_ok);
  CHECK(rep.max_ratio <= 1);
  CHECK(rep.min_value >= 0);
  CHECK(rep.max_value == 1);
}

TEST_CASE("descent matrix acts on harmonic states as the midpoint extension") {
  // Corner data (1,0,0) with outward derivatives (2,-1,-1) is harmonic; the
  // descent must reproduce the 1/5-2/5 extension and scale derivatives by 3/5.
  SplineState h{1, 0, 0, 2, -1, -1};
  SplineState d0 = descend(h, 0);
  CHECK(d0[0] == 1);
  CHECK(d0[1] == Rational(2, 5));
  CHECK(d0[2] == Rational(2, 5));
  CHECK(d0[3] == Rational(6, 5));    // (3/5) * 2
  CHECK(d0[4] == Rational(-3, 5));   // derivative of a harmonic stays -1 after rescale
  CHECK(d0[5] == Rational(-3, 5));

  // Whole-graph agreement with the calculus extension chain, three levels deep.
  Window win = window_fplus();
  GasketGraph g = build_graph(win, 0);
  std::vector<Rational> f{1, 0, 0};
  for (int k = 0; k < 3; ++k) {
    GasketGraph fine = build_graph(win, k + 1);
    f = harmonic_extension(g, f, fine);
    g = fine;
  }
  CHECK(spline_values_on_graph(g, cell_fplus(), h) == f);

  // Constant states are fixed points of all three descents.
  SplineState c = spline_constant(Rational(7, 3));
  for (int i = 0; i < 3; ++i) CHECK(descend(c, i) == c);
}

TEST_CASE("discrete laplacian of the corner spline equals the recursion values exactly") {
  // The change of basis from (values, outward derivatives) to (values,
  // laplacians) pins the laplacian at the two level-1 midpoints to -3 and +6.
  // For biharmonic data the graph laplacian carries no higher-order error, so
  // the renormalized discrete values agree exactly at every refinement.
  Window win = window_fplus();
  for (int K = 1; K <= 6; ++K) {
    GasketGraph g = build_graph(win, K);
    auto f = spline_values_on_graph(g, cell_fplus(), spline_initial(0));
    int a = *g.find_vertex({Rational(1, 2), 0});
    int b = *g.find_vertex({Rational(3, 4), Rational(1, 4)});
    CHECK(discrete_laplacian(g, f, a) == -3);
    CHECK(discrete_laplacian(g, f, b) == 6);
  }
}

TEST_CASE("summation by parts with corner-spline data is exact at depths 3..8") {
  Window win = window_fplus();
  for (int K = 3; K <= 8; ++K) {
    GasketGraph g = build_graph(win, K);
    auto f = spline_values_on_graph(g, cell_fplus(), spline_initial(0));
    CHECK(gauss_green_residual(g, f, f) == 0);
  }
}

TEST_CASE("cutoff assembly: case table over a two-cell window") {
  Window win = window_b();
  GasketGraph g1 = build_graph(win, 1);
  REQUIRE(g1.cells.size() == 6);

  // Select the three cells of the right-hand 0-cell.
  std::vector<int> right;
  for (int ci = 0; ci < (int)g1.cells.size(); ++ci) {
    TriCell c = cell_from_graph(g1, ci);
    if (c.v[0].a >= 0) right.push_back(ci);
  }
  REQUIRE(right.size() == 3);
  CutoffFunction phi = cutoff_assemble(g1, right);

  int ones = 0, zeros = 0, phis = 0, comps = 0;
  for (const CutoffRule& r : phi.rules) {
    switch (r.kase) {
      case CutoffCase::One: ++ones; break;
      case CutoffCase::Zero: ++zeros; break;
      case CutoffCase::Phi0: ++phis; break;
      case CutoffCase::OneMinusPhi0: ++comps; break;
    }
  }
  CHECK(ones == 3);
  CHECK(zeros == 2);   // the two left-hand cells not touching the origin
  CHECK(phis == 1);    // the left-hand cell at the origin
  CHECK(comps == 0);

  // phi == 1 on the selected cells, 0 on non-touching cells, phi0 between.
  CHECK(cutoff_value(phi, {Rational(3, 4), 0}) == 1);
  CHECK(cutoff_value(phi, {Rational(-3, 4), 0}) == 0);
  CHECK(cutoff_value(phi, {0, 0}) == 1);                       // shared vertex, both sides
  CHECK(cutoff_value(phi, {Rational(-1, 4), 0}) == Rational(12, 25));
  GasketGraph g4 = build_graph(win, 4);
  auto vals = cutoff_values_on_graph(phi, g4);  // internal cross-cell consistency check
  for (const Rational& v : vals) {
    CHECK(v >= 0);
    CHECK(v <= 1);
  }

  // Everything selected -> identically 1; nothing -> identically 0.
  CutoffFunction all = cutoff_assemble(g1, {0, 1, 2, 3, 4, 5});
  CutoffFunction none = cutoff_assemble(g1, {});
  for (const Rational& v : cutoff_values_on_graph(all, g4)) CHECK(v == 1);
  for (const Rational& v : cutoff_values_on_graph(none, g4)) CHECK(v == 0);
  CHECK_THROWS_AS(cutoff_assemble(g1, {17}), std::out_of_range);
}

TEST_CASE("cutoff of a mirror-symmetric cell set is mirror symmetric") {
  Window win = window_b();
  GasketGraph g1 = build_graph(win, 1);
  std::vector<int> pair;  // the two cells meeting at the origin
  for (int ci = 0; ci < (int)g1.cells.size(); ++ci) {
    TriCell c = cell_from_graph(g1, ci);
    if (c.v[0] == ExactPoint{Rational(-1, 2), 0} || c.v[0] == ExactPoint{0, 0}) pair.push_back(ci);
  }
  REQUIRE(pair.size() == 2);
  CutoffFunction phi = cutoff_assemble(g1, pair);
  GasketGraph g4 = build_graph(win, 4);
  auto vals = cutoff_values_on_graph(phi, g4);
  auto perm = mirror_permutation(g4);
  for (int v = 0; v < g4.n(); ++v) CHECK(vals[v] == vals[perm[v]]);
  CHECK(cutoff_value(phi, {0, 0}) == 1);
  CHECK(cutoff_value(phi, {Rational(1, 2), 0}) == 1);
  CHECK(cutoff_value(phi, {1, 0}) == 0);
}

TEST_CASE("outward derivatives of cutoff pieces shrink and match across cells") {
  Window win = window_fplus();
  GasketGraph g1 = build_graph(win, 1);
  // Select the bottom-right level-1 cell.
  int sel = -1;
  for (int ci = 0; ci < 3; ++ci)
    if (cell_from_graph(g1, ci).v[0] == ExactPoint{Rational(1, 2), 0}) sel = ci;
  REQUIRE(sel >= 0);
  CutoffFunction phi = cutoff_assemble(g1, {sel});

  GasketGraph g = build_graph(win, 7);
  auto f = cutoff_values_on_graph(phi, g);

  TriCell left{{ExactPoint{0, 0}, ExactPoint{Rational(1, 2), 0},
                ExactPoint{Rational(1, 4), Rational(1, 4)}}};
  TriCell right{{ExactPoint{Rational(1, 2), 0}, ExactPoint{1, 0},
                 ExactPoint{Rational(3, 4), Rational(1, 4)}}};
  TriCell top{{ExactPoint{Rational(1, 4), Rational(1, 4)},
               ExactPoint{Rational(3, 4), Rational(1, 4)},
               ExactPoint{Rational(1, 2), Rational(1, 2)}}};

  // At the shared vertex (1/2, 0): the selected side is constant 1 (estimates
  // exactly 0); the phi0 side decays towards 0, so the matched sum does too.
  auto one_side = normal_derivative_sequence(g, f, right, 0);
  for (const Rational& e : one_side) CHECK(e == 0);
  auto phi_side = normal_derivative_sequence(g, f, left, 1);
  REQUIRE(phi_side.size() >= 6);
  for (size_t j = 1; j < phi_side.size(); ++j) CHECK(rabs(phi_side[j]) < rabs(phi_side[j - 1]));
  CHECK(rabs(phi_side.back()) < Rational(1, 10) * rabs(phi_side.front()));

  // At the shared vertex (1/4, 1/4): two phi0 pieces, both decaying.
  auto a = normal_derivative_sequence(g, f, left, 2);
  auto b = normal_derivative_sequence(g, f, top, 0);
  for (size_t j = 1; j < a.size(); ++j) {
    CHECK(rabs(a[j]) <= rabs(a[j - 1]));
    CHECK(rabs(b[j]) <= rabs(b[j - 1]));
    CHECK(rabs(a[j] + b[j]) <= rabs(a[j - 1] + b[j - 1]));
  }
  CHECK(rabs(a.back() + b.back()) < Rational(1, 10) * (rabs(a.front()) + rabs(b.front()) + 1));

  // Values agree across the seams (also enforced inside cutoff_values_on_graph).
  CHECK(cutoff_value(phi, {Rational(1, 2), 0}) == 1);
  CHECK(cutoff_value(phi, {Rational(1, 4), Rational(1, 4)}) == 0);
}

TEST_CASE("evaluation rejects bad points") {
  CHECK_THROWS_AS(phi0_at_vertex({5, 5}), std::invalid_argument);
  CHECK_THROWS_AS(phi0_at_vertex({Rational(1, 3), 0}), std::invalid_argument);
  GasketGraph gb = build_graph(window_b(), 2);
  CHECK_THROWS_AS(spline_values_on_graph(gb, cell_fplus(), spline_initial(0)),
                  std::invalid_argument);
  GasketGraph g1 = build_graph(window_fplus(), 1);
  CutoffFunction phi = cutoff_assemble(g1, {0});
  CHECK_THROWS_AS(cutoff_value(phi, {-5, 0}), std::invalid_argument);
}

}  // TEST_SUITE
