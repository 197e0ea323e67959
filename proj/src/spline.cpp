#include "gasketlab/spline.hpp"

#include <stdexcept>

#include "gasketlab/calculus.hpp"

namespace gasketlab {

SplineState spline_initial(int one) {
  if (one < 0 || one > 2) throw std::invalid_argument("spline_initial: corner index");
  SplineState s{};
  s[one] = 1;
  return s;
}

SplineState spline_constant(const Rational& c) {
  SplineState s{};
  s[0] = s[1] = s[2] = c;
  return s;
}

namespace {

Mat6 base_matrix() {
  // Descent toward the kept corner, common denominator 75.
  const int num[6][6] = {
      {75, 0, 0, 0, 0, 0},      {36, 36, 3, -7, -7, -1}, {36, 3, 36, -7, -1, -7},
      {0, 0, 0, 45, 0, 0},      {-90, 90, 0, 15, -15, 0}, {-90, 0, 90, 15, 0, -15},
  };
  Mat6 m;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) m[i][j] = Rational(num[i][j], 75);
  return m;
}

// Relabel corners by the transposition (0 c), applied to both state blocks.
Mat6 conjugate(const Mat6& m, int c) {
  auto perm = [c](int i) {
    int block = i / 3, slot = i % 3;
    if (slot == 0) slot = c;
    else if (slot == c) slot = 0;
    return 3 * block + slot;
  };
  Mat6 out;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) out[i][j] = m[perm(i)][perm(j)];
  return out;
}

const std::array<Mat6, 3>& matrices() {
  static const std::array<Mat6, 3> ms = [] {
    Mat6 m1 = base_matrix();
    return std::array<Mat6, 3>{m1, conjugate(m1, 1), conjugate(m1, 2)};
  }();
  return ms;
}

}  // namespace

const Mat6& descent_matrix(int child) {
  if (child < 0 || child > 2) throw std::invalid_argument("descent_matrix: child index");
  return matrices()[child];
}

SplineState descend(const SplineState& s, int child) {
  const Mat6& m = descent_matrix(child);
  SplineState out{};
  for (int i = 0; i < 6; ++i) {
    Rational acc = 0;
    for (int j = 0; j < 6; ++j)
      if (m[i][j] != 0) acc += m[i][j] * s[j];
    out[i] = acc;
  }
  return out;
}

SplineState phi0_state(const std::vector<int>& path, int one) {
  SplineState s = spline_initial(one);
  for (int d : path) s = descend(s, d);
  return s;
}

namespace {

// Resolve p to a corner of a descendant cell along the smallest child path,
// carrying the state down; returns the matching corner slot's value.
Rational resolve_value(TriCell cell, SplineState s, const ExactPoint& p, int max_depth) {
  if (!cell_contains(cell, p)) throw std::invalid_argument("spline evaluation: point outside cell");
  for (int depth = 0; depth <= max_depth; ++depth) {
    for (int i = 0; i < 3; ++i)
      if (cell.v[i] == p) return s[i];
    auto ch = cell.children();
    int pick = -1;
    for (int i = 0; i < 3 && pick < 0; ++i)
      if (cell_contains(ch[i], p)) pick = i;
    if (pick < 0) throw std::invalid_argument("spline evaluation: point is not a gasket vertex");
    cell = ch[pick];
    s = descend(s, pick);
  }
  throw std::invalid_argument("spline evaluation: point is not a dyadic vertex (depth cap hit)");
}

}  // namespace

Rational phi0_value_in_cell(const TriCell& home, int one, const ExactPoint& p, int max_depth) {
  return resolve_value(home, spline_initial(one), p, max_depth);
}

Rational phi0_at_vertex(const ExactPoint& p, int one, int max_depth) {
  return phi0_value_in_cell(cell_fplus(), one, p, max_depth);
}

namespace {

void write_states(const GasketGraph& g, const TriCell& cell, const SplineState& s, int depth,
                  std::vector<Rational>& out, std::vector<char>& seen) {
  if (depth == 0) {
    for (int i = 0; i < 3; ++i) {
      auto id = g.find_vertex(cell.v[i]);
      if (!id) throw std::logic_error("spline_values_on_graph: cell corner missing from graph");
      if (seen[*id]) {
        if (out[*id] != s[i])
          throw std::logic_error("spline_values_on_graph: inconsistent value at shared vertex");
      } else {
        out[*id] = s[i];
        seen[*id] = 1;
      }
    }
    return;
  }
  auto ch = cell.children();
  for (int i = 0; i < 3; ++i) write_states(g, ch[i], descend(s, i), depth - 1, out, seen);
}

}  // namespace

std::vector<Rational> spline_values_on_graph(const GasketGraph& g, const TriCell& home,
                                             const SplineState& start) {
  int depth = cell_side_pow(home) + g.level - g.side_pow;
  if (depth < 0) throw std::invalid_argument("spline_values_on_graph: graph coarser than home cell");
  std::vector<Rational> out(g.n(), Rational(0));
  std::vector<char> seen(g.n(), 0);
  write_states(g, home, start, depth, out, seen);
  for (int v = 0; v < g.n(); ++v)
    if (!seen[v]) throw std::invalid_argument("spline_values_on_graph: graph exceeds the home cell");
  return out;
}

namespace {

struct VerifyWalk {
  SplineConditionReport rep;

  void check_node(const std::array<SplineState, 3>& s) {
    ++rep.states_checked;
    const SplineState& phi = s[0];
    for (int j = 0; j < 3; ++j) {
      const Rational& v = phi[j];
      Rational d = phi[3 + j] < 0 ? Rational(-phi[3 + j]) : phi[3 + j];
      if (v < 0 || v > 1 || d > 3 * v) ++rep.violations;
      if (v > 0) {
        Rational ratio = d / (3 * v);
        if (ratio > rep.max_ratio) rep.max_ratio = ratio;
      }
      if (v < rep.min_value) rep.min_value = v;
      if (v > rep.max_value) rep.max_value = v;
      Rational vsum = s[0][j] + s[1][j] + s[2][j];
      Rational dsum = s[0][3 + j] + s[1][3 + j] + s[2][3 + j];
      if (vsum != 1 || dsum != 0) rep.partition_ok = false;
    }
  }

  void recurse(const std::array<SplineState, 3>& s, int depth) {
    check_node(s);
    if (depth == 0) return;
    std::array<std::array<SplineState, 3>, 3> child;
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 3; ++r) child[c][r] = descend(s[r], c);
    for (int c = 0; c < 3; ++c) {
      if (child[c][0][c] != s[0][c]) rep.sibling_consistent = false;  // kept corner
      if (child[c][0][3 + c] != Rational(3, 5) * s[0][3 + c]) rep.derivative_chain_ok = false;
      for (int c2 = c + 1; c2 < 3; ++c2)  // shared midpoint between siblings
        if (child[c][0][c2] != child[c2][0][c]) rep.sibling_consistent = false;
    }
    for (int c = 0; c < 3; ++c) recurse(child[c], depth - 1);
  }
};

}  // namespace

SplineConditionReport verify_spline_condition(int depth) {
  if (depth < 0 || depth > 12) throw std::invalid_argument("verify_spline_condition: depth");
  VerifyWalk walk;
  walk.rep.depth = depth;
  walk.rep.min_value = 2;
  walk.rep.max_value = -1;
  walk.rep.max_ratio = 0;
  std::array<SplineState, 3> start{spline_initial(0), spline_initial(1), spline_initial(2)};
  walk.recurse(start, depth);
  return walk.rep;
}

CutoffFunction cutoff_assemble(const GasketGraph& gn, const std::vector<int>& selected) {
  std::vector<char> in_v(gn.n(), 0);
  for (int ci : selected) {
    if (ci < 0 || ci >= (int)gn.cells.size())
      throw std::out_of_range("cutoff_assemble: cell index out of range");
    for (int v : gn.cells[ci]) in_v[v] = 1;
  }
  CutoffFunction phi;
  phi.level = gn.unit_level();
  phi.rules.reserve(gn.cells.size());
  for (int ci = 0; ci < (int)gn.cells.size(); ++ci) {
    const auto& c = gn.cells[ci];
    CutoffRule r;
    std::array<int, 3> pos;  // corner slot of each stored id
    r.cell = cell_from_graph(gn, ci, &pos);
    std::array<char, 3> flag{};  // in_v per corner slot
    for (int i = 0; i < 3; ++i) flag[pos[i]] = in_v[c[i]];
    int count = flag[0] + flag[1] + flag[2];
    switch (count) {
      case 3: r.kase = CutoffCase::One; break;
      case 0: r.kase = CutoffCase::Zero; break;
      case 1:
        r.kase = CutoffCase::Phi0;
        for (int i = 0; i < 3; ++i)
          if (flag[i]) r.special = i;
        break;
      case 2:
        r.kase = CutoffCase::OneMinusPhi0;
        for (int i = 0; i < 3; ++i)
          if (!flag[i]) r.special = i;
        break;
      default: throw std::logic_error("cutoff_assemble: impossible corner count");
    }
    phi.rules.push_back(r);
  }
  return phi;
}

SplineState cutoff_start_state(const CutoffRule& r) {
  switch (r.kase) {
    case CutoffCase::Zero: return SplineState{};
    case CutoffCase::One: return spline_constant(1);
    case CutoffCase::Phi0: return spline_initial(r.special);
    case CutoffCase::OneMinusPhi0: {
      SplineState s = spline_constant(1);
      s[r.special] = 0;
      return s;
    }
  }
  throw std::logic_error("cutoff_start_state: bad case");
}

Rational cutoff_value(const CutoffFunction& phi, const ExactPoint& p, int max_depth) {
  for (const CutoffRule& r : phi.rules)
    if (cell_contains(r.cell, p)) return resolve_value(r.cell, cutoff_start_state(r), p, max_depth);
  throw std::invalid_argument("cutoff_value: point outside every rule cell");
}

std::vector<Rational> cutoff_values_on_graph(const CutoffFunction& phi, const GasketGraph& g) {
  if (phi.rules.empty()) throw std::invalid_argument("cutoff_values_on_graph: empty cutoff");
  int depth = cell_side_pow(phi.rules.front().cell) + g.level - g.side_pow;
  if (depth < 0) throw std::invalid_argument("cutoff_values_on_graph: graph coarser than the cutoff");
  std::vector<Rational> out(g.n(), Rational(0));
  std::vector<char> seen(g.n(), 0);
  for (const CutoffRule& r : phi.rules)
    write_states(g, r.cell, cutoff_start_state(r), depth, out, seen);
  for (int v = 0; v < g.n(); ++v)
    if (!seen[v]) throw std::invalid_argument("cutoff_values_on_graph: uncovered vertex");
  return out;
}

}  // namespace gasketlab
