#pragma once

#include <array>
#include <vector>

#include "gasketlab/geometry.hpp"

namespace gasketlab {

// Cell state of a biharmonic function: values at the three corners, then the
// matching scale-adjusted outward derivatives ((3/5)^k at descent depth k).
using SplineState = std::array<Rational, 6>;
using Mat6 = std::array<std::array<Rational, 6>, 6>;

// Corner spline initial state: value 1 at corner `one`, 0 elsewhere, flat.
SplineState spline_initial(int one = 0);
SplineState spline_constant(const Rational& c);

// Descent matrix toward child `child` (0-based, matching TriCell::children():
// the child keeps corner `child`, the other corners move to edge midpoints).
// Child 0 is the printed /75 matrix; the others are its corner relabelings.
const Mat6& descent_matrix(int child);

SplineState descend(const SplineState& s, int child);

// State after descending along `path` (digits 0..2) from the corner spline
// with value 1 at corner `one` of the home cell.
SplineState phi0_state(const std::vector<int>& path, int one = 0);

// Exact corner-spline value at a dyadic vertex of an arbitrary home cell,
// resolved along the lexicographically smallest child path.
Rational phi0_value_in_cell(const TriCell& home, int one, const ExactPoint& p,
                            int max_depth = 48);
Rational phi0_at_vertex(const ExactPoint& p, int one = 0, int max_depth = 48);

// Exact values of a descending state at every vertex of a refinement graph
// whose window is exactly `home` (used for single-cell spline dumps).
std::vector<Rational> spline_values_on_graph(const GasketGraph& g, const TriCell& home,
                                             const SplineState& start);

struct SplineConditionReport {
  int depth = 0;
  long long states_checked = 0;   // paths of length <= depth, root included
  long long violations = 0;       // failed sign/size/derivative-bound checks
  Rational max_ratio;             // max |d_j| / (3 v_j) over slots with v_j > 0
  Rational min_value, max_value;  // corner-spline value range over all states
  bool sibling_consistent = true;  // shared vertices agree across sibling cells
  bool partition_ok = true;        // the three corner splines sum to 1, flat
  bool derivative_chain_ok = true; // kept-corner derivative contracts by 3/5
  bool ok() const {
    return violations == 0 && sibling_consistent && partition_ok && derivative_chain_ok;
  }
};

// Exhaustive exact check of the corner-spline inequalities over every
// descent path of length <= depth.
SplineConditionReport verify_spline_condition(int depth);

// Piecewise spline cutoff: per cell of a level-n tiling, one of the four
// assignments {0, 1, phi0, 1-phi0} determined by how many corners are
// vertices of the selected cell set.
enum class CutoffCase : unsigned char { Zero, One, Phi0, OneMinusPhi0 };

struct CutoffRule {
  TriCell cell;
  CutoffCase kase = CutoffCase::Zero;
  int special = -1;  // distinguished corner for the phi0 / 1-phi0 cases
};

struct CutoffFunction {
  int level = 0;  // tiling depth below the window's 0-cells
  std::vector<CutoffRule> rules;
};

// Assemble the cutoff of the cell set `selected` (indices into gn.cells).
CutoffFunction cutoff_assemble(const GasketGraph& gn, const std::vector<int>& selected);

SplineState cutoff_start_state(const CutoffRule& r);

// Exact value at a dyadic vertex of the window (first containing rule cell).
Rational cutoff_value(const CutoffFunction& phi, const ExactPoint& p, int max_depth = 48);

// Exact values at every vertex of a refinement of the cutoff's window; throws
// if two rules disagree at a shared vertex or a vertex is left uncovered.
std::vector<Rational> cutoff_values_on_graph(const CutoffFunction& phi, const GasketGraph& g);

}  // namespace gasketlab
