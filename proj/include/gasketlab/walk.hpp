#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

#include "gasketlab/geometry.hpp"

namespace gasketlab {

// One-step nearest-neighbor walk on a graph window. The killed variant keeps
// only non-rim vertices (jumps into the rim are absorbed and lost); the
// conservative variant keeps every vertex and every jump. Rows follow the
// retained vertices in graph id order. S is the degree-symmetrized operator
// D^{-1/2} W D^{-1/2}, so the plain transition operator is P = D^{-1/2} S D^{1/2}.
struct WalkOperator {
  bool killed = false;
  std::vector<int> verts;   // row -> graph vertex id
  std::vector<int> row_of;  // graph vertex id -> row, -1 when dropped
  Eigen::SparseMatrix<double> S;
  Eigen::VectorXd deg_sqrt, deg_isqrt;  // full graph degree, per row

  int n() const { return (int)verts.size(); }
  Eigen::VectorXd apply_p(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd dense_p() const;
};

WalkOperator make_walk(const GasketGraph& g, bool killed);

// Largest eigenvalue of a symmetric sparse operator by power iteration with a
// fixed deterministic start; adequate for bracketing the spectrum.
double top_eigenvalue(const Eigen::SparseMatrix<double>& S, int iters = 300);

}  // namespace gasketlab
