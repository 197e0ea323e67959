#include "gasketlab/walk.hpp"

#include <cmath>
#include <stdexcept>

namespace gasketlab {

WalkOperator make_walk(const GasketGraph& g, bool killed) {
  WalkOperator w;
  w.killed = killed;
  w.row_of.assign(g.n(), -1);
  for (int v = 0; v < g.n(); ++v) {
    if (killed && g.rim[v]) continue;
    w.row_of[v] = (int)w.verts.size();
    w.verts.push_back(v);
  }
  int n = w.n();
  if (n == 0) throw std::invalid_argument("make_walk: no retained vertices");

  w.deg_sqrt.resize(n);
  w.deg_isqrt.resize(n);
  for (int r = 0; r < n; ++r) {
    double d = (double)g.degree(w.verts[r]);
    w.deg_sqrt[r] = std::sqrt(d);
    w.deg_isqrt[r] = 1.0 / w.deg_sqrt[r];
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * (size_t)n);
  for (int r = 0; r < n; ++r) {
    int v = w.verts[r];
    for (int e = g.nbr_off[v]; e < g.nbr_off[v + 1]; ++e) {
      int u = g.nbr[e];
      int c = w.row_of[u];
      if (c < 0) continue;  // killed: jump into the rim is lost
      trip.emplace_back(r, c, w.deg_isqrt[r] * w.deg_isqrt[c]);
    }
  }
  w.S.resize(n, n);
  w.S.setFromTriplets(trip.begin(), trip.end());
  w.S.makeCompressed();
  return w;
}

Eigen::VectorXd WalkOperator::apply_p(const Eigen::VectorXd& x) const {
  if (x.size() != n()) throw std::invalid_argument("apply_p: size mismatch");
  return deg_isqrt.array() * (S * (deg_sqrt.array() * x.array()).matrix()).array();
}

Eigen::MatrixXd WalkOperator::dense_p() const {
  Eigen::MatrixXd P = Eigen::MatrixXd(S);
  for (int r = 0; r < n(); ++r) P.row(r) *= deg_isqrt[r];
  for (int c = 0; c < n(); ++c) P.col(c) *= deg_sqrt[c];
  return P;
}

double top_eigenvalue(const Eigen::SparseMatrix<double>& S, int iters) {
  int n = (int)S.rows();
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = 1.0 + 0.25 * std::cos(2.7 * i);
  x.normalize();
  double lam = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd y = S * x;
    lam = x.dot(y);
    double nrm = y.norm();
    if (nrm == 0.0) return 0.0;
    x = y / nrm;
  }
  return lam;
}

}  // namespace gasketlab
