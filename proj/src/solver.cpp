#include "gasketlab/solver.hpp"

#include <lapacke.h>

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gasketlab {

namespace {

struct DomainMap {
  std::vector<int> verts;  // sorted graph ids
  std::vector<int> rows;   // operator rows
};

DomainMap map_domain(const FractionalOperator& op, const std::vector<int>& domain) {
  if (domain.empty()) throw std::invalid_argument("solver: empty domain");
  DomainMap m;
  m.verts = domain;
  std::sort(m.verts.begin(), m.verts.end());
  m.verts.erase(std::unique(m.verts.begin(), m.verts.end()), m.verts.end());
  const auto& g = op.graph();
  for (int v : m.verts) {
    if (v < 0 || v >= g.n()) throw std::invalid_argument("solver: vertex id out of range");
    if (g.rim[v]) throw std::invalid_argument("solver: domain touches the rim");
    int r = op.walk().row_of[v];
    if (r < 0) throw std::logic_error("solver: vertex not represented in the operator");
    m.rows.push_back(r);
  }
  return m;
}

// dense L_DD; sliced from the full matrix when one is available, otherwise
// assembled column by column through operator applies
Eigen::MatrixXd dirichlet_block(const FractionalOperator& op, const std::vector<int>& rows) {
  int m = (int)rows.size();
  Eigen::MatrixXd B(m, m);
  if (op.mode() == FracMode::Quadrature) {
    for (int c = 0; c < m; ++c) {
      Eigen::VectorXd col = op.apply(Eigen::VectorXd::Unit(op.n(), rows[c]));
      for (int r = 0; r < m; ++r) B(r, c) = col[rows[r]];
    }
  } else {
    Eigen::MatrixXd L = op.dense();
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) B(r, c) = L(rows[r], rows[c]);
  }
  return B;
}

struct Factored {
  Eigen::MatrixXd chol;  // dpotrf factor, lower
  double sym_defect = 0.0;

  explicit Factored(Eigen::MatrixXd block) {
    sym_defect = (block - block.transpose()).lpNorm<Eigen::Infinity>();
    chol = 0.5 * (block + block.transpose());
    int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', (int)chol.rows(), chol.data(),
                              (int)chol.rows());
    if (info != 0) throw std::runtime_error("solver: Dirichlet block is not positive definite");
  }

  Eigen::VectorXd solve(Eigen::VectorXd rhs) const {
    int info = LAPACKE_dpotrs(LAPACK_COL_MAJOR, 'L', (int)chol.rows(), 1, chol.data(),
                              (int)chol.rows(), rhs.data(), (int)chol.rows());
    if (info != 0) throw std::runtime_error("solver: triangular solve failed");
    return rhs;
  }
};

// one refinement pass against the symmetrized block
Eigen::VectorXd refined_solve(const Eigen::MatrixXd& sym, const Factored& f,
                              const Eigen::VectorXd& rhs, int* steps) {
  Eigen::VectorXd x = f.solve(rhs);
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd r = rhs - sym * x;
    double before = r.lpNorm<Eigen::Infinity>();
    if (before == 0.0) break;
    Eigen::VectorXd dx = f.solve(r);
    Eigen::VectorXd xn = x + dx;
    double after = (rhs - sym * xn).lpNorm<Eigen::Infinity>();
    if (after >= before) break;
    x = xn;
    if (steps) ++*steps;
  }
  return x;
}

double condition_estimate(const Eigen::MatrixXd& sym, const Factored& f) {
  int m = (int)sym.rows();
  Eigen::VectorXd v(m), w(m);
  for (int i = 0; i < m; ++i) {
    v[i] = 1.0 + 0.5 * std::sin(0.77 * i);
    w[i] = 1.0 + 0.5 * std::cos(1.31 * i);
  }
  v.normalize();
  w.normalize();
  double hi = 0.0, lo = 0.0;
  for (int it = 0; it < 30; ++it) {
    v = sym * v;
    hi = v.norm();
    v /= hi;
    w = f.solve(w);
    lo = 1.0 / w.norm();
    w *= lo;
  }
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// -(L g_masked) restricted to D, where g_masked carries g off D and 0 on D
Eigen::VectorXd coupling_rhs(const FractionalOperator& op, const DomainMap& dm,
                             const Eigen::VectorXd& g_masked) {
  Eigen::VectorXd lg = op.apply(g_masked);
  Eigen::VectorXd rhs((int)dm.rows.size());
  for (size_t i = 0; i < dm.rows.size(); ++i) rhs[(int)i] = -lg[dm.rows[i]];
  return rhs;
}

}  // namespace

HarmonicSolution harmonic_solve(const FractionalOperator& op, const std::vector<int>& domain,
                                const Eigen::VectorXd& g) {
  if (g.size() != op.n()) throw std::invalid_argument("harmonic_solve: boundary data size mismatch");
  DomainMap dm = map_domain(op, domain);
  int m = (int)dm.rows.size();

  Eigen::VectorXd g_masked = g;
  for (int r : dm.rows) g_masked[r] = 0.0;

  Eigen::MatrixXd block = dirichlet_block(op, dm.rows);
  Eigen::MatrixXd symm = 0.5 * (block + block.transpose());
  Factored f(block);  // keeps symm intact for refinement residuals

  HarmonicSolution sol;
  sol.domain = dm.verts;
  sol.rows = dm.rows;
  sol.sym_defect = f.sym_defect;

  Eigen::VectorXd rhs = coupling_rhs(op, dm, g_masked);
  sol.h = refined_solve(symm, f, rhs, &sol.refine_steps);

  sol.full = g_masked;
  for (int i = 0; i < m; ++i) sol.full[dm.rows[i]] = sol.h[i];

  // harmonic measure totals from the same factorization
  Eigen::VectorXd ones_masked = Eigen::VectorXd::Ones(op.n());
  for (int r : dm.rows) ones_masked[r] = 0.0;
  Eigen::VectorXd h1 = refined_solve(symm, f, coupling_rhs(op, dm, ones_masked), nullptr);
  sol.killed_mass = Eigen::VectorXd::Ones(m) - h1;

  Eigen::VectorXd certificate = op.apply(sol.full);
  double worst = 0.0;
  for (int r : dm.rows) worst = std::max(worst, std::abs(certificate[r]));
  double scale = std::max(sol.full.lpNorm<Eigen::Infinity>(), 1e-300);
  sol.residual = worst / scale;
  sol.cond_hat = condition_estimate(symm, f);
  return sol;
}

Eigen::VectorXd exit_time_solve(const FractionalOperator& op, const std::vector<int>& domain) {
  DomainMap dm = map_domain(op, domain);
  Eigen::MatrixXd block = dirichlet_block(op, dm.rows);
  Eigen::MatrixXd symm = 0.5 * (block + block.transpose());
  Factored f(block);
  return refined_solve(symm, f, Eigen::VectorXd::Ones((int)dm.rows.size()), nullptr);
}

Eigen::MatrixXd green_table(const FractionalOperator& op, const std::vector<int>& domain, int cap) {
  DomainMap dm = map_domain(op, domain);
  int m = (int)dm.rows.size();
  if (m > cap) throw std::invalid_argument("green_table: domain exceeds the dense-inverse cap");
  Eigen::MatrixXd block = dirichlet_block(op, dm.rows);
  Eigen::MatrixXd G = 0.5 * (block + block.transpose());
  int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', m, G.data(), m);
  if (info != 0) throw std::runtime_error("green_table: Dirichlet block is not positive definite");
  info = LAPACKE_dpotri(LAPACK_COL_MAJOR, 'L', m, G.data(), m);
  if (info != 0) throw std::runtime_error("green_table: inversion failed");
  for (int r = 0; r < m; ++r)
    for (int c = r + 1; c < m; ++c) G(r, c) = G(c, r);
  return G;
}

Eigen::VectorXd plain_walk_exit(const GasketGraph& g, const std::vector<int>& domain,
                                const std::vector<double>& boundary) {
  if ((int)boundary.size() != g.n())
    throw std::invalid_argument("plain_walk_exit: boundary size mismatch");
  std::vector<int> verts = domain;
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  if (verts.empty()) throw std::invalid_argument("plain_walk_exit: empty domain");
  std::vector<int> pos(g.n(), -1);
  for (size_t i = 0; i < verts.size(); ++i) {
    int v = verts[i];
    if (g.rim[v]) throw std::invalid_argument("plain_walk_exit: domain touches the rim");
    pos[v] = (int)i;
  }
  int m = (int)verts.size();
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    int v = verts[i];
    double inv_deg = 1.0 / g.degree(v);
    trip.emplace_back(i, i, 1.0);
    for (int e = g.nbr_off[v]; e < g.nbr_off[v + 1]; ++e) {
      int u = g.nbr[e];
      if (pos[u] >= 0)
        trip.emplace_back(i, pos[u], -inv_deg);
      else
        rhs[i] += inv_deg * boundary[u];
    }
  }
  Eigen::SparseMatrix<double> M(m, m);
  M.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(M);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("plain_walk_exit: factorization failed");
  return llt.solve(rhs);
}

}  // namespace gasketlab
