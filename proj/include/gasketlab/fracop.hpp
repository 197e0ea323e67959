#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "gasketlab/geometry.hpp"
#include "gasketlab/spline.hpp"
#include "gasketlab/subordination.hpp"
#include "gasketlab/walk.hpp"

namespace gasketlab {

enum class FracMode { Spectral, Series, Quadrature };
enum class TailPolicy { Renormalize, TailToLast };

struct FracOptions {
  FracMode mode = FracMode::Spectral;
  bool killed = true;           // absorb at the rim (false: conservative walk)
  int spectral_cap = 5000;      // refuse dense eigensolves beyond this size
  int series_m = 1 << 16;       // truncation of the subordination series
  TailPolicy tail = TailPolicy::Renormalize;
  double quad_step = 0.7;       // log-spacing of resolvent nodes
  double quad_direct_t = 63.0;  // factorize nodes below, series expansion above
};

// (I - P)^beta on a graph window, P the one-step walk (killed or conservative).
// Acts on function values in retained-vertex order (see walk().verts).
//  - Spectral: dense eigendecomposition of the symmetrized walk.
//  - Series: I - sum_m chat_m P^m with subordination weights and a tail policy.
//  - Quadrature: trapezoid discretization of the resolvent integral for
//    fractional powers on a geometric grid of shifts, A = I - S factored
//    sparsely per node; nodes are beta-independent, so one pass over the
//    factors serves every requested beta at once.
// beta = 1 short-circuits to I - P exactly in every mode.
class FractionalOperator {
 public:
  FractionalOperator(const GasketGraph& g, double beta, FracOptions opt = {});
  ~FractionalOperator();
  FractionalOperator(FractionalOperator&&) noexcept;
  FractionalOperator& operator=(FractionalOperator&&) noexcept;

  int n() const { return walk_.n(); }
  double beta() const { return beta_; }
  bool killed() const { return opt_.killed; }
  FracMode mode() const { return opt_.mode; }
  const WalkOperator& walk() const { return walk_; }
  const GasketGraph& graph() const { return *g_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  // One pass over the quadrature nodes serves every beta at once; in the other
  // modes this just loops (series mode only answers its own beta).
  std::vector<Eigen::VectorXd> apply_multi(const Eigen::VectorXd& x,
                                           const std::vector<double>& betas) const;
  // Block version: applies to every column of X. In quadrature mode the node
  // solves are shared across betas and the per-node blocks are folded into the
  // accumulators immediately, so memory stays at O((betas + 2) * size of X).
  std::vector<Eigen::MatrixXd> apply_multi(const Eigen::MatrixXd& X,
                                           const std::vector<double>& betas) const;
  Eigen::MatrixXd dense() const;
  Eigen::VectorXd row_sums() const;

  // spectrum of I - P (spectral mode only), ascending
  Eigen::VectorXd spectrum() const;
  double lambda_min_hat() const { return lam_min_hat_; }
  int node_count() const;
  int factor_count() const;

 private:
  struct Quad;
  const GasketGraph* g_;
  double beta_;
  FracOptions opt_;
  WalkOperator walk_;
  Eigen::SparseMatrix<double> P_;  // plain transition operator
  // spectral
  Eigen::MatrixXd evec_;
  Eigen::VectorXd eval_;  // eigenvalues of S, ascending
  // series
  std::vector<double> chat_;
  // quadrature
  std::unique_ptr<Quad> quad_;
  double lam_min_hat_ = 0.0;
  mutable std::unique_ptr<Eigen::MatrixXd> dense_cache_;  // filled on first dense()

  Eigen::VectorXd apply_one(const Eigen::VectorXd& x, double beta) const;
  Eigen::MatrixXd dense_uncached() const;
};

FractionalOperator build_fractional_operator(const GasketGraph& g, double beta,
                                             FracOptions opt = {});

// Largest |(I-P)^beta phi| over retained vertices for a cutoff function phi,
// together with where it is attained.
struct CutoffBound {
  double max_abs = 0.0;
  int argmax_vertex = -1;  // graph vertex id
};
CutoffBound cutoff_fractional_bound(const FractionalOperator& op, const CutoffFunction& cut);

}  // namespace gasketlab
