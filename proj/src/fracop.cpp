#include "gasketlab/fracop.hpp"

#include <lapacke.h>

#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

namespace gasketlab {

namespace {

// substochastic walks only: beta in (0,1]
void check_beta(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("fractional operator: beta must be in (0,1]");
}

}  // namespace

// Resolvent-quadrature state. With A = I - S and s = 1 - beta,
//   A^{-s} = (sin(pi s)/pi) * int_0^inf t^{-s} (A+t)^{-1} dt,   A^beta = A A^{-s},
// discretized by the trapezoid rule on the grid t_j = e^{jh}. The integrand in
// y = ln t decays exponentially both ways, so the infinite sum converges at
// rate e^{-c/h}; nodes in the middle band are evaluated through sparse
// Cholesky factors of A + t_j, while both tails are summed in closed form
// after expanding the resolvent (in powers of t A^{-1} on the left, of A/t on
// the right). Node positions do not depend on beta: one sweep over the
// factors serves every requested exponent.
struct FractionalOperator::Quad {
  static constexpr int kLeftTerms = 14;   // t/lambda_min <= e^{-2} per node
  static constexpr int kRightTerms = 10;  // ||A||/t <= 2/63 per node
  Eigen::SparseMatrix<double> A;
  double h = 0.0;
  int jlo = 0, jhi = 0;  // factored band: y_j = j h for jlo <= j <= jhi
  std::vector<std::unique_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>> factors;
  // base factorization of A (killed) or A + eps (conservative), for the left tail
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> base;
  bool base_shifted = false;
  Eigen::VectorXd kernel;  // conservative mode: unit vector spanning ker A

  void deflate(Eigen::VectorXd& v) const {
    if (kernel.size()) v -= kernel * kernel.dot(v);
  }

  // action of A^{-1} on the deflated subspace; iterative refinement removes
  // the regularization shift in the conservative case
  Eigen::VectorXd solve_base(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = base.solve(b);
    if (base_shifted) {
      deflate(x);
      for (int pass = 0; pass < 3; ++pass) {
        Eigen::VectorXd r = b - A * x;
        deflate(r);
        x += base.solve(r);
        deflate(x);
      }
    }
    return x;
  }
};

FractionalOperator::FractionalOperator(const GasketGraph& g, double beta, FracOptions opt)
    : g_(&g), beta_(beta), opt_(std::move(opt)), walk_(make_walk(g, opt_.killed)) {
  check_beta(beta_);
  int n = walk_.n();

  // plain transition operator P = D^{-1/2} S D^{1/2}
  P_ = walk_.S;
  for (int c = 0; c < P_.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(P_, c); it; ++it)
      it.valueRef() *= walk_.deg_isqrt[it.row()] * walk_.deg_sqrt[c];

  switch (opt_.mode) {
    case FracMode::Spectral: {
      if (n > opt_.spectral_cap)
        throw std::invalid_argument("fractional operator: window too large for spectral mode");
      evec_ = Eigen::MatrixXd(walk_.S);
      eval_.resize(n);
      int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, evec_.data(), n, eval_.data());
      if (info != 0) throw std::runtime_error("fractional operator: eigensolve failed");
      // the conservative walk has the exact eigenvalue 1; snap off the roundoff
      // so that fractional powers annihilate constants cleanly
      if (!opt_.killed)
        for (int i = 0; i < n; ++i)
          if (std::abs(eval_[i] - 1.0) < 5e-14) eval_[i] = 1.0;
      break;
    }
    case FracMode::Series: {
      auto w = make_weights(beta_, opt_.series_m);
      chat_.assign(w.c.begin(), w.c.end());
      if (opt_.tail == TailPolicy::Renormalize) {
        double total = 1.0 - w.tail;
        for (auto& c : chat_) c /= total;
      } else {
        chat_.back() += w.tail;
      }
      break;
    }
    case FracMode::Quadrature: {
      quad_ = std::make_unique<Quad>();
      Quad& q = *quad_;
      q.h = opt_.quad_step;
      Eigen::SparseMatrix<double> eye(n, n);
      eye.setIdentity();
      q.A = eye - walk_.S;
      q.A.makeCompressed();

      if (!opt_.killed) {
        q.kernel = walk_.deg_sqrt / walk_.deg_sqrt.norm();  // S (D^{1/2} 1) = D^{1/2} 1
        q.base.compute(q.A + 1e-8 * eye);
        q.base_shifted = true;
      } else {
        q.base.compute(q.A);
      }
      if (q.base.info() != Eigen::Success)
        throw std::runtime_error("fractional operator: Cholesky of I - S failed");

      // smallest (nonzero) eigenvalue of A by deflated inverse iteration
      {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.3 * std::sin(1.7 * i);
        q.deflate(v);
        v.normalize();
        for (int it = 0; it < 60; ++it) {
          v = q.solve_base(v);
          q.deflate(v);
          v.normalize();
        }
        lam_min_hat_ = v.dot(q.A * v);
        if (!(lam_min_hat_ > 0.0))
          throw std::runtime_error("fractional operator: spectral floor estimate failed");
      }

      // factored band: from two log-units below the spectral floor (where the
      // left expansion takes over) up to the direct/expansion switch point
      q.jlo = (int)std::ceil((std::log(lam_min_hat_) - 2.0) / q.h);
      q.jhi = (int)std::floor(std::log(opt_.quad_direct_t) / q.h);
      for (int j = q.jlo; j <= q.jhi; ++j) {
        auto f = std::make_unique<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
        f->compute(q.A + std::exp(j * q.h) * eye);
        if (f->info() != Eigen::Success)
          throw std::runtime_error("fractional operator: node factorization failed");
        q.factors.push_back(std::move(f));
      }
      break;
    }
  }
}

FractionalOperator::~FractionalOperator() = default;
FractionalOperator::FractionalOperator(FractionalOperator&&) noexcept = default;
FractionalOperator& FractionalOperator::operator=(FractionalOperator&&) noexcept = default;

FractionalOperator build_fractional_operator(const GasketGraph& g, double beta, FracOptions opt) {
  return FractionalOperator(g, beta, std::move(opt));
}

Eigen::VectorXd FractionalOperator::apply_one(const Eigen::VectorXd& x, double beta) const {
  check_beta(beta);
  if (x.size() != n()) throw std::invalid_argument("fractional operator: size mismatch");
  if (beta == 1.0) return x - P_ * x;

  switch (opt_.mode) {
    case FracMode::Spectral: {
      Eigen::VectorXd v = walk_.deg_sqrt.array() * x.array();
      Eigen::VectorXd c = evec_.transpose() * v;
      for (int i = 0; i < n(); ++i) c[i] *= std::pow(std::max(1.0 - eval_[i], 0.0), beta);
      Eigen::VectorXd w = evec_ * c;
      return walk_.deg_isqrt.array() * w.array();
    }
    case FracMode::Series: {
      if (beta != beta_)
        throw std::invalid_argument("fractional operator: series weights are fixed per beta");
      Eigen::VectorXd acc = x, p = x;
      for (size_t m = 1; m < chat_.size(); ++m) {
        p = P_ * p;
        acc -= chat_[m] * p;
      }
      return acc;
    }
    case FracMode::Quadrature:
      return apply_multi(x, {beta})[0];
  }
  throw std::logic_error("fractional operator: unknown mode");
}

Eigen::VectorXd FractionalOperator::apply(const Eigen::VectorXd& x) const {
  return apply_one(x, beta_);
}

std::vector<Eigen::VectorXd> FractionalOperator::apply_multi(
    const Eigen::VectorXd& x, const std::vector<double>& betas) const {
  std::vector<Eigen::VectorXd> out(betas.size());
  if (opt_.mode != FracMode::Quadrature) {
    for (size_t i = 0; i < betas.size(); ++i) out[i] = apply_one(x, betas[i]);
    return out;
  }
  if (x.size() != n()) throw std::invalid_argument("fractional operator: size mismatch");
  const Quad& q = *quad_;

  std::vector<size_t> pending;
  for (size_t i = 0; i < betas.size(); ++i) {
    check_beta(betas[i]);
    if (betas[i] == 1.0)
      out[i] = x - P_ * x;
    else
      pending.push_back(i);
  }
  if (pending.empty()) return out;

  Eigen::VectorXd v = walk_.deg_sqrt.array() * x.array();
  q.deflate(v);

  // reusable pieces, all beta-independent: resolvents on the factored band,
  // inverse powers for the left tail, plain powers for the right tail
  std::vector<Eigen::VectorXd> band(q.factors.size());
  for (size_t j = 0; j < q.factors.size(); ++j) {
    band[j] = q.factors[j]->solve(v);
    q.deflate(band[j]);
  }
  std::vector<Eigen::VectorXd> invp(Quad::kLeftTerms);
  for (int k = 0; k < Quad::kLeftTerms; ++k) {
    invp[k] = q.solve_base(k == 0 ? v : invp[k - 1]);
    q.deflate(invp[k]);
  }
  std::vector<Eigen::VectorXd> powp(Quad::kRightTerms);
  powp[0] = v;
  for (int k = 1; k < Quad::kRightTerms; ++k) powp[k] = q.A * powp[k - 1];

  double h = q.h, ytop = (q.jlo - 1) * h, ybot = (q.jhi + 1) * h;
  for (size_t i : pending) {
    double beta = betas[i], s = 1.0 - beta;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n());
    for (int j = q.jlo; j <= q.jhi; ++j)
      u += h * std::exp((1.0 - s) * j * h) * band[j - q.jlo];
    for (int k = 0; k < Quad::kLeftTerms; ++k) {
      double rate = 1.0 - s + k;
      double gk = h * std::exp(rate * ytop) / (1.0 - std::exp(-rate * h));
      u += (k % 2 ? -gk : gk) * invp[k];
    }
    for (int k = 0; k < Quad::kRightTerms; ++k) {
      double rate = s + k;
      double gk = h * std::exp(-rate * ybot) / (1.0 - std::exp(-rate * h));
      u += (k % 2 ? -gk : gk) * powp[k];
    }
    Eigen::VectorXd w = (std::sin(M_PI * s) / M_PI) * (q.A * u);
    q.deflate(w);
    out[i] = walk_.deg_isqrt.array() * w.array();
  }
  return out;
}

std::vector<Eigen::MatrixXd> FractionalOperator::apply_multi(
    const Eigen::MatrixXd& X, const std::vector<double>& betas) const {
  std::vector<Eigen::MatrixXd> out(betas.size());
  if (X.rows() != n()) throw std::invalid_argument("fractional operator: size mismatch");
  if (opt_.mode != FracMode::Quadrature) {
    for (size_t i = 0; i < betas.size(); ++i) {
      out[i].resize(X.rows(), X.cols());
      for (int c = 0; c < X.cols(); ++c) out[i].col(c) = apply_one(X.col(c), betas[i]);
    }
    return out;
  }
  const Quad& q = *quad_;

  std::vector<size_t> pending;
  for (size_t i = 0; i < betas.size(); ++i) {
    check_beta(betas[i]);
    if (betas[i] == 1.0)
      out[i] = X - P_ * X;
    else
      pending.push_back(i);
  }
  if (pending.empty()) return out;

  auto deflate_block = [&](Eigen::MatrixXd& B) {
    if (q.kernel.size()) B -= q.kernel * (q.kernel.transpose() * B);
  };
  auto solve_base_block = [&](const Eigen::MatrixXd& B) {
    Eigen::MatrixXd Y = q.base.solve(B);
    if (q.base_shifted) {
      deflate_block(Y);
      for (int pass = 0; pass < 3; ++pass) {
        Eigen::MatrixXd R = B - q.A * Y;
        deflate_block(R);
        Y += q.base.solve(R);
        deflate_block(Y);
      }
    }
    return Y;
  };

  Eigen::MatrixXd V = walk_.deg_sqrt.asDiagonal() * X;
  deflate_block(V);

  // per-node blocks fold into the per-beta accumulators right away, so the
  // footprint is one work block plus one accumulator per requested beta
  std::vector<Eigen::MatrixXd> U(pending.size());
  for (auto& u : U) u = Eigen::MatrixXd::Zero(X.rows(), X.cols());

  double h = q.h, ytop = (q.jlo - 1) * h, ybot = (q.jhi + 1) * h;
  for (int j = q.jlo; j <= q.jhi; ++j) {
    Eigen::MatrixXd Y = q.factors[j - q.jlo]->solve(V);
    deflate_block(Y);
    for (size_t p = 0; p < pending.size(); ++p) {
      double s = 1.0 - betas[pending[p]];
      U[p] += h * std::exp((1.0 - s) * j * h) * Y;
    }
  }
  {
    Eigen::MatrixXd W;
    for (int k = 0; k < Quad::kLeftTerms; ++k) {
      W = solve_base_block(k == 0 ? V : W);
      deflate_block(W);
      for (size_t p = 0; p < pending.size(); ++p) {
        double rate = 1.0 - (1.0 - betas[pending[p]]) + k;
        double gk = h * std::exp(rate * ytop) / (1.0 - std::exp(-rate * h));
        U[p] += (k % 2 ? -gk : gk) * W;
      }
    }
  }
  {
    Eigen::MatrixXd W;
    for (int k = 0; k < Quad::kRightTerms; ++k) {
      if (k == 0)
        W = V;
      else
        W = q.A * W;
      for (size_t p = 0; p < pending.size(); ++p) {
        double rate = (1.0 - betas[pending[p]]) + k;
        double gk = h * std::exp(-rate * ybot) / (1.0 - std::exp(-rate * h));
        U[p] += (k % 2 ? -gk : gk) * W;
      }
    }
  }
  for (size_t p = 0; p < pending.size(); ++p) {
    double s = 1.0 - betas[pending[p]];
    Eigen::MatrixXd W = (std::sin(M_PI * s) / M_PI) * (q.A * U[p]);
    deflate_block(W);
    out[pending[p]] = walk_.deg_isqrt.asDiagonal() * W;
  }
  return out;
}

Eigen::MatrixXd FractionalOperator::dense() const {
  if (dense_cache_) return *dense_cache_;
  Eigen::MatrixXd L = dense_uncached();
  dense_cache_ = std::make_unique<Eigen::MatrixXd>(std::move(L));
  return *dense_cache_;
}

Eigen::MatrixXd FractionalOperator::dense_uncached() const {
  int m = n();
  if (beta_ == 1.0) return Eigen::MatrixXd::Identity(m, m) - Eigen::MatrixXd(P_);
  switch (opt_.mode) {
    case FracMode::Spectral: {
      Eigen::VectorXd pw(m);
      for (int i = 0; i < m; ++i) pw[i] = std::pow(std::max(1.0 - eval_[i], 0.0), beta_);
      Eigen::MatrixXd L = evec_ * pw.asDiagonal() * evec_.transpose();
      for (int r = 0; r < m; ++r) L.row(r) *= walk_.deg_isqrt[r];
      for (int c = 0; c < m; ++c) L.col(c) *= walk_.deg_sqrt[c];
      return L;
    }
    case FracMode::Series: {
      // power chain on all columns at once
      Eigen::MatrixXd q = Eigen::MatrixXd::Identity(m, m);
      Eigen::MatrixXd acc = q;
      for (size_t k = 1; k < chat_.size(); ++k) {
        q = P_ * q;
        acc -= chat_[k] * q;
      }
      return acc;
    }
    case FracMode::Quadrature: {
      Eigen::MatrixXd L(m, m);
      for (int c = 0; c < m; ++c) L.col(c) = apply(Eigen::VectorXd::Unit(m, c));
      return L;
    }
  }
  throw std::logic_error("fractional operator: unknown mode");
}

Eigen::VectorXd FractionalOperator::row_sums() const { return apply(Eigen::VectorXd::Ones(n())); }

Eigen::VectorXd FractionalOperator::spectrum() const {
  if (opt_.mode != FracMode::Spectral)
    throw std::logic_error("fractional operator: spectrum needs spectral mode");
  Eigen::VectorXd s(n());
  for (int i = 0; i < n(); ++i) s[i] = 1.0 - eval_[n() - 1 - i];
  return s;
}

int FractionalOperator::node_count() const {
  return quad_ ? quad_->jhi - quad_->jlo + 1 + Quad::kLeftTerms + Quad::kRightTerms : 0;
}
int FractionalOperator::factor_count() const {
  return quad_ ? (int)quad_->factors.size() + 1 : 0;
}

CutoffBound cutoff_fractional_bound(const FractionalOperator& op, const CutoffFunction& cut) {
  auto vals = cutoff_values_on_graph(cut, op.graph());
  Eigen::VectorXd x(op.n());
  for (int r = 0; r < op.n(); ++r) x[r] = to_double(vals[op.walk().verts[r]]);
  Eigen::VectorXd y = op.apply(x);
  CutoffBound b;
  for (int r = 0; r < op.n(); ++r) {
    if (std::abs(y[r]) > b.max_abs) {
      b.max_abs = std::abs(y[r]);
      b.argmax_vertex = op.walk().verts[r];
    }
  }
  return b;
}

}  // namespace gasketlab
