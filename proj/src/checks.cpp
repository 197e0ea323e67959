#include "gasketlab/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gasketlab/lambda.hpp"
#include "gasketlab/solver.hpp"
#include "gasketlab/subordination.hpp"

namespace gasketlab {

namespace {

double require_alpha(const FractionalOperator& op, const char* who) {
  const double alpha = op.beta() * kWalkDimension;
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument(std::string(who) +
                                ": needs alpha = beta*log2(5) in (0,1); the escape and "
                                "factorization estimates assume that range");
  return alpha;
}

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// D ∩ B(v, r) with exact open-ball membership.
std::vector<int> probe_set(const GasketGraph& g, const std::vector<int>& domain_sorted,
                           const ExactPoint& v, const Rational& r_sq) {
  std::vector<int> ball = ball_vertices(g, v, r_sq);
  std::vector<int> out;
  std::set_intersection(domain_sorted.begin(), domain_sorted.end(), ball.begin(), ball.end(),
                        std::back_inserter(out));
  return out;
}

void require_ball_clear_of_rim(const GasketGraph& g, const ExactPoint& v, const Rational& r_sq,
                               const char* who) {
  for (int i = 0; i < g.n(); ++i)
    if (g.rim[i] && squared_distance(g.pts[i], v) < r_sq)
      throw std::invalid_argument(std::string(who) +
                                  ": B(v,p2) reaches the absorbing rim; enlarge the window");
}

int row_index_of(const std::vector<int>& domain_sorted, int vertex) {
  auto it = std::lower_bound(domain_sorted.begin(), domain_sorted.end(), vertex);
  return (int)(it - domain_sorted.begin());
}

// Harmonic measure of the target set, spread back over graph vertices
// (vertices outside the operator, i.e. the killed rim, stay at zero).
std::vector<double> target_measure(const FractionalOperator& op, const std::vector<int>& domain_sorted,
                                   const std::vector<int>& target, const ExactPoint& v,
                                   const Rational& p5_sq, const char* who,
                                   HarmonicSolution* sol_out) {
  const GasketGraph& g = op.graph();
  const WalkOperator& w = op.walk();
  Eigen::VectorXd gdat = Eigen::VectorXd::Zero(op.n());
  for (int t : target) {
    if (t < 0 || t >= g.n() || w.row_of[t] < 0)
      throw std::invalid_argument(std::string(who) + ": target vertex missing or absorbing");
    if (std::binary_search(domain_sorted.begin(), domain_sorted.end(), t))
      throw std::invalid_argument(std::string(who) + ": target vertex lies in D");
    if (squared_distance(g.pts[t], v) < p5_sq)
      throw std::invalid_argument(std::string(who) + ": target vertex inside B(v,p5)");
    gdat[w.row_of[t]] = 1.0;
  }
  *sol_out = harmonic_solve(op, domain_sorted, gdat);
  std::vector<double> f(g.n(), 0.0);
  for (int r = 0; r < op.n(); ++r) f[w.verts[r]] = std::max(0.0, sol_out->full[r]);
  return f;
}

}  // namespace

EscapeResult escape_check(const FractionalOperator& op, const std::vector<int>& domain,
                          const ExactPoint& v, const Rational& p1_sq, const Rational& p2_sq) {
  require_alpha(op, "escape_check");
  if (!(p1_sq > 0) || !(p2_sq > p1_sq))
    throw std::invalid_argument("escape_check: need 0 < p1 < p2");
  const GasketGraph& g = op.graph();
  std::vector<int> dom = sorted_unique(domain);
  for (int u : dom)
    if (!(squared_distance(g.pts[u], v) < p2_sq))
      throw std::invalid_argument("escape_check: D is not contained in B(v,p2)");
  require_ball_clear_of_rim(g, v, p2_sq, "escape_check");
  std::vector<int> probes = probe_set(g, dom, v, p1_sq);
  if (probes.empty()) throw std::invalid_argument("escape_check: D ∩ B(v,p1) is empty");

  const WalkOperator& w = op.walk();
  Eigen::VectorXd gdat = Eigen::VectorXd::Zero(op.n());
  for (int r = 0; r < op.n(); ++r)
    if (!(squared_distance(g.pts[w.verts[r]], v) < p2_sq)) gdat[r] = 1.0;
  HarmonicSolution sol = harmonic_solve(op, dom, gdat);
  Eigen::VectorXd steps = exit_time_solve(op, dom);

  EscapeResult out;
  out.probes = (int)probes.size();
  for (int x : probes) {
    const int i = row_index_of(sol.domain, x);
    const double num = sol.h[i] + sol.killed_mass[i];
    const double ratio = num / steps[i];
    if (ratio > out.c_hat) {
      out.c_hat = ratio;
      out.argmax_vertex = x;
    }
  }
  return out;
}

UpperResult upper_check(const FractionalOperator& op, const std::vector<int>& domain,
                        const std::vector<int>& target, const ExactPoint& v,
                        const Rational& p3_sq, const Rational& p5_sq) {
  const double alpha = require_alpha(op, "upper_check");
  if (!(p3_sq > 0) || !(p5_sq > p3_sq))
    throw std::invalid_argument("upper_check: need 0 < p3 < p5");
  const GasketGraph& g = op.graph();
  std::vector<int> dom = sorted_unique(domain);
  std::vector<int> probes = probe_set(g, dom, v, p3_sq);
  if (probes.empty()) throw std::invalid_argument("upper_check: D ∩ B(v,p3) is empty");

  HarmonicSolution sol;
  std::vector<double> f = target_measure(op, dom, target, v, p5_sq, "upper_check", &sol);
  const double lam = lambda_functional(g, v, p3_sq, f, alpha).value();

  UpperResult out;
  out.probes = (int)probes.size();
  if (!(lam > 0.0)) {
    out.degenerate = true;
    out.c_hat = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  for (int x : probes) {
    const double ratio = sol.h[row_index_of(sol.domain, x)] / lam;
    if (ratio > out.c_hat) {
      out.c_hat = ratio;
      out.argmax_vertex = x;
    }
  }
  return out;
}

FactorizationResult factorization_check(const FractionalOperator& op,
                                        const std::vector<int>& domain,
                                        const std::vector<int>& target, const ExactPoint& v,
                                        const Rational& p1_sq, const Rational& p5_sq) {
  const double alpha = require_alpha(op, "factorization_check");
  if (!(p1_sq > 0) || !(p5_sq > p1_sq))
    throw std::invalid_argument("factorization_check: need 0 < p1 < p5");
  const GasketGraph& g = op.graph();
  std::vector<int> dom = sorted_unique(domain);
  std::vector<int> probes = probe_set(g, dom, v, p1_sq);
  if (probes.empty()) throw std::invalid_argument("factorization_check: D ∩ B(v,p1) is empty");

  HarmonicSolution sol;
  std::vector<double> f = target_measure(op, dom, target, v, p5_sq, "factorization_check", &sol);
  const double lam = lambda_functional(g, v, p1_sq, f, alpha).value();

  FactorizationResult out;
  out.probes = (int)probes.size();
  if (!(lam > 0.0)) {
    out.degenerate = true;
    out.c_high = out.c_low = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  Eigen::VectorXd steps = exit_time_solve(op, dom);
  const double time_unit = std::pow(5.0, -op.beta() * g.unit_level());
  out.c_low = std::numeric_limits<double>::infinity();
  for (int x : probes) {
    const int i = row_index_of(sol.domain, x);
    const double ratio = sol.h[i] / (lam * steps[i] * time_unit);
    out.c_high = std::max(out.c_high, ratio);
    out.c_low = std::min(out.c_low, ratio);
  }
  return out;
}

}  // namespace gasketlab
