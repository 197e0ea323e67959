#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gasketlab/fracop.hpp"

namespace gasketlab {

// Dirichlet solves for the fractional operator on a vertex subset D. Domains
// are graph vertex ids and must avoid the rim; boundary data is a vector over
// operator rows (entries on D are ignored). The rim always carries value 0 for
// a killed operator — jumps ending there die.
struct HarmonicSolution {
  std::vector<int> domain;      // graph vertex ids, sorted
  std::vector<int> rows;        // matching operator rows
  Eigen::VectorXd h;            // solution on D
  Eigen::VectorXd full;         // boundary data off D, h on D (operator rows)
  Eigen::VectorXd killed_mass;  // 1 - total harmonic measure, per start vertex
  double residual = 0.0;        // |(L full)|_inf over D, relative to data scale
  double sym_defect = 0.0;      // asymmetry of the assembled L_DD
  double cond_hat = 0.0;        // rough condition estimate of L_DD
  int refine_steps = 0;
};

HarmonicSolution harmonic_solve(const FractionalOperator& op, const std::vector<int>& domain,
                                const Eigen::VectorXd& g);

// Expected number of jumps before leaving D, per start vertex (solves L t = 1).
Eigen::VectorXd exit_time_solve(const FractionalOperator& op, const std::vector<int>& domain);

// Dense inverse of L_DD; row sums reproduce exit times.
Eigen::MatrixXd green_table(const FractionalOperator& op, const std::vector<int>& domain,
                            int cap = 3000);

// Exit distribution of the plain nearest-neighbor walk, assembled directly
// from the adjacency lists; independent reference for the beta = 1 path.
// `boundary` holds one value per graph vertex (rim included).
Eigen::VectorXd plain_walk_exit(const GasketGraph& g, const std::vector<int>& domain,
                                const std::vector<double>& boundary);

}  // namespace gasketlab
