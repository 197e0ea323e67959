#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gasketlab/geometry.hpp"

namespace gasketlab {

// Deterministic per-stream seeds: every path (or batch) gets its own stream,
// so results do not depend on scheduling or path order.
struct SeedPlan {
  std::uint64_t master = 0;
  std::uint64_t stream(std::uint64_t index) const;
};

// Samples the subordination step count: P(m) = c_m for m >= 1. The prefix is
// tabulated for inverse-CDF lookup; the tail uses a Pareto-shaped envelope
//   g_m = s^beta ((m-1/2)^{-beta} - (m+1/2)^{-beta}),  s = prefix + 1/2,
// which telescopes to total mass 1 over m > prefix and dominates c_m/tail up
// to a constant that tends to 1, so rejection is cheap.
class StepCountSampler {
 public:
  explicit StepCountSampler(double beta, int prefix = 1 << 16);

  long long draw(std::mt19937_64& rng) const;
  double prob(long long m) const;  // c_m, closed form beyond the prefix
  double beta() const { return beta_; }
  int prefix() const { return prefix_; }
  double tail_mass() const { return tail_; }
  double envelope_bound() const { return kbound_; }  // rejection constant

 private:
  double beta_ = 1.0;
  int prefix_ = 0;
  std::vector<double> cum_;  // cum_[m] = P(step <= m), m = 0..prefix
  double tail_ = 0.0;        // P(step > prefix), exact remainder
  double s_ = 0.0;
  double kbound_ = 1.0;
};

// Exit statistics of the subordinate killed walk from a vertex set D.
// Exits are observed at jump landings only; a base-walk absorption at the
// window rim in mid-jump kills the path ("died"). target_of maps each graph
// vertex to a target bin (or -1 for "other exits").
struct HarmonicMC {
  std::vector<long long> hits;  // per target bin
  long long other = 0;          // exits landing outside every bin
  long long died = 0;           // absorbed at the rim mid-jump
  long long aborted = 0;        // paths that hit the base-step cap
  long long paths = 0;
  long long total_jumps = 0;    // over completed (non-aborted) paths
  double jump_sq_sum = 0.0;     // for the variance of the jump count

  double mean_jumps() const;
  double stderr_jumps() const;
};

HarmonicMC mc_harmonic_measure(const GasketGraph& g, const std::vector<int>& domain,
                               const std::vector<int>& target_of, int n_bins, int start,
                               double beta, long long n_paths, const SeedPlan& seeds,
                               long long step_cap = 100000000);

// Least-squares slope of log2(mean count) against log2(radius) over a family
// of concentric balls: the walk-dimension fit (plain walk, base steps) and the
// stability-index fit (subordinate walk, jump counts).
struct ScalingFit {
  std::vector<double> log2_r;
  std::vector<double> log2_mean;
  double slope = 0.0;
};

ScalingFit mc_walk_dimension_fit(const GasketGraph& g, const ExactPoint& center,
                                 const std::vector<Rational>& radii_sq, long long n_paths,
                                 const SeedPlan& seeds);

ScalingFit mc_stability_fit(const GasketGraph& g, const ExactPoint& center,
                            const std::vector<Rational>& radii_sq, double beta,
                            long long n_paths, const SeedPlan& seeds,
                            long long step_cap = 100000000);

// One-sided stable variate with Laplace transform exp(-s^beta), drawn by
// Kanter's ratio representation.
double kanter_stable(double beta, std::mt19937_64& rng);

// Empirical Laplace transform of the sampler at a given argument.
struct LaplaceCheck {
  double mean = 0.0;
  double stderr_mean = 0.0;
  double expected = 0.0;  // exp(-s^beta)
};
LaplaceCheck mc_laplace_check(double beta, double s, long long n_samples, const SeedPlan& seeds);

// Pearson chi-square of observed step counts against the exact weights on
// bins {1, ..., bins, >bins}; returns the statistic (dof = bins).
double step_count_chi2(const StepCountSampler& sampler, long long n_samples,
                       const SeedPlan& seeds, int bins = 64);

}  // namespace gasketlab
