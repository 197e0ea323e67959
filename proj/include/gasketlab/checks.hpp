#pragma once

#include <vector>

#include "gasketlab/fracop.hpp"
#include "gasketlab/geometry.hpp"
#include "gasketlab/rational.hpp"

namespace gasketlab {

// Empirical constants of the escape, interior upper bound and factorization
// estimates. Probe sets are D ∩ B(v,·) with exact open-ball membership, and
// every ratio takes its harmonic measure and exit times from the same
// operator. All three require alpha = beta·log2(5) in (0,1): the estimates
// are stated for that range only.

struct EscapeResult {
  double c_hat = 0.0;  // max over probes of P^x[exit lands outside B(v,p2)] / E^x[steps]
  int argmax_vertex = -1;
  int probes = 0;
};

// Ratios are per jump-chain step, which makes the value invariant when the
// whole configuration is dilated by 1/2 and the level raised by one (the
// homothety behind the escape estimate). Mass absorbed at the window rim
// counts as landing outside the ball, so B(v,p2) must stay clear of the rim.
EscapeResult escape_check(const FractionalOperator& op, const std::vector<int>& domain,
                          const ExactPoint& v, const Rational& p1_sq, const Rational& p2_sq);

struct UpperResult {
  double c_hat = 0.0;  // max over probes of f(x) / Lambda_{v,p3}(f)
  int argmax_vertex = -1;
  int probes = 0;
  bool degenerate = false;  // Lambda vanished (empty/unreachable target): exclude instance
};

// f is the harmonic measure of `target` (graph vertex ids), which must lie
// outside B(v,p5) and off D, so that f vanishes on D^c ∩ B(v,p5).
UpperResult upper_check(const FractionalOperator& op, const std::vector<int>& domain,
                        const std::vector<int>& target, const ExactPoint& v,
                        const Rational& p3_sq, const Rational& p5_sq);

struct FactorizationResult {
  double c_high = 0.0;  // max over probes of f(x) / (Lambda_{v,p1}(f) · E^x[time])
  double c_low = 0.0;   // min over the same probes
  int probes = 0;
  bool degenerate = false;
};

// Exit times here are calibrated: one jump at unit-relative depth k counts as
// 5^{-beta·k} time units, the rate at which subordinate jumps accelerate under
// refinement. With that (and the kernel functional in its raw scale) the
// constants are stable both across level refinement and across the joint
// dyadic dilation of (D, v, radii).
FactorizationResult factorization_check(const FractionalOperator& op,
                                        const std::vector<int>& domain,
                                        const std::vector<int>& target, const ExactPoint& v,
                                        const Rational& p1_sq, const Rational& p5_sq);

}  // namespace gasketlab
