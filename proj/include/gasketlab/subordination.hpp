#pragma once

#include <vector>

namespace gasketlab {

// Hausdorff and walk dimensions of the gasket: log2(3) and log2(5).
inline constexpr double kDimension = 1.5849625007211562;
inline constexpr double kWalkDimension = 2.321928094887362;

// One-step distribution of the discrete beta-stable subordinator:
// c_m = beta * Gamma(m - beta) / (Gamma(1 - beta) * Gamma(m + 1)), m >= 1.
// These are the coefficients of 1 - (1-z)^beta, so sum_m c_m = 1; the partial
// sums have the exact remainder  1 - sum_{m<=M} c_m = (M+1) c_{M+1} / beta.
struct SubordinationWeights {
  double beta = 0.0;
  std::vector<double> c;  // c[m] for m = 1..M; c[0] unused and zero
  double tail = 0.0;      // exact remainder beyond M
  int max_step() const { return (int)c.size() - 1; }
};

SubordinationWeights make_weights(double beta, int max_step);

// Single weight c_m through log-gamma, stable for large m.
double weight_at(double beta, double m);

// Limit of c_m * m^{1+beta}: beta / Gamma(1-beta).
double weight_asymptote(double beta);

// Jump-kernel normalization used for the stable process on the gasket:
// alpha / (2 * Gamma(1 - alpha/d_w)).  Differs from the subordinator-side
// constant beta / Gamma(1-beta) by the fixed factor d_w / 2.
double stable_scaler(double alpha);

}  // namespace gasketlab
