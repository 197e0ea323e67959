#include "gasketlab/subordination.hpp"

#include <cmath>
#include <stdexcept>

namespace gasketlab {

SubordinationWeights make_weights(double beta, int max_step) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("make_weights: beta must be in (0,1]");
  if (max_step < 1) throw std::invalid_argument("make_weights: need at least one step");
  SubordinationWeights w;
  w.beta = beta;
  w.c.assign((size_t)max_step + 1, 0.0);
  w.c[1] = beta;
  // (m+1) c_{m+1} = (m - beta) c_m
  for (int m = 1; m < max_step; ++m) w.c[m + 1] = w.c[m] * ((double)m - beta) / ((double)m + 1.0);
  double next = w.c[max_step] * ((double)max_step - beta) / ((double)max_step + 1.0);
  w.tail = ((double)max_step + 1.0) * next / beta;
  return w;
}

double weight_at(double beta, double m) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("weight_at: beta must be in (0,1]");
  if (!(m >= 1.0)) throw std::invalid_argument("weight_at: m must be >= 1");
  if (beta == 1.0) return m == 1.0 ? 1.0 : 0.0;
  return std::exp(std::log(beta) + std::lgamma(m - beta) - std::lgamma(1.0 - beta) - std::lgamma(m + 1.0));
}

double weight_asymptote(double beta) { return beta / std::tgamma(1.0 - beta); }

double stable_scaler(double alpha) {
  if (!(alpha > 0.0 && alpha < kWalkDimension)) throw std::invalid_argument("stable_scaler: alpha out of range");
  return alpha / (2.0 * std::tgamma(1.0 - alpha / kWalkDimension));
}

}  // namespace gasketlab
