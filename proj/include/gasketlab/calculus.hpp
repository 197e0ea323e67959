#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "gasketlab/geometry.hpp"

namespace gasketlab {

// Scale exponent of a dyadic cell: returns s with side = 2^s; throws otherwise.
int cell_side_pow(const TriCell& cell);

namespace detail {

template <class T>
T from_rational(const Rational& r);
template <>
inline Rational from_rational<Rational>(const Rational& r) {
  return r;
}
template <>
inline double from_rational<double>(const Rational& r) {
  return to_double(r);
}

template <class T>
void check_values(const GasketGraph& g, const std::vector<T>& f, const char* who) {
  if ((int)f.size() != g.n()) throw std::invalid_argument(std::string(who) + ": value count mismatch");
}

}  // namespace detail

// Polarized energy (5/3)^unit_level * sum over edges (f(u)-f(w)) (h(u)-h(w)).
template <class T>
T graph_energy2(const GasketGraph& g, const std::vector<T>& f, const std::vector<T>& h) {
  detail::check_values(g, f, "graph_energy2");
  detail::check_values(g, h, "graph_energy2");
  T acc{};
  for (const auto& c : g.cells)
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) acc += (f[c[i]] - f[c[j]]) * (h[c[i]] - h[c[j]]);
  return detail::from_rational<T>(pow_int(Rational(5, 3), g.unit_level())) * acc;
}

template <class T>
T graph_energy(const GasketGraph& g, const std::vector<T>& f) {
  return graph_energy2(g, f, f);
}

// Checked variant: the caller states which refinement level it expects.
template <class T>
T graph_energy(const GasketGraph& g, const std::vector<T>& f, int unit_level) {
  if (unit_level != g.unit_level()) throw std::invalid_argument("graph_energy: mismatched level");
  return graph_energy2(g, f, f);
}

// Energy-minimizing midpoint values for one cell; entry i sits opposite corner i.
template <class T>
std::array<T, 3> extend_cell(const std::array<T, 3>& x) {
  std::array<T, 3> m;
  for (int i = 0; i < 3; ++i) {
    int j = (i + 1) % 3, k = (i + 2) % 3;
    m[i] = (x[i] + (x[j] + x[k]) * T(2)) / T(5);
  }
  return m;
}

// Whole-graph energy-minimizing extension from `coarse` onto the once-refined `fine`.
template <class T>
std::vector<T> harmonic_extension(const GasketGraph& coarse, const std::vector<T>& f,
                                  const GasketGraph& fine) {
  detail::check_values(coarse, f, "harmonic_extension");
  if (fine.level != coarse.level + 1 || fine.side_pow != coarse.side_pow)
    throw std::invalid_argument("harmonic_extension: fine graph is not the one-step refinement");
  std::vector<T> out(fine.n(), T{});
  std::vector<char> set(fine.n(), 0);
  for (int v = 0; v < coarse.n(); ++v) {
    auto idx = fine.find_vertex(coarse.pts[v]);
    if (!idx) throw std::logic_error("harmonic_extension: coarse vertex missing from fine graph");
    out[*idx] = f[v];
    set[*idx] = 1;
  }
  for (const auto& c : coarse.cells)
    for (int i = 0; i < 3; ++i) {
      int j = (i + 1) % 3, k = (i + 2) % 3;
      auto idx = fine.find_vertex(midpoint(coarse.pts[c[j]], coarse.pts[c[k]]));
      if (!idx) throw std::logic_error("harmonic_extension: midpoint missing from fine graph");
      out[*idx] = (f[c[i]] + (f[c[j]] + f[c[k]]) * T(2)) / T(5);
      set[*idx] = 1;
    }
  for (char s : set)
    if (!s) throw std::logic_error("harmonic_extension: fine graph has uncovered vertices");
  return out;
}

// (3/2) 5^unit_level * sum over neighbors (f(w) - f(v)); v must be off the rim.
template <class T>
T discrete_laplacian(const GasketGraph& g, const std::vector<T>& f, int v) {
  detail::check_values(g, f, "discrete_laplacian");
  if (v < 0 || v >= g.n()) throw std::out_of_range("discrete_laplacian: vertex out of range");
  if (g.rim[v]) throw std::invalid_argument("discrete_laplacian: rim vertex");
  T acc{};
  for (const int* w = g.nbr_begin(v); w != g.nbr_end(v); ++w) acc += f[*w] - f[v];
  return detail::from_rational<T>(Rational(3, 2) * pow_int(Rational(5), g.unit_level())) * acc;
}

// Laplacian at every interior vertex; rim entries are zero-filled.
template <class T>
std::vector<T> laplacian_values(const GasketGraph& g, const std::vector<T>& f) {
  detail::check_values(g, f, "laplacian_values");
  std::vector<T> out(g.n(), T{});
  for (int v = 0; v < g.n(); ++v)
    if (!g.rim[v]) out[v] = discrete_laplacian(g, f, v);
  return out;
}

// Outward-derivative estimates at a cell corner: entry j is
// (5/3)^(j - cell scale) * (2 f(v) - f(u_j) - f(w_j)), with u_j, w_j the depth-j
// neighbors of the corner inside the cell. Runs as deep as the graph resolves.
template <class T>
std::vector<T> normal_derivative_sequence(const GasketGraph& g, const std::vector<T>& f,
                                          const TriCell& cell, int corner) {
  detail::check_values(g, f, "normal_derivative_sequence");
  if (corner < 0 || corner > 2) throw std::invalid_argument("normal_derivative_sequence: corner");
  int sp = cell_side_pow(cell);
  const ExactPoint& v = cell.v[corner];
  const ExactPoint& p = cell.v[(corner + 1) % 3];
  const ExactPoint& q = cell.v[(corner + 2) % 3];
  auto vid = g.find_vertex(v);
  if (!vid) throw std::invalid_argument("normal_derivative_sequence: corner not in graph");
  std::vector<T> out;
  for (int j = 0;; ++j) {
    ExactPoint u{v.a + scale_pow2(p.a - v.a, -j), v.b + scale_pow2(p.b - v.b, -j)};
    ExactPoint w{v.a + scale_pow2(q.a - v.a, -j), v.b + scale_pow2(q.b - v.b, -j)};
    auto ui = g.find_vertex(u), wi = g.find_vertex(w);
    if (!ui || !wi) break;
    T est = (f[*vid] * T(2) - f[*ui] - f[*wi]) *
            detail::from_rational<T>(pow_int(Rational(5, 3), j - sp));
    out.push_back(est);
  }
  if (out.empty()) throw std::invalid_argument("normal_derivative_sequence: cell not resolved");
  return out;
}

// Summation-by-parts defect | E(f,h) + <Lap f, h>_w - sum over rim of dS f * h |
// with every term taken at the graph's own level. Rim vertices have exactly two
// neighbors, so the boundary derivative there is (5/3)^ul (2 f(v) - f(u) - f(w)).
template <class T>
T gauss_green_residual(const GasketGraph& g, const std::vector<T>& f, const std::vector<T>& h) {
  detail::check_values(g, f, "gauss_green_residual");
  detail::check_values(g, h, "gauss_green_residual");
  T energy = graph_energy2(g, f, h);
  T inner{};
  for (int v = 0; v < g.n(); ++v)
    if (!g.rim[v]) inner += discrete_laplacian(g, f, v) * h[v] * detail::from_rational<T>(g.weight[v]);
  T bnd{};
  T pref = detail::from_rational<T>(pow_int(Rational(5, 3), g.unit_level()));
  for (int v = 0; v < g.n(); ++v)
    if (g.rim[v]) {
      T acc = f[v] * T(2);
      for (const int* w = g.nbr_begin(v); w != g.nbr_end(v); ++w) acc -= f[*w];
      bnd += pref * acc * h[v];
    }
  T r = energy + inner - bnd;
  return r < T{} ? -r : r;
}

}  // namespace gasketlab
