#ifndef GASKETLAB_GEOMETRY_HPP
#define GASKETLAB_GEOMETRY_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gasketlab/rational.hpp"

namespace gasketlab {

// A gasket point (a, b) stands for (a, b*sqrt(3)) in the plane, so every vertex
// of every subdivision level has exact rational coordinates and the squared
// Euclidean distance (da)^2 + 3*(db)^2 is an exact rational.
struct ExactPoint {
  Rational a, b;

  bool operator==(const ExactPoint& o) const { return a == o.a && b == o.b; }
  bool operator!=(const ExactPoint& o) const { return !(*this == o); }
  // Lexicographic order; also the vertex numbering order of built graphs.
  bool operator<(const ExactPoint& o) const {
    if (a != o.a) return a < o.a;
    return b < o.b;
  }
};

ExactPoint midpoint(const ExactPoint& p, const ExactPoint& q);
Rational squared_distance(const ExactPoint& p, const ExactPoint& q);
ExactPoint dilate(const ExactPoint& p, int n);   // p * 2^n, n may be negative
ExactPoint mirror(const ExactPoint& p);          // reflect about the vertical axis
std::string point_str(const ExactPoint& p);

// An upward triangular cell, corners in fixed order (left base, right base, apex).
struct TriCell {
  std::array<ExactPoint, 3> v;
  std::array<TriCell, 3> children() const;  // child i keeps corner i, others move to midpoints
  Rational side2() const { return squared_distance(v[0], v[1]); }
};

TriCell cell_fplus();   // corners (0,0), (1,0), (1/2, 1/2): the unit cell at the origin
TriCell cell_fminus();  // its mirror image

// Exact closed-triangle membership. For lattice points this is also gasket
// membership of the cell's own subdivision, since distinct cells of one scale
// meet only at corners.
bool cell_contains(const TriCell& c, const ExactPoint& p);

// A finite union of same-size upward cells of the infinite gasket. Presets cover
// the unit cell, the two-cell set around the origin, and its dyadic dilations.
struct Window {
  int dilation_pow = 0;          // w such that the window sits inside 2^w (F+ u F-)
  std::vector<TriCell> cells0;   // the 0-cells (side 1), deterministic order
};

Window window_fplus();
Window window_b();                 // F+ and F-, meeting at the origin
Window window_dilated(int w);      // all unit cells of 2^w (F+ u F-): 2*3^w of them
Window window_subset(const Window& base, const std::vector<int>& which);

// Level-k subdivision graph of a window. Vertices are numbered in lexicographic
// coordinate order; adjacency lists are sorted; rim vertices are the window
// truncation boundary (degree 2; interior vertices always have degree 4).
struct GasketGraph {
  int level = 0;        // subdivision depth below the 0-cells
  int side_pow = 0;     // log2 of 0-cell side (nonzero only for dilated graphs)
  std::vector<ExactPoint> pts;
  std::vector<std::array<int, 3>> cells;  // vertex ids, ascending within each cell
  std::vector<int> nbr_off, nbr;          // CSR adjacency
  std::vector<char> rim;
  std::vector<Rational> weight;           // quadrature weight: 3^(side_pow-level-1) * #incident cells

  int n() const { return (int)pts.size(); }
  int degree(int v) const { return nbr_off[v + 1] - nbr_off[v]; }
  const int* nbr_begin(int v) const { return nbr.data() + nbr_off[v]; }
  const int* nbr_end(int v) const { return nbr.data() + nbr_off[v + 1]; }
  // Effective depth relative to unit scale; energy and Laplacian renormalizations use this.
  int unit_level() const { return level - side_pow; }

  std::optional<int> find_vertex(const ExactPoint& p) const;  // binary search on pts
};

GasketGraph build_graph(const Window& win, int level);
GasketGraph dilate_graph(const GasketGraph& g, int n);  // coords *2^n, weights *3^n

// Exact ball membership around a center (squared radius given as a rational).
std::vector<int> ball_vertices(const GasketGraph& g, const ExactPoint& center,
                               const Rational& r2, bool closed = false);

// Versioned text dump; load rejects unknown versions and re-derives adjacency,
// failing if the stored weights disagree with the reconstruction.
void save_graph(const GasketGraph& g, std::ostream& os);
GasketGraph load_graph(std::istream& is);
void save_graph_file(const GasketGraph& g, const std::string& path);
GasketGraph load_graph_file(const std::string& path);

// Vertex/cell counting laws for a single 0-cell at level k.
inline long long cells_per_unit(int k) {
  long long c = 1;
  for (int i = 0; i < k; ++i) c *= 3;
  return c;
}
inline long long vertices_per_unit(int k) { return (3 * cells_per_unit(k) + 3) / 2; }

// Mirror image vertex ids: perm[v] = id of reflected vertex, if the window is
// symmetric about the vertical axis (throws otherwise).
std::vector<int> mirror_permutation(const GasketGraph& g);

// Cell of a graph as a TriCell in canonical (left base, right base, apex) order;
// perm[i] gives the position of g.cells[idx][i] within the returned corners.
TriCell cell_from_graph(const GasketGraph& g, int idx, std::array<int, 3>* perm = nullptr);

}  // namespace gasketlab

#endif
