#include "gasketlab/geometry.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gasketlab {

ExactPoint midpoint(const ExactPoint& p, const ExactPoint& q) {
  return {(p.a + q.a) / 2, (p.b + q.b) / 2};
}

Rational squared_distance(const ExactPoint& p, const ExactPoint& q) {
  Rational da = p.a - q.a, db = p.b - q.b;
  return da * da + 3 * db * db;
}

ExactPoint dilate(const ExactPoint& p, int n) {
  return {scale_pow2(p.a, n), scale_pow2(p.b, n)};
}

ExactPoint mirror(const ExactPoint& p) { return {-p.a, p.b}; }

std::string point_str(const ExactPoint& p) {
  return "(" + rat_str(p.a) + ", " + rat_str(p.b) + ")";
}

std::array<TriCell, 3> TriCell::children() const {
  ExactPoint m01 = midpoint(v[0], v[1]), m02 = midpoint(v[0], v[2]), m12 = midpoint(v[1], v[2]);
  return {TriCell{{v[0], m01, m02}}, TriCell{{m01, v[1], m12}}, TriCell{{m02, m12, v[2]}}};
}

TriCell cell_fplus() {
  return TriCell{{ExactPoint{0, 0}, ExactPoint{1, 0}, ExactPoint{Rational(1, 2), Rational(1, 2)}}};
}

TriCell cell_fminus() {
  return TriCell{{ExactPoint{-1, 0}, ExactPoint{0, 0}, ExactPoint{Rational(-1, 2), Rational(1, 2)}}};
}

Window window_fplus() { return Window{0, {cell_fplus()}}; }

Window window_b() { return Window{0, {cell_fminus(), cell_fplus()}}; }

namespace {

// Unit cells of a side-2^w triangle, by recursive halving.
void collect_unit_cells(const TriCell& c, int w, std::vector<TriCell>& out) {
  if (w == 0) {
    out.push_back(c);
    return;
  }
  for (const TriCell& ch : c.children()) collect_unit_cells(ch, w - 1, out);
}

TriCell dilate_cell(const TriCell& c, int n) {
  return TriCell{{dilate(c.v[0], n), dilate(c.v[1], n), dilate(c.v[2], n)}};
}

}  // namespace

Window window_dilated(int w) {
  if (w < 0) throw std::invalid_argument("window_dilated: negative dilation");
  Window win;
  win.dilation_pow = w;
  collect_unit_cells(dilate_cell(cell_fminus(), w), w, win.cells0);
  collect_unit_cells(dilate_cell(cell_fplus(), w), w, win.cells0);
  return win;
}

Window window_subset(const Window& base, const std::vector<int>& which) {
  Window win;
  win.dilation_pow = base.dilation_pow;
  for (int i : which) {
    if (i < 0 || i >= (int)base.cells0.size())
      throw std::out_of_range("window_subset: cell index out of range");
    win.cells0.push_back(base.cells0[i]);
  }
  if (win.cells0.empty()) throw std::invalid_argument("window_subset: empty window");
  return win;
}

GasketGraph build_graph(const Window& win, int level) {
  if (win.cells0.empty()) throw std::invalid_argument("build_graph: empty window");
  if (level < 0 || level > 12) throw std::invalid_argument("build_graph: level out of range");

  // Enumerate level-k cells of every 0-cell, deduplicating shared vertices.
  std::vector<TriCell> stack, kcells;
  kcells.reserve(win.cells0.size() * (size_t)cells_per_unit(level));
  for (const TriCell& c0 : win.cells0) {
    stack.push_back(c0);
    std::vector<int> depth{0};
    while (!stack.empty()) {
      TriCell c = stack.back();
      stack.pop_back();
      int d = depth.back();
      depth.pop_back();
      if (d == level) {
        kcells.push_back(c);
        continue;
      }
      auto ch = c.children();
      for (int i = 2; i >= 0; --i) {
        stack.push_back(ch[i]);
        depth.push_back(d + 1);
      }
    }
  }

  std::map<ExactPoint, int> index;
  for (const TriCell& c : kcells)
    for (const ExactPoint& p : c.v) index.emplace(p, 0);
  int id = 0;
  for (auto& kv : index) kv.second = id++;

  GasketGraph g;
  g.level = level;
  g.side_pow = 0;
  g.pts.reserve(index.size());
  for (const auto& kv : index) g.pts.push_back(kv.first);

  g.cells.reserve(kcells.size());
  for (const TriCell& c : kcells) {
    std::array<int, 3> t{index.at(c.v[0]), index.at(c.v[1]), index.at(c.v[2])};
    std::sort(t.begin(), t.end());
    g.cells.push_back(t);
  }
  std::sort(g.cells.begin(), g.cells.end());

  // Adjacency from cell edges (an edge is never shared between two cells).
  int n = g.n();
  std::vector<int> deg(n, 0);
  for (const auto& c : g.cells)
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        ++deg[c[i]];
        ++deg[c[j]];
      }
  g.nbr_off.assign(n + 1, 0);
  for (int v = 0; v < n; ++v) g.nbr_off[v + 1] = g.nbr_off[v] + deg[v];
  g.nbr.assign(g.nbr_off[n], -1);
  std::vector<int> fill(g.nbr_off.begin(), g.nbr_off.end() - 1);
  for (const auto& c : g.cells)
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        g.nbr[fill[c[i]]++] = c[j];
        g.nbr[fill[c[j]]++] = c[i];
      }
  for (int v = 0; v < n; ++v) std::sort(g.nbr.begin() + g.nbr_off[v], g.nbr.begin() + g.nbr_off[v + 1]);

  g.rim.assign(n, 0);
  g.weight.assign(n, Rational(0));
  Rational unit = pow_int(Rational(1, 3), level + 1);
  for (int v = 0; v < n; ++v) {
    int d = g.degree(v);
    if (d != 2 && d != 4) throw std::logic_error("build_graph: vertex degree must be 2 or 4");
    g.rim[v] = (d == 2);
    g.weight[v] = unit * (d / 2);  // #incident cells = degree/2
  }

  // Disconnected windows make every downstream solve ill-posed; reject them here.
  std::vector<char> seen(n, 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  size_t head = 0, reached = 1;
  while (head < queue.size()) {
    int v = queue[head++];
    for (const int* w = g.nbr_begin(v); w != g.nbr_end(v); ++w)
      if (!seen[*w]) {
        seen[*w] = 1;
        ++reached;
        queue.push_back(*w);
      }
  }
  if ((int)reached != n) throw std::invalid_argument("build_graph: window is disconnected");
  return g;
}

GasketGraph dilate_graph(const GasketGraph& g, int n) {
  GasketGraph out = g;
  out.side_pow = g.side_pow + n;
  for (auto& p : out.pts) p = dilate(p, n);
  Rational f = pow_int(Rational(3), n);
  for (auto& w : out.weight) w *= f;
  return out;
}

std::optional<int> GasketGraph::find_vertex(const ExactPoint& p) const {
  auto it = std::lower_bound(pts.begin(), pts.end(), p);
  if (it != pts.end() && *it == p) return (int)(it - pts.begin());
  return std::nullopt;
}

std::vector<int> ball_vertices(const GasketGraph& g, const ExactPoint& center,
                               const Rational& r2, bool closed) {
  std::vector<int> out;
  for (int v = 0; v < g.n(); ++v) {
    Rational d2 = squared_distance(g.pts[v], center);
    if (d2 < r2 || (closed && d2 == r2)) out.push_back(v);
  }
  return out;
}

void save_graph(const GasketGraph& g, std::ostream& os) {
  os << "gasketlab-graph 1\n";
  os << "level " << g.level << " side_pow " << g.side_pow << "\n";
  os << "vertices " << g.n() << "\n";
  for (int v = 0; v < g.n(); ++v)
    os << rat_str(g.pts[v].a) << " " << rat_str(g.pts[v].b) << " " << int(g.rim[v]) << " "
       << rat_str(g.weight[v]) << "\n";
  os << "cells " << g.cells.size() << "\n";
  for (const auto& c : g.cells) os << c[0] << " " << c[1] << " " << c[2] << "\n";
}

GasketGraph load_graph(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "gasketlab-graph" || version != 1)
    throw std::runtime_error("load_graph: unrecognized format/version");
  std::string key;
  GasketGraph g;
  int n = 0;
  is >> key >> g.level;
  if (key != "level") throw std::runtime_error("load_graph: expected 'level'");
  is >> key >> g.side_pow;
  if (key != "side_pow") throw std::runtime_error("load_graph: expected 'side_pow'");
  is >> key >> n;
  if (key != "vertices" || n <= 0) throw std::runtime_error("load_graph: bad vertex count");
  g.pts.resize(n);
  std::vector<char> rim_in(n);
  std::vector<Rational> w_in(n);
  for (int v = 0; v < n; ++v) {
    std::string a, b, w;
    int r;
    is >> a >> b >> r >> w;
    g.pts[v] = {rat_parse(a), rat_parse(b)};
    rim_in[v] = (char)r;
    w_in[v] = rat_parse(w);
  }
  size_t m = 0;
  is >> key >> m;
  if (key != "cells") throw std::runtime_error("load_graph: bad cell count");
  g.cells.resize(m);
  for (auto& c : g.cells) {
    is >> c[0] >> c[1] >> c[2];
    for (int x : c)
      if (x < 0 || x >= n) throw std::runtime_error("load_graph: cell vertex out of range");
  }
  if (!is) throw std::runtime_error("load_graph: truncated file");

  // Re-derive adjacency, rim and weights; the stored copies must agree.
  std::vector<int> deg(n, 0);
  for (const auto& c : g.cells)
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        ++deg[c[i]];
        ++deg[c[j]];
      }
  g.nbr_off.assign(n + 1, 0);
  for (int v = 0; v < n; ++v) g.nbr_off[v + 1] = g.nbr_off[v] + deg[v];
  g.nbr.assign(g.nbr_off[n], -1);
  std::vector<int> fill(g.nbr_off.begin(), g.nbr_off.end() - 1);
  for (const auto& c : g.cells)
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        g.nbr[fill[c[i]]++] = c[j];
        g.nbr[fill[c[j]]++] = c[i];
      }
  for (int v = 0; v < n; ++v) std::sort(g.nbr.begin() + g.nbr_off[v], g.nbr.begin() + g.nbr_off[v + 1]);
  g.rim.assign(n, 0);
  g.weight.assign(n, Rational(0));
  Rational unit = pow_int(Rational(1, 3), g.level + 1) * pow_int(Rational(3), g.side_pow);
  for (int v = 0; v < n; ++v) {
    int d = g.degree(v);
    if (d != 2 && d != 4) throw std::runtime_error("load_graph: inconsistent cell list");
    g.rim[v] = (d == 2);
    g.weight[v] = unit * (d / 2);
    if (g.rim[v] != rim_in[v]) throw std::runtime_error("load_graph: stored rim flag disagrees");
    if (g.weight[v] != w_in[v]) throw std::runtime_error("load_graph: stored weight disagrees");
  }
  return g;
}

void save_graph_file(const GasketGraph& g, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_graph_file: cannot open " + path);
  save_graph(g, os);
}

GasketGraph load_graph_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_graph_file: cannot open " + path);
  return load_graph(is);
}

bool cell_contains(const TriCell& c, const ExactPoint& p) {
  // Upward cell with corners (x,y), (x+s,y), (x+s/2,y+s/2): below both slanted
  // edges and above the base. The apex bound follows from the two edges.
  const ExactPoint& lo = c.v[0];
  Rational rise = p.b - lo.b;
  if (rise < 0) return false;
  if (p.a - lo.a < rise) return false;
  if (c.v[1].a - p.a < rise) return false;
  return true;
}

TriCell cell_from_graph(const GasketGraph& g, int idx, std::array<int, 3>* perm) {
  if (idx < 0 || idx >= (int)g.cells.size()) throw std::out_of_range("cell_from_graph: index");
  const auto& c = g.cells[idx];
  // Ids are lexicographic in (a, b), so the stored order is (left, apex, right).
  TriCell cell{{g.pts[c[0]], g.pts[c[2]], g.pts[c[1]]}};
  if (!(cell.v[0].b == cell.v[1].b && cell.v[2].b > cell.v[0].b && cell.v[0].a < cell.v[1].a))
    throw std::logic_error("cell_from_graph: unexpected corner arrangement");
  if (perm) *perm = {0, 2, 1};
  return cell;
}

std::vector<int> mirror_permutation(const GasketGraph& g) {
  std::vector<int> perm(g.n(), -1);
  for (int v = 0; v < g.n(); ++v) {
    auto m = g.find_vertex(mirror(g.pts[v]));
    if (!m) throw std::runtime_error("mirror_permutation: window is not mirror symmetric");
    perm[v] = *m;
  }
  return perm;
}

}  // namespace gasketlab
