#include "gasketlab/harness.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gasketlab/checks.hpp"
#include "gasketlab/fracop.hpp"
#include "gasketlab/lambda.hpp"
#include "gasketlab/solver.hpp"
#include "gasketlab/subordination.hpp"
#include "gasketlab/walk.hpp"

namespace gasketlab {

namespace {

// deterministic open-interval uniform, same construction as the MC module
inline double unit_open(std::mt19937_64& rng) { return ((rng() >> 11) + 0.5) * 0x1.0p-53; }

const ExactPoint kOrigin{Rational(0), Rational(0)};

int mask_depth(const SubsetGenerator& gen) {
  return gen.kind == SubsetGenerator::Kind::Slit ? gen.slit_level : gen.cell_level;
}

bool excluded_row(unsigned flags) { return (flags & ~kFlagWideAlpha) != 0u; }

std::string cell_key(const TriCell& c) {
  std::array<ExactPoint, 3> v = c.v;
  std::sort(v.begin(), v.end());
  return point_str(v[0]) + ";" + point_str(v[1]) + ";" + point_str(v[2]);
}

// index of the mirror image of each cell in the list (cells come in mirror pairs)
std::vector<int> mirror_cells(const std::vector<TriCell>& cells) {
  std::map<std::string, int> where;
  for (size_t i = 0; i < cells.size(); ++i) where[cell_key(cells[i])] = (int)i;
  std::vector<int> partner(cells.size(), -1);
  for (size_t i = 0; i < cells.size(); ++i) {
    TriCell m{{mirror(cells[i].v[1]), mirror(cells[i].v[0]), mirror(cells[i].v[2])}};
    auto it = where.find(cell_key(m));
    if (it == where.end()) throw std::logic_error("mirror_cells: cell family is not symmetric");
    partner[i] = it->second;
  }
  return partner;
}

std::vector<int> intersect_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void check_alpha_grid(const std::vector<double>& alphas, bool allow_wide) {
  if (alphas.empty()) throw std::invalid_argument("config: the alpha grid is empty");
  for (double a : alphas) {
    if (!(a > 0.0) || !(a < kWalkDimension)) {
      std::ostringstream os;
      os << "config: alpha = " << a << " is outside (0, log2 5 = " << kWalkDimension
         << "); no subordinate walk with that index exists on the gasket";
      throw std::invalid_argument(os.str());
    }
    if (a >= 1.0 && !allow_wide) {
      std::ostringstream os;
      os << "config: alpha = " << a
         << " lies outside (0,1), where the boundary ratio battery is stated; set "
            "allow_wide_alpha = true to run it as an exploratory row";
      throw std::invalid_argument(os.str());
    }
  }
}

void finalize_alpha(BhiAlphaReport& ar) {
  std::vector<double> rs;
  for (const BhiInstance& row : ar.rows) {
    if (excluded_row(row.flags)) {
      ++ar.excluded;
      continue;
    }
    rs.push_back(row.R);
  }
  if (rs.empty()) return;
  std::sort(rs.begin(), rs.end());
  ar.max_R = rs.back();
  ar.median_R = rs[(rs.size() - 1) / 2];
  ar.q90_R = rs[(9 * (rs.size() - 1)) / 10];
}

}  // namespace

// ---------------------------------------------------------------------------
// geometry

BhiGeometry make_bhi_geometry(int level, int ambient_pow) {
  if (level < 1 || level > 9)
    throw std::invalid_argument("bhi geometry: level must be in [1, 9]");
  if (ambient_pow < 1 || ambient_pow > 3)
    throw std::invalid_argument(
        "bhi geometry: ambient_pow must be in [1, 3] (the far targets need room outside B)");
  BhiGeometry geo;
  geo.level = level;
  geo.ambient_pow = ambient_pow;
  geo.graph = build_graph(window_dilated(ambient_pow), level);
  const GasketGraph& g = geo.graph;

  const TriCell fp = cell_fplus(), fm = cell_fminus();
  geo.b_index.assign(g.n(), -1);
  for (int v = 0; v < g.n(); ++v) {
    if (cell_contains(fp, g.pts[v]) || cell_contains(fm, g.pts[v])) {
      if (g.rim[v]) throw std::logic_error("bhi geometry: a B vertex fell on the ambient rim");
      geo.b_index[v] = (int)geo.bverts.size();
      geo.bverts.push_back(v);
    }
  }
  const int nb = (int)geo.bverts.size();

  geo.col_slot.assign(nb, -1);
  geo.cols = 0;
  for (int i = 0; i < nb; ++i)
    if (g.pts[geo.bverts[i]].a >= 0) geo.col_slot[i] = geo.cols++;

  std::vector<int> mp = mirror_permutation(g);
  geo.mirror_b.resize(nb);
  for (int i = 0; i < nb; ++i) {
    int mi = geo.b_index[mp[geo.bverts[i]]];
    if (mi < 0) throw std::logic_error("bhi geometry: B is not mirror-closed");
    geo.mirror_b[i] = mi;
  }

  geo.corner_b.assign(nb, 0);
  const ExactPoint corners[4] = {{Rational(1), Rational(0)},
                                 {Rational(-1), Rational(0)},
                                 {Rational(1, 2), Rational(1, 2)},
                                 {Rational(-1, 2), Rational(1, 2)}};
  for (const ExactPoint& p : corners) {
    auto id = g.find_vertex(p);
    if (!id || geo.b_index[*id] < 0) throw std::logic_error("bhi geometry: missing B corner");
    geo.corner_b[geo.b_index[*id]] = 1;
  }

  // B' = the two half-size cells meeting at the origin
  TriCell bp = fp.children()[0], bm = fm.children()[1];
  if (!cell_contains(bp, kOrigin) || !cell_contains(bm, kOrigin))
    throw std::logic_error("bhi geometry: B' cells misplaced");
  geo.eval_b.assign(nb, 0);
  for (int i = 0; i < nb; ++i) {
    const ExactPoint& p = g.pts[geo.bverts[i]];
    if (cell_contains(bp, p) || cell_contains(bm, p)) geo.eval_b[i] = 1;
  }

  // far targets: the unit cell to the right of F+, minus the shared corner and
  // anything on the ambient rim; E2 is its mirror image
  const TriCell e1cell{{ExactPoint{Rational(1), Rational(0)}, ExactPoint{Rational(2), Rational(0)},
                        ExactPoint{Rational(3, 2), Rational(1, 2)}}};
  for (int v = 0; v < g.n(); ++v) {
    if (!cell_contains(e1cell, g.pts[v])) continue;
    if (geo.b_index[v] >= 0 || g.rim[v]) continue;
    geo.e1.push_back(v);
  }
  if (geo.e1.empty()) throw std::logic_error("bhi geometry: empty far target");
  for (int v : geo.e1) geo.e2.push_back(mp[v]);
  std::sort(geo.e2.begin(), geo.e2.end());
  return geo;
}

std::vector<TriCell> pair_cells(int depth) {
  if (depth < 0 || depth > 12) throw std::invalid_argument("pair_cells: depth must be in [0, 12]");
  std::vector<TriCell> cells{cell_fplus(), cell_fminus()};
  for (int d = 0; d < depth; ++d) {
    std::vector<TriCell> next;
    next.reserve(cells.size() * 3);
    for (const TriCell& c : cells) {
      auto ch = c.children();
      next.insert(next.end(), ch.begin(), ch.end());
    }
    cells.swap(next);
  }
  return cells;
}

std::vector<char> draw_cells(const SubsetGenerator& gen, int instance, const SeedPlan& plan) {
  if (instance < 0) throw std::invalid_argument("draw_cells: negative instance");
  if (gen.kind == SubsetGenerator::Kind::VertexSubset)
    throw std::invalid_argument("draw_cells: vertex-subset instances have no cell mask");

  std::vector<char> chosen;
  std::vector<TriCell> cells;
  if (gen.kind == SubsetGenerator::Kind::CellUnion) {
    if (!(gen.density >= 0.0 && gen.density <= 1.0))
      throw std::invalid_argument("config: density must lie in [0, 1]");
    cells = pair_cells(gen.cell_level);
    chosen.assign(cells.size(), 0);
    std::mt19937_64 rng(plan.stream((std::uint64_t)instance));
    for (size_t i = 0; i < cells.size(); ++i) {
      double u = unit_open(rng);  // one draw per cell, forced or not, to keep alignment
      chosen[i] = (cell_contains(cells[i], kOrigin) || u < gen.density) ? 1 : 0;
    }
  } else {  // Slit
    if (gen.slit_level < 1 || gen.slit_level > 12)
      throw std::invalid_argument("config: slit_level must be in [1, 12]");
    const long long edge = 1ll << gen.slit_level;
    if (gen.slit_len < 0 || gen.slit_len >= edge)
      throw std::invalid_argument(
          "config: slit_len must be in [0, 2^slit_level) so the origin cell survives");
    cells = pair_cells(gen.slit_level);
    chosen.assign(cells.size(), 1);
    const Rational s(1, edge);
    for (long long j = edge - gen.slit_len; j < edge; ++j) {
      const ExactPoint v0{j * s / 2, j * s / 2};
      bool found = false;
      for (size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].v[0] == v0 && cells[i].side2() == s * s) {
          chosen[i] = 0;
          found = true;
          break;
        }
      }
      if (!found) throw std::logic_error("draw_cells: slit cell not found");
    }
  }

  if (gen.symmetrize) {
    std::vector<int> partner = mirror_cells(cells);
    std::vector<char> out(chosen.size());
    for (size_t i = 0; i < chosen.size(); ++i) {
      // union of D and mirror(D); for the slit that means cutting both sides,
      // which is the intersection of the masks
      if (gen.kind == SubsetGenerator::Kind::Slit)
        out[i] = chosen[i] & chosen[partner[i]];
      else
        out[i] = chosen[i] | chosen[partner[i]];
    }
    chosen.swap(out);
  }
  return chosen;
}

CellCover make_cell_cover(const BhiGeometry& geo, int depth) {
  if (depth < 0 || depth > 12)
    throw std::invalid_argument("cell cover: depth must be in [0, 12]");
  CellCover cov;
  cov.depth = depth;
  cov.cells.assign(geo.bverts.size(), {-1, -1});

  auto add = [&](int bi, long long cell_id) {
    auto& e = cov.cells[bi];
    if (e[0] < 0)
      e[0] = (int)cell_id;
    else if (e[1] < 0)
      e[1] = (int)cell_id;
    else
      throw std::logic_error("cell cover: vertex inside more than two cells of one depth");
  };

  // descend the subdivision, splitting the member list at each level; a vertex
  // sitting on a shared corner follows both branches
  std::function<void(const TriCell&, long long, const std::vector<int>&, int)> walk =
      [&](const TriCell& cell, long long prefix, const std::vector<int>& members, int d) {
        if (members.empty()) return;
        if (d == depth) {
          for (int bi : members) add(bi, prefix);
          return;
        }
        auto ch = cell.children();
        for (int ci = 0; ci < 3; ++ci) {
          std::vector<int> sub;
          for (int bi : members)
            if (cell_contains(ch[ci], geo.graph.pts[geo.bverts[bi]])) sub.push_back(bi);
          walk(ch[ci], prefix * 3 + ci, sub, d + 1);
        }
      };

  const TriCell roots[2] = {cell_fplus(), cell_fminus()};
  for (int r = 0; r < 2; ++r) {
    std::vector<int> members;
    for (size_t bi = 0; bi < geo.bverts.size(); ++bi)
      if (cell_contains(roots[r], geo.graph.pts[geo.bverts[bi]])) members.push_back((int)bi);
    walk(roots[r], r, members, 0);
  }
  for (const auto& e : cov.cells)
    if (e[0] < 0) throw std::logic_error("cell cover: uncovered B vertex");
  return cov;
}

std::vector<int> draw_domain(const BhiGeometry& geo, const CellCover& cover,
                             const SubsetGenerator& gen, int instance, const SeedPlan& plan) {
  const int nb = (int)geo.bverts.size();
  std::vector<int> dom;

  if (gen.kind == SubsetGenerator::Kind::VertexSubset) {
    if (!(gen.vertex_p >= 0.0 && gen.vertex_p <= 1.0))
      throw std::invalid_argument("config: vertex_p must lie in [0, 1]");
    std::mt19937_64 rng(plan.stream((std::uint64_t)instance));
    std::vector<char> in(nb, 0);
    for (int i = 0; i < nb; ++i) in[i] = unit_open(rng) < gen.vertex_p ? 1 : 0;
    if (gen.symmetrize) {
      std::vector<char> u(nb);
      for (int i = 0; i < nb; ++i) u[i] = in[i] | in[geo.mirror_b[i]];
      in.swap(u);
    }
    auto oid = geo.graph.find_vertex(kOrigin);
    in[geo.b_index[*oid]] = 1;
    for (int i = 0; i < nb; ++i)
      if (in[i] && !geo.corner_b[i]) dom.push_back(i);
    return dom;
  }

  if (cover.depth != mask_depth(gen) || (int)cover.cells.size() != nb)
    throw std::invalid_argument("draw_domain: cell cover depth does not match the generator");
  if (mask_depth(gen) > geo.level)
    throw std::invalid_argument("config: the cell mask is finer than the lattice level");
  std::vector<char> chosen = draw_cells(gen, instance, plan);
  for (int i = 0; i < nb; ++i) {
    if (geo.corner_b[i]) continue;
    const auto& e = cover.cells[i];
    if (chosen[e[0]] && (e[1] < 0 || chosen[e[1]])) dom.push_back(i);
  }
  return dom;
}

std::vector<int> draw_domain(const BhiGeometry& geo, const SubsetGenerator& gen, int instance,
                             const SeedPlan& plan) {
  CellCover cov;
  if (gen.kind != SubsetGenerator::Kind::VertexSubset)
    cov = make_cell_cover(geo, mask_depth(gen));
  return draw_domain(geo, cov, gen, instance, plan);
}

// ---------------------------------------------------------------------------
// kernel slabs

std::vector<KernelSlab> assemble_kernels(const BhiGeometry& geo, const std::vector<double>& betas,
                                         double quad_h, bool verbose) {
  if (betas.empty()) throw std::invalid_argument("kernel assembly: no exponents requested");
  if (!(quad_h > 0.0 && quad_h <= 2.5))
    throw std::invalid_argument("config: quad_h must lie in (0, 2.5]");

  FracOptions fo;
  fo.mode = FracMode::Quadrature;
  fo.killed = true;
  fo.quad_step = quad_h;
  FractionalOperator op(geo.graph, betas.front(), fo);
  const WalkOperator& w = op.walk();
  const int n = op.n();
  const int nb = (int)geo.bverts.size();
  const int nbeta = (int)betas.size();

  std::vector<int> brow(nb);
  for (int i = 0; i < nb; ++i) {
    brow[i] = w.row_of[geo.bverts[i]];
    if (brow[i] < 0) throw std::logic_error("kernel assembly: B vertex dropped by the walk");
  }

  std::vector<KernelSlab> slabs(nbeta);
  for (int p = 0; p < nbeta; ++p) {
    slabs[p].beta = betas[p];
    slabs[p].rows = nb;
    slabs[p].cols = geo.cols;
    slabs[p].k.assign((size_t)nb * (size_t)geo.cols, 0.0f);
  }

  // target columns first, kept in full precision
  {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, 2);
    for (int v : geo.e1) X(w.row_of[v], 0) = 1.0;
    for (int v : geo.e2) X(w.row_of[v], 1) = 1.0;
    std::vector<Eigen::MatrixXd> blocks = op.apply_multi(X, betas);
    for (int p = 0; p < nbeta; ++p) {
      slabs[p].e1.resize(nb);
      slabs[p].e2.resize(nb);
      for (int i = 0; i < nb; ++i) {
        slabs[p].e1[i] = blocks[p](brow[i], 0);
        slabs[p].e2[i] = blocks[p](brow[i], 1);
      }
    }
  }

  // unit columns for the right half of B, in batches sized to the block
  // workspace of the shared-factor pass
  std::vector<int> colv(geo.cols);
  for (int i = 0; i < nb; ++i)
    if (geo.col_slot[i] >= 0) colv[geo.col_slot[i]] = i;
  const size_t per_col = (size_t)(nbeta + 3) * (size_t)n * 8u;
  const int batch =
      (int)std::clamp<size_t>(400000000u / std::max<size_t>(per_col, 1), 8, 512);
  for (int c0 = 0; c0 < geo.cols; c0 += batch) {
    const int m = std::min(batch, geo.cols - c0);
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, m);
    for (int j = 0; j < m; ++j) X(brow[colv[c0 + j]], j) = 1.0;
    std::vector<Eigen::MatrixXd> blocks = op.apply_multi(X, betas);
    for (int p = 0; p < nbeta; ++p) {
      const Eigen::MatrixXd& B = blocks[p];
      for (int j = 0; j < m; ++j) {
        float* dst = slabs[p].k.data() + (size_t)(c0 + j) * (size_t)nb;
        for (int i = 0; i < nb; ++i) dst[i] = (float)B(brow[i], j);
      }
    }
    if (verbose)
      std::cerr << "[kernel] columns " << (c0 + m) << "/" << geo.cols << "\n";
  }
  return slabs;
}

InstanceSolve solve_pair(const BhiGeometry& geo, const KernelSlab& ks,
                         const std::vector<int>& dom_b) {
  InstanceSolve out;
  const int nd = (int)dom_b.size();
  if (nd == 0) {
    out.flags = kFlagEmptyEval;
    return out;
  }
  Eigen::MatrixXd A(nd, nd);
  for (int c = 0; c < nd; ++c) {
    double* col = A.data() + (size_t)c * nd;
    const int j = dom_b[c];
    for (int r = 0; r < nd; ++r) col[r] = ks.at(geo, dom_b[r], j);
  }
  // the exact kernel is symmetric; average away the float storage noise
  for (int c = 0; c < nd; ++c)
    for (int r = c + 1; r < nd; ++r) {
      const double v = 0.5 * (A(r, c) + A(c, r));
      A(r, c) = v;
      A(c, r) = v;
    }
  Eigen::MatrixXd rhs(nd, 2);
  for (int r = 0; r < nd; ++r) {
    rhs(r, 0) = -ks.e1[dom_b[r]];
    rhs(r, 1) = -ks.e2[dom_b[r]];
  }
  int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', nd, A.data(), nd);
  if (info == 0)
    info = LAPACKE_dpotrs(LAPACK_COL_MAJOR, 'L', nd, 2, A.data(), nd, rhs.data(), nd);
  if (info != 0) {
    out.flags |= kFlagSolveFail;
    return out;
  }
  out.f = rhs.col(0);
  out.g = rhs.col(1);
  return out;
}

RatioStat ratio_over_eval(const BhiGeometry& geo, const std::vector<int>& dom_b,
                          const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  RatioStat st;
  double tmin = std::numeric_limits<double>::infinity();
  double tmax = -tmin;
  for (size_t r = 0; r < dom_b.size(); ++r) {
    if (!geo.eval_b[dom_b[r]]) continue;
    const double fv = f[(Eigen::Index)r], gv = g[(Eigen::Index)r];
    if (!(fv > 0.0) || !(gv > 0.0) || !std::isfinite(fv) || !std::isfinite(gv)) {
      st.flags |= kFlagNonPositive;
      continue;
    }
    const double t = fv / gv;
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
    ++st.eval_count;
  }
  if (st.eval_count == 0) {
    st.flags |= kFlagEmptyEval;
    return st;
  }
  st.R = tmax / tmin;
  return st;
}

// ---------------------------------------------------------------------------
// ratio battery

BhiReport run_bhi(const ExperimentConfig& cfg) {
  check_alpha_grid(cfg.alphas, cfg.allow_wide_alpha);
  if (cfg.level < 2 || cfg.level > 8)
    throw std::invalid_argument(
        "config: level must be in [2, 8]; beyond 8 the kernel slabs outgrow memory");
  if (cfg.instances < 1 || cfg.instances > 100000)
    throw std::invalid_argument("config: instances must be in [1, 100000]");

  BhiGeometry geo = make_bhi_geometry(cfg.level, cfg.ambient_pow);
  if (cfg.verbose)
    std::cerr << "[bhi] level " << cfg.level << ": ambient n = " << geo.graph.n()
              << ", |B| = " << geo.bverts.size() << ", kernel columns = " << geo.cols << "\n";

  std::vector<double> betas;
  for (double a : cfg.alphas) betas.push_back(a / kWalkDimension);
  std::vector<KernelSlab> slabs = assemble_kernels(geo, betas, cfg.quad_h, cfg.verbose);

  CellCover cover;
  if (cfg.gen.kind != SubsetGenerator::Kind::VertexSubset)
    cover = make_cell_cover(geo, mask_depth(cfg.gen));
  const SeedPlan plan{cfg.seed};

  BhiReport rep;
  rep.level = cfg.level;
  rep.instances = cfg.instances;
  rep.per_alpha.resize(cfg.alphas.size());
  for (size_t p = 0; p < cfg.alphas.size(); ++p) {
    rep.per_alpha[p].alpha = cfg.alphas[p];
    rep.per_alpha[p].level = cfg.level;
    rep.per_alpha[p].exploratory = cfg.alphas[p] >= 1.0;
  }

  for (int inst = 0; inst < cfg.instances; ++inst) {
    const std::vector<int> dom = draw_domain(geo, cover, cfg.gen, inst, plan);
    for (size_t p = 0; p < cfg.alphas.size(); ++p) {
      BhiAlphaReport& ar = rep.per_alpha[p];
      BhiInstance row;
      row.id = inst;
      row.domain_size = (int)dom.size();
      if (ar.exploratory) row.flags |= kFlagWideAlpha;
      InstanceSolve s = solve_pair(geo, slabs[p], dom);
      row.flags |= s.flags;
      if (!(s.flags & (kFlagSolveFail | kFlagEmptyEval))) {
        RatioStat st = ratio_over_eval(geo, dom, s.f, s.g);
        row.R = st.R;
        row.eval_count = st.eval_count;
        row.flags |= st.flags;
      }
      ar.rows.push_back(row);
    }
    if (cfg.verbose && ((inst + 1) % 10 == 0 || inst + 1 == cfg.instances))
      std::cerr << "[bhi] level " << cfg.level << ": instance " << (inst + 1) << "/"
                << cfg.instances << "\n";
  }
  for (auto& ar : rep.per_alpha) finalize_alpha(ar);
  return rep;
}

// ---------------------------------------------------------------------------
// lemma battery

LemmaReport run_lemma_battery(const ExperimentConfig& cfg) {
  for (double a : cfg.alphas)
    if (!(a > 0.0 && a < 1.0)) {
      std::ostringstream os;
      os << "config: alpha = " << a
         << " is outside (0,1); the escape/upper/factorization constants are stated "
            "for that range only";
      throw std::invalid_argument(os.str());
    }
  if (cfg.alphas.empty()) throw std::invalid_argument("config: the alpha grid is empty");
  if (cfg.lemma_level < 2 || cfg.lemma_level > 6)
    throw std::invalid_argument(
        "config: lemma_level must be in [2, 6] (the spectral operator is dense)");
  if (cfg.lemma_instances < 1 || cfg.lemma_instances > 10000)
    throw std::invalid_argument("config: lemma_instances must be in [1, 10000]");
  if (!(cfg.p1_sq > 0 && cfg.p1_sq < cfg.p2_sq && cfg.p2_sq < 4))
    throw std::invalid_argument(
        "config: need 0 < p1_sq < p2_sq < 4 (the escape ball must clear the ambient rim)");
  if (!(cfg.p3_sq > 0 && cfg.p3_sq < cfg.p5_sq && cfg.p5_sq <= 1))
    throw std::invalid_argument(
        "config: need 0 < p3_sq < p5_sq <= 1 (the far targets sit just past distance 1)");

  BhiGeometry geo = make_bhi_geometry(cfg.lemma_level, 1);
  const GasketGraph& g = geo.graph;

  // instance domains as graph ids, drawn once and shared across the grid
  CellCover cover;
  if (cfg.gen.kind != SubsetGenerator::Kind::VertexSubset)
    cover = make_cell_cover(geo, mask_depth(cfg.gen));
  const SeedPlan plan{cfg.seed};
  std::vector<std::vector<int>> dom_ids(cfg.lemma_instances);
  for (int inst = 0; inst < cfg.lemma_instances; ++inst) {
    for (int bi : draw_domain(geo, cover, cfg.gen, inst, plan))
      dom_ids[inst].push_back(geo.bverts[bi]);
  }

  const std::vector<int> probe_ball = ball_vertices(g, kOrigin, cfg.p1_sq, false);
  const std::vector<int> escape_ball = ball_vertices(g, kOrigin, cfg.p2_sq, false);

  // the fixed disk configuration and its halved copy (same graph, every radius
  // halved) plus a doubled graph with identical vertex numbering for the exact
  // homothety cross-check
  const std::vector<int> disk = ball_vertices(g, kOrigin, Rational(9, 16), false);
  const std::vector<int> disk_half = ball_vertices(g, kOrigin, Rational(9, 64), false);
  GasketGraph g2 = build_graph(window_dilated(2), cfg.lemma_level - 1);
  if (g2.n() != g.n())
    throw std::logic_error("lemma battery: doubled window does not match vertex for vertex");
  for (int v = 0; v < g.n(); ++v)
    if (g2.pts[v] != dilate(g.pts[v], 1))
      throw std::logic_error("lemma battery: doubled window vertex numbering drifted");

  // halved far target: the quarter cell against (1/2, 0), minus that corner
  std::vector<int> e1_half;
  {
    const TriCell hc{{ExactPoint{Rational(1, 2), Rational(0)}, ExactPoint{Rational(1), Rational(0)},
                      ExactPoint{Rational(3, 4), Rational(1, 4)}}};
    const ExactPoint near{Rational(1, 2), Rational(0)};
    for (int v = 0; v < g.n(); ++v)
      if (cell_contains(hc, g.pts[v]) && g.pts[v] != near) e1_half.push_back(v);
  }

  const Rational sweep_radii[4] = {Rational(1, 8), Rational(1, 4), Rational(3, 8),
                                   Rational(1, 2)};

  LemmaReport rep;
  rep.level = cfg.lemma_level;
  rep.instances = cfg.lemma_instances;

  for (double alpha : cfg.alphas) {
    const double beta = alpha / kWalkDimension;
    FracOptions fo;
    fo.mode = FracMode::Spectral;
    fo.killed = true;
    fo.spectral_cap = std::max(5000, g.n() + 1);
    FractionalOperator op(g, beta, fo);
    FractionalOperator op2(g2, beta, fo);
    const WalkOperator& w = op.walk();

    Eigen::VectorXd data1 = Eigen::VectorXd::Zero(op.n());
    Eigen::VectorXd data2 = Eigen::VectorXd::Zero(op.n());
    for (int v : geo.e1) data1[w.row_of[v]] = 1.0;
    for (int v : geo.e2) data2[w.row_of[v]] = 1.0;

    LemmaAlphaReport ar;
    ar.alpha = alpha;
    ar.level = cfg.lemma_level;

    for (int inst = 0; inst < cfg.lemma_instances; ++inst) {
      const std::vector<int>& D = dom_ids[inst];
      LemmaInstance row;
      row.id = inst;

      FactorizationResult facF =
          factorization_check(op, D, geo.e1, kOrigin, cfg.p1_sq, cfg.p5_sq);
      FactorizationResult facG =
          factorization_check(op, D, geo.e2, kOrigin, cfg.p1_sq, cfg.p5_sq);
      if (facF.degenerate || facG.degenerate || !(facF.c_low > 0.0) || !(facG.c_low > 0.0)) {
        row.flags |= kFlagDegenerate;
      } else {
        row.c_fac_high = std::max(facF.c_high, facG.c_high);
        row.c_fac_low = std::min(facF.c_low, facG.c_low);
        const double q = row.c_fac_high / row.c_fac_low;
        row.echo_bound = q * q;
      }

      // the ratio over the probe ball, from the same two harmonic functions the
      // factorization brackets
      {
        HarmonicSolution fs = harmonic_solve(op, D, data1);
        HarmonicSolution gs = harmonic_solve(op, D, data2);
        double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
        int hits = 0;
        std::vector<int> probes = intersect_sorted(D, probe_ball);
        for (int v : probes) {
          const size_t pos =
              std::lower_bound(fs.domain.begin(), fs.domain.end(), v) - fs.domain.begin();
          const double fv = fs.h[(Eigen::Index)pos], gv = gs.h[(Eigen::Index)pos];
          if (!(fv > 0.0) || !(gv > 0.0)) {
            row.flags |= kFlagNonPositive;
            continue;
          }
          const double t = fv / gv;
          tmin = std::min(tmin, t);
          tmax = std::max(tmax, t);
          ++hits;
        }
        if (hits == 0)
          row.flags |= kFlagEmptyEval;
        else
          row.R_probe = tmax / tmin;
      }

      row.c_escape =
          escape_check(op, intersect_sorted(D, escape_ball), kOrigin, cfg.p1_sq, cfg.p2_sq)
              .c_hat;
      UpperResult ur = upper_check(op, D, geo.e1, kOrigin, cfg.p3_sq, cfg.p5_sq);
      if (ur.degenerate)
        row.flags |= kFlagDegenerate;
      else
        row.c_upper = ur.c_hat;

      ar.rows.push_back(row);
    }

    for (const LemmaInstance& row : ar.rows) {
      if (excluded_row(row.flags)) {
        ++ar.excluded;
        continue;
      }
      if (!(row.c_fac_high <= ar.c_fac_max)) ar.c_fac_max = row.c_fac_high;
      if (!(row.c_fac_low >= ar.c_fac_min)) ar.c_fac_min = row.c_fac_low;
    }

    // scale stability on the disk configuration
    const double esc0 = escape_check(op, disk, kOrigin, cfg.p1_sq, cfg.p2_sq).c_hat;
    const double esc1 =
        escape_check(op, disk_half, kOrigin, cfg.p1_sq / 4, cfg.p2_sq / 4).c_hat;
    if (esc0 > 0.0) ar.escape_half_ratio = esc1 / esc0;

    const UpperResult up0 = upper_check(op, disk, geo.e1, kOrigin, cfg.p3_sq, cfg.p5_sq);
    const UpperResult up1 =
        upper_check(op, disk_half, e1_half, kOrigin, cfg.p3_sq / 4, cfg.p5_sq / 4);
    if (!up0.degenerate && !up1.degenerate && up0.c_hat > 0.0)
      ar.upper_half_ratio = up1.c_hat * std::exp2(alpha) / up0.c_hat;

    const FactorizationResult fac0 =
        factorization_check(op, disk, geo.e1, kOrigin, cfg.p1_sq, cfg.p5_sq);
    const FactorizationResult fac1 =
        factorization_check(op2, disk, geo.e1, kOrigin, cfg.p1_sq * 4, cfg.p5_sq * 4);
    if (!fac0.degenerate && !fac1.degenerate && fac0.c_high > 0.0 && fac0.c_low > 0.0)
      ar.fac_homothety_rel = std::max(std::abs(fac1.c_high / fac0.c_high - 1.0),
                                      std::abs(fac1.c_low / fac0.c_low - 1.0));

    ar.lambda_tail_bound = lambda_truncation_bound(2.0, alpha, 1.0);

    for (const Rational& r : sweep_radii) {
      UpperSweepPoint pt;
      pt.p3_sq = to_double(r);
      UpperResult us = upper_check(op, disk, geo.e1, kOrigin, r, cfg.p5_sq);
      pt.c_upper = us.degenerate ? std::numeric_limits<double>::quiet_NaN() : us.c_hat;
      ar.sweep.push_back(pt);
    }

    rep.per_alpha.push_back(std::move(ar));
    if (cfg.verbose)
      std::cerr << "[lemmas] alpha " << alpha << " done (" << cfg.lemma_instances
                << " instances)\n";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// scaling suite

ScalingReport run_scaling_suite(const ExperimentConfig& cfg) {
  check_alpha_grid(cfg.alphas, cfg.allow_wide_alpha);
  if (cfg.scaling_level < 4 || cfg.scaling_level > 8)
    throw std::invalid_argument("config: scaling_level must be in [4, 8]");
  if (cfg.walks_dw < 10 || cfg.walks_alpha < 10)
    throw std::invalid_argument("config: the scaling suite needs at least 10 walks per radius");
  if (cfg.step_cap < 10000)
    throw std::invalid_argument("config: step_cap below 10000 would bias the jump counts");

  const GasketGraph g = build_graph(window_b(), cfg.scaling_level);
  const std::vector<Rational> radii{Rational(1, 4), Rational(1, 16), Rational(1, 64)};
  const SeedPlan plan{cfg.seed};

  ScalingReport rep;
  rep.dw_target = kWalkDimension;
  rep.dw = mc_walk_dimension_fit(g, kOrigin, radii, cfg.walks_dw,
                                 SeedPlan{plan.stream(1ull << 20)});
  if (cfg.verbose) std::cerr << "[scaling] walk-dimension slope " << rep.dw.slope << "\n";

  for (size_t i = 0; i < cfg.alphas.size(); ++i) {
    const double beta = cfg.alphas[i] / kWalkDimension;
    ScalingReport::AlphaSlope as;
    as.alpha = cfg.alphas[i];
    as.fit = mc_stability_fit(g, kOrigin, radii, beta, cfg.walks_alpha,
                              SeedPlan{plan.stream((1ull << 20) + 1 + i)}, cfg.step_cap);
    rep.stability.push_back(as);
    if (cfg.verbose)
      std::cerr << "[scaling] alpha " << as.alpha << ": jump-count slope " << as.fit.slope
                << "\n";
  }

  // exact dilation identity of the kernel tail functional: doubling the graph,
  // the center and the radius shifts the dyadic scale by one and leaves the
  // mantissa bit-for-bit unchanged
  {
    const GasketGraph g5 = build_graph(window_b(), std::min(cfg.scaling_level, 5));
    const ExactPoint c{Rational(3, 4), Rational(1, 4)};
    if (!g5.find_vertex(c)) throw std::logic_error("scaling suite: missing dilation center");
    std::vector<double> f(g5.n());
    for (int i = 0; i < g5.n(); ++i) f[i] = 0.6 + 0.4 * std::sin(0.37 * i);
    const GasketGraph gd = dilate_graph(g5, 1);
    bool ok = true;
    for (double alpha : cfg.alphas) {
      const LambdaValue l0 = lambda_functional(g5, c, Rational(9, 16), f, alpha);
      const LambdaValue l1 = lambda_functional(gd, dilate(c, 1), Rational(9, 4), f, alpha);
      ok = ok && l1.mantissa == l0.mantissa && l1.scale_pow == l0.scale_pow + 1;
    }
    rep.lambda_exact = ok;
  }
  return rep;
}

}  // namespace gasketlab
