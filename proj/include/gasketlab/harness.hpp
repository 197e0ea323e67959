#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gasketlab/geometry.hpp"
#include "gasketlab/mc.hpp"

namespace gasketlab {

// Experiment driver for the boundary Harnack ratio batteries. The stage is
// always the same: the window pair B = F+ u F- meeting at the origin, its
// half-size pair B' (the two side-1/2 cells at the origin), two far target
// cells E1/E2 on opposite sides, and a family of random subsets D of B. For
// each instance two nonnegative functions are solved, harmonic on D for the
// jump operator and vanishing on B \ D, with indicator data on E1 and E2, and
// the ratio statistic
//     R(D) = max over x,y in D n B' of  f(x) g(y) / (f(y) g(x))
// is recorded. R >= 1 always, and R is invariant under swapping f and g.

// ---------------------------------------------------------------------------
// configuration

struct SubsetGenerator {
  enum class Kind { CellUnion, VertexSubset, Slit };
  Kind kind = Kind::CellUnion;
  // CellUnion / Slit work on the subdivision of B into 2*3^cell_level cells;
  // selections depend only on (instance, seed), never on the lattice level,
  // so the same regions are re-solved when the resolution changes.
  int cell_level = 3;
  double density = 0.25;  // CellUnion keep probability (origin cells always kept)
  double vertex_p = 0.6;  // VertexSubset keep probability (origin always kept)
  int slit_level = 3;     // Slit: removed cells have side 2^-slit_level
  int slit_len = 4;       // ... and run from the top corner of F+ toward the origin
  // replace D by D u mirror(D); the slit kind instead cuts both sides, which
  // is the symmetric variant that does not fill the slit back in
  bool symmetrize = false;

  friend bool operator==(const SubsetGenerator&, const SubsetGenerator&) = default;
};

struct ExperimentConfig {
  std::vector<double> alphas{0.3, 0.5, 0.7, 0.9};
  int level = 7;        // lattice resolution: smallest cells have side 2^-level
  int ambient_pow = 1;  // solve inside B dilated by 2^ambient_pow (killed at its rim)
  int instances = 100;
  std::uint64_t seed = 0x5eed2024ULL;
  // The ratio batteries are stated for alpha in (0,1). Larger exponents (up
  // to the walk dimension) run only when explicitly allowed, and every such
  // row carries the exploratory flag.
  bool allow_wide_alpha = false;
  bool verbose = false;  // progress notes on stderr; never touches the reports
  SubsetGenerator gen;
  double quad_h = 1.4;  // node spacing of the kernel quadrature (see KernelSlab)

  // lemma battery
  int lemma_level = 5;
  int lemma_instances = 50;
  Rational p1_sq{1, 4};  // probe ball radius^2 (p1 = 1/2)
  Rational p2_sq{3, 4};  // escape ball radius^2
  Rational p3_sq{1, 2};  // upper-bound probe radius^2
  Rational p5_sq{3, 4};  // target separation^2 (p5 = sqrt(3)/2)

  // scaling suite
  int scaling_level = 6;
  long long walks_dw = 1500;
  long long walks_alpha = 4000;
  long long step_cap = 100000000;

  std::string out_dir = ".";  // where reports and the run manifest land

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// per-instance flags
constexpr unsigned kFlagEmptyEval = 1u;    // D n B' has no usable vertices
constexpr unsigned kFlagNonPositive = 2u;  // a solved value was not strictly positive
constexpr unsigned kFlagSolveFail = 4u;    // factorization/solve breakdown
constexpr unsigned kFlagDegenerate = 8u;   // a lemma functional vanished
constexpr unsigned kFlagWideAlpha = 16u;   // alpha outside (0,1): exploratory row

// ---------------------------------------------------------------------------
// experiment geometry (exposed for the CLI and for tests)

struct BhiGeometry {
  GasketGraph graph;  // ambient window, rim-killed
  int level = 0;
  int ambient_pow = 1;
  std::vector<int> bverts;   // graph ids lying in B, ascending
  std::vector<int> b_index;  // graph id -> index into bverts, -1 outside B
  std::vector<int> col_slot;  // bverts index -> kernel column when a >= 0, else -1
  int cols = 0;
  std::vector<int> mirror_b;   // bverts index -> index of the mirror image
  std::vector<char> corner_b;  // 1 at the four outer corners of B
  std::vector<char> eval_b;    // 1 inside the half-size pair B'
  std::vector<int> e1, e2;     // far target ids: E2 = mirror(E1)
};

BhiGeometry make_bhi_geometry(int level, int ambient_pow = 1);

// Cells of B at a given subdivision depth: the 3^depth descendants of F+
// followed by those of F-, in a fixed recursion order.
std::vector<TriCell> pair_cells(int depth);

// Cell selection of one instance (CellUnion and Slit kinds); the two cells at
// the origin are always selected. Level-independent by construction.
std::vector<char> draw_cells(const SubsetGenerator& gen, int instance, const SeedPlan& plan);

// Map from bverts index to the one or two depth-cells containing the vertex
// (cells of a common depth meet only at corners). Precomputing it once makes
// repeated domain draws linear in |B|.
struct CellCover {
  int depth = 0;
  std::vector<std::array<int, 2>> cells;  // second entry -1 when unique
};
CellCover make_cell_cover(const BhiGeometry& geo, int depth);

// The instance domain as sorted bverts indices. Cell-based kinds keep the
// open-subset interior: a vertex enters only when every chosen-depth cell
// containing it is selected, and the four outer corners of B never enter (the
// gasket continues past them, outside D).
std::vector<int> draw_domain(const BhiGeometry& geo, const CellCover& cover,
                             const SubsetGenerator& gen, int instance, const SeedPlan& plan);
std::vector<int> draw_domain(const BhiGeometry& geo, const SubsetGenerator& gen, int instance,
                             const SeedPlan& plan);

// ---------------------------------------------------------------------------
// kernel slabs: the jump operator restricted to B x B, one slab per exponent

// Entries are kept in single precision (the quadrature truncation at the
// default spacing is two orders above float rounding) so that every exponent
// of the grid fits in memory in one shared-factor assembly pass. Columns are
// stored for the right half only; the mirror symmetry and the plain symmetry
// of the killed kernel recover the rest:
//   K[i][j] = K[j][i],  K[i][j] = K[mirror i][mirror j].
struct KernelSlab {
  double beta = 0.0;
  int rows = 0, cols = 0;
  std::vector<float> k;   // column-major, k[c * rows + r]
  Eigen::VectorXd e1, e2;  // (L 1_E)|_B, full precision

  float at(const BhiGeometry& geo, int i, int j) const {
    int cs = geo.col_slot[j];
    if (cs >= 0) return k[(size_t)cs * rows + i];
    int ci = geo.col_slot[i];
    if (ci >= 0) return k[(size_t)ci * rows + j];
    return k[(size_t)geo.col_slot[geo.mirror_b[j]] * rows + geo.mirror_b[i]];
  }
};

std::vector<KernelSlab> assemble_kernels(const BhiGeometry& geo, const std::vector<double>& betas,
                                         double quad_h, bool verbose = false);

// Dirichlet solve of one instance against both targets (same matrix, two
// right-hand sides), values over dom_b in order.
struct InstanceSolve {
  Eigen::VectorXd f, g;
  unsigned flags = 0;
};
InstanceSolve solve_pair(const BhiGeometry& geo, const KernelSlab& ks,
                         const std::vector<int>& dom_b);

// Ratio statistic over the solved vertices lying in B'.
struct RatioStat {
  double R = std::numeric_limits<double>::quiet_NaN();
  int eval_count = 0;
  unsigned flags = 0;
};
RatioStat ratio_over_eval(const BhiGeometry& geo, const std::vector<int>& dom_b,
                          const Eigen::VectorXd& f, const Eigen::VectorXd& g);

// ---------------------------------------------------------------------------
// batteries

struct BhiInstance {
  int id = 0;
  double R = std::numeric_limits<double>::quiet_NaN();
  int domain_size = 0;
  int eval_count = 0;
  unsigned flags = 0;
};

struct BhiAlphaReport {
  double alpha = 0.0;
  int level = 0;
  bool exploratory = false;
  std::vector<BhiInstance> rows;
  double max_R = std::numeric_limits<double>::quiet_NaN();
  double median_R = std::numeric_limits<double>::quiet_NaN();
  double q90_R = std::numeric_limits<double>::quiet_NaN();
  int excluded = 0;
};

struct BhiReport {
  int level = 0;
  int instances = 0;
  std::vector<BhiAlphaReport> per_alpha;
};

BhiReport run_bhi(const ExperimentConfig& cfg);

// Lemma battery: empirical escape / upper / factorization constants over the
// same instance family, plus their cross-scale stability on the standard disk
// configuration and the per-instance ratio echo R <= (c_high/c_low)^2.
struct LemmaInstance {
  int id = 0;
  double c_escape = std::numeric_limits<double>::quiet_NaN();
  double c_upper = std::numeric_limits<double>::quiet_NaN();
  double c_fac_high = std::numeric_limits<double>::quiet_NaN();
  double c_fac_low = std::numeric_limits<double>::quiet_NaN();
  double R_probe = std::numeric_limits<double>::quiet_NaN();
  double echo_bound = std::numeric_limits<double>::quiet_NaN();
  unsigned flags = 0;
};

struct UpperSweepPoint {
  double p3_sq = 0.0;
  double c_upper = 0.0;
};

struct LemmaAlphaReport {
  double alpha = 0.0;
  int level = 0;
  std::vector<LemmaInstance> rows;
  double c_fac_max = std::numeric_limits<double>::quiet_NaN();  // battery-wide bracket
  double c_fac_min = std::numeric_limits<double>::quiet_NaN();
  // stability of the disk configuration when every radius shrinks by half
  // (escape per raw step; the upper constant compensated by 2^alpha), and
  // drift of the factorization bracket across the exact doubled copy
  double escape_half_ratio = std::numeric_limits<double>::quiet_NaN();
  double upper_half_ratio = std::numeric_limits<double>::quiet_NaN();
  double fac_homothety_rel = std::numeric_limits<double>::quiet_NaN();
  double lambda_tail_bound = std::numeric_limits<double>::quiet_NaN();
  std::vector<UpperSweepPoint> sweep;
  int excluded = 0;
};

struct LemmaReport {
  int level = 0;
  int instances = 0;
  std::vector<LemmaAlphaReport> per_alpha;
};

LemmaReport run_lemma_battery(const ExperimentConfig& cfg);

// Scaling suite: walk-dimension fit from plain exits, stability-index fits
// from subordinate jump counts, and the exact dilation identity of the
// kernel tail functional.
struct ScalingReport {
  ScalingFit dw;
  double dw_target = 0.0;  // log2 5
  struct AlphaSlope {
    double alpha = 0.0;
    ScalingFit fit;
  };
  std::vector<AlphaSlope> stability;
  bool lambda_exact = false;
};

ScalingReport run_scaling_suite(const ExperimentConfig& cfg);

}  // namespace gasketlab
