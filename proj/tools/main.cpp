// gasketlab command line: graph/spline/operator inspectors, Monte Carlo
// validators and the randomized-domain experiment batteries.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gasketlab/checks.hpp"
#include "gasketlab/config.hpp"
#include "gasketlab/fracop.hpp"
#include "gasketlab/harness.hpp"
#include "gasketlab/io.hpp"
#include "gasketlab/lambda.hpp"
#include "gasketlab/mc.hpp"
#include "gasketlab/solver.hpp"
#include "gasketlab/spline.hpp"
#include "gasketlab/subordination.hpp"

using namespace gasketlab;

namespace {

double wall_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExactPoint parse_point(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos)
    throw std::invalid_argument("point '" + s + "': expected 'a,b' with rational parts");
  return {rat_parse(s.substr(0, comma)), rat_parse(s.substr(comma + 1))};
}

Window window_by_name(const std::string& name, int pow) {
  if (name == "b") return window_b();
  if (name == "fplus") return window_fplus();
  if (name == "dilated") return window_dilated(pow);
  throw std::invalid_argument("window '" + name + "': expected b, fplus or dilated");
}

std::vector<int> interior_ball(const GasketGraph& g, const ExactPoint& c, const Rational& r2,
                               bool closed = false) {
  std::vector<int> out;
  for (int v : ball_vertices(g, c, r2, closed))
    if (!g.rim[v]) out.push_back(v);
  return out;
}

FracMode mode_by_name(const std::string& name) {
  if (name == "spectral") return FracMode::Spectral;
  if (name == "series") return FracMode::Series;
  if (name == "quadrature") return FracMode::Quadrature;
  throw std::invalid_argument("mode '" + name + "': expected spectral, series or quadrature");
}

FractionalOperator make_op(const GasketGraph& g, double alpha, const std::string& mode) {
  FracOptions o;
  o.mode = mode_by_name(mode);
  o.spectral_cap = std::max(o.spectral_cap, g.n() + 1);
  return FractionalOperator(g, alpha / kWalkDimension, o);
}

int domain_pos(const std::vector<int>& domain, int vertex, const char* what) {
  const auto it = std::lower_bound(domain.begin(), domain.end(), vertex);
  if (it == domain.end() || *it != vertex)
    throw std::invalid_argument(std::string(what) + " does not lie in the solved domain");
  return (int)(it - domain.begin());
}

// shared by the graph/operator subcommands
struct GraphOpts {
  std::string window = "b";
  int pow = 1;
  int level = 4;
  std::string center = "0,0";
  std::string r2 = "1/4";
  std::string mode = "spectral";
  double alpha = 0.5;
  std::string out;
};

void add_graph_opts(CLI::App* cmd, GraphOpts& o, bool with_op) {
  cmd->add_option("--window", o.window, "window: b, fplus or dilated")
      ->default_val(o.window);
  cmd->add_option("--pow", o.pow, "dilation power for --window dilated")->default_val(o.pow);
  cmd->add_option("--level", o.level, "subdivision depth")->default_val(o.level);
  if (with_op) {
    cmd->add_option("--alpha", o.alpha, "stability exponent")->required();
    cmd->add_option("--center", o.center, "domain ball center 'a,b' (rationals)")
        ->default_val(o.center);
    cmd->add_option("--r2", o.r2, "domain ball squared radius (rational)")->default_val(o.r2);
    cmd->add_option("--mode", o.mode, "operator mode: spectral, series or quadrature")
        ->default_val(o.mode);
  }
}

// the operator keeps a pointer into the graph, so both live on the heap
struct SolveSetup {
  std::unique_ptr<GasketGraph> g;
  std::unique_ptr<FractionalOperator> op;
  std::vector<int> dom;
  int center_pos = 0;
  int center_vertex = 0;
};

SolveSetup open_ball_setup(const GraphOpts& o) {
  SolveSetup s;
  s.g = std::make_unique<GasketGraph>(build_graph(window_by_name(o.window, o.pow), o.level));
  const ExactPoint c = parse_point(o.center);
  const auto cv = s.g->find_vertex(c);
  if (!cv) throw std::invalid_argument("center '" + o.center + "' is not a lattice vertex");
  s.dom = interior_ball(*s.g, c, rat_parse(o.r2));
  if (s.dom.empty()) throw std::invalid_argument("the requested ball contains no vertices");
  s.op = std::make_unique<FractionalOperator>(make_op(*s.g, o.alpha, o.mode));
  s.center_pos = domain_pos(s.dom, *cv, "the ball center");
  s.center_vertex = *cv;
  return s;
}

// ---------------------------------------------------------------- build-graph

int cmd_build_graph(const GraphOpts& o) {
  GasketGraph g = build_graph(window_by_name(o.window, o.pow), o.level);
  int rim_count = 0;
  std::map<int, int> deg_hist;
  Rational total_weight = 0;
  for (int v = 0; v < g.n(); ++v) {
    rim_count += g.rim[v] ? 1 : 0;
    deg_hist[g.degree(v)] += 1;
    total_weight += g.weight[v];
  }
  std::printf("window       %s\n", o.window.c_str());
  std::printf("level        %d  (side_pow %d, unit_level %d)\n", g.level, g.side_pow,
              g.unit_level());
  std::printf("vertices     %d\n", g.n());
  std::printf("cells        %d\n", (int)g.cells.size());
  std::printf("rim          %d\n", rim_count);
  for (const auto& [deg, count] : deg_hist)
    std::printf("degree %d     %d vertices\n", deg, count);
  std::printf("total weight %s\n", rat_str(total_weight).c_str());
  if (!o.out.empty()) {
    std::string csv = "id,a,b,rim,degree,weight\n";
    for (int v = 0; v < g.n(); ++v)
      csv += std::to_string(v) + "," + rat_str(g.pts[v].a) + "," + rat_str(g.pts[v].b) + "," +
             (g.rim[v] ? "1" : "0") + "," + std::to_string(g.degree(v)) + "," +
             rat_str(g.weight[v]) + "\n";
    write_file(o.out, csv);
    std::printf("wrote        %s\n", o.out.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------- spline-eval

struct SplineEvalOpts {
  int dump = -1;
  int corner = 0;
  std::string path, point, out;
};

int cmd_spline_eval(const SplineEvalOpts& o) {
  const int given = (o.dump >= 0 ? 1 : 0) + (o.path.empty() ? 0 : 1) + (o.point.empty() ? 0 : 1);
  if (given != 1)
    throw std::invalid_argument("spline-eval: give exactly one of --dump, --path, --point");
  if (o.dump >= 0) {
    const std::string csv = spline_dump_csv(o.dump, o.corner);
    if (o.out.empty())
      std::fputs(csv.c_str(), stdout);
    else {
      write_file(o.out, csv);
      std::printf("wrote %s (%d rows)\n", o.out.c_str(), (int)std::count(csv.begin(), csv.end(), '\n') - 1);
    }
    return 0;
  }
  if (!o.path.empty()) {
    std::vector<int> digits;
    for (char c : o.path) {
      if (c < '0' || c > '2')
        throw std::invalid_argument("path '" + o.path + "': digits must be 0, 1 or 2");
      digits.push_back(c - '0');
    }
    SplineState s = phi0_state(digits, o.corner);
    std::printf("path,v0,v1,v2,d0,d1,d2\n%s", o.path.c_str());
    for (const Rational& v : s) std::printf(",%s", rat_str(v).c_str());
    std::printf("\n");
    return 0;
  }
  const ExactPoint p = parse_point(o.point);
  const Rational v = phi0_at_vertex(p, o.corner);
  std::printf("phi0[corner %d](%s) = %s = %.17g\n", o.corner, point_str(p).c_str(),
              rat_str(v).c_str(), to_double(v));
  return 0;
}

// -------------------------------------------------------------- spline-verify

int cmd_spline_verify(int depth) {
  const auto t0 = std::chrono::steady_clock::now();
  SplineConditionReport r = verify_spline_condition(depth);
  const double wall = wall_since(t0);
  std::printf("depth             %d\n", r.depth);
  std::printf("states checked    %lld\n", r.states_checked);
  std::printf("violations        %lld\n", r.violations);
  std::printf("sibling agreement %s\n", r.sibling_consistent ? "ok" : "FAILED");
  std::printf("partition of one  %s\n", r.partition_ok ? "ok" : "FAILED");
  std::printf("derivative chain  %s\n", r.derivative_chain_ok ? "ok" : "FAILED");
  std::printf("max |d|/(3v)      %s = %.17g\n", rat_str(r.max_ratio).c_str(),
              to_double(r.max_ratio));
  std::printf("value range       [%s, %s]\n", rat_str(r.min_value).c_str(),
              rat_str(r.max_value).c_str());
  std::printf("wall seconds      %.2f\n", wall);
  std::printf("verdict           %s\n", r.ok() ? "PASS" : "FAIL");
  return r.ok() ? 0 : 1;
}

// --------------------------------------------------------------------- cutoff

struct CutoffOpts {
  int level = 2;
  int eval_level = -1;
  std::vector<int> cells;
  double alpha = 0.0;  // 0: skip the fractional bound
  std::string mode = "spectral";
  std::string out;
};

int cmd_cutoff(const CutoffOpts& o) {
  GasketGraph gn = build_graph(window_b(), o.level);
  for (int c : o.cells)
    if (c < 0 || c >= (int)gn.cells.size())
      throw std::invalid_argument("cell index " + std::to_string(c) + " outside 0.." +
                                  std::to_string(gn.cells.size() - 1));
  CutoffFunction cut = cutoff_assemble(gn, o.cells);
  int n_zero = 0, n_one = 0, n_phi = 0, n_onemphi = 0;
  for (const CutoffRule& r : cut.rules) switch (r.kase) {
      case CutoffCase::Zero: ++n_zero; break;
      case CutoffCase::One: ++n_one; break;
      case CutoffCase::Phi0: ++n_phi; break;
      case CutoffCase::OneMinusPhi0: ++n_onemphi; break;
    }
  std::printf("tiling level  %d (%d cells, %d selected)\n", o.level, (int)gn.cells.size(),
              (int)o.cells.size());
  std::printf("rules         0: %d   1: %d   phi0: %d   1-phi0: %d\n", n_zero, n_one, n_phi,
              n_onemphi);

  const int eval_level = o.eval_level < 0 ? o.level : o.eval_level;
  if (eval_level < o.level)
    throw std::invalid_argument("--eval-level must be at least the tiling level");
  GasketGraph gf = eval_level == o.level ? std::move(gn) : build_graph(window_b(), eval_level);
  if (!o.out.empty()) {
    std::vector<Rational> vals = cutoff_values_on_graph(cut, gf);
    std::string csv = "id,a,b,value\n";
    for (int v = 0; v < gf.n(); ++v)
      csv += std::to_string(v) + "," + rat_str(gf.pts[v].a) + "," + rat_str(gf.pts[v].b) + "," +
             rat_str(vals[v]) + "\n";
    write_file(o.out, csv);
    std::printf("wrote         %s\n", o.out.c_str());
  }
  if (o.alpha > 0) {
    FractionalOperator op = make_op(gf, o.alpha, o.mode);
    CutoffBound b = cutoff_fractional_bound(op, cut);
    std::printf("alpha         %.17g (eval level %d)\n", o.alpha, eval_level);
    std::printf("max |L phi|   %.17g at vertex %d %s\n", b.max_abs, b.argmax_vertex,
                b.argmax_vertex >= 0 ? point_str(gf.pts[b.argmax_vertex]).c_str() : "");
  }
  return 0;
}

// ------------------------------------------------------- solve-harmonic et al

struct HarmonicOpts {
  GraphOpts g;
  std::string target_center = "1/2,1/4";
  std::string target_r2 = "1/64";
};

int cmd_solve_harmonic(const HarmonicOpts& ho) {
  SolveSetup s = open_ball_setup(ho.g);
  const ExactPoint tc = parse_point(ho.target_center);
  const Rational tr2 = rat_parse(ho.target_r2);
  const WalkOperator& w = s.op->walk();
  Eigen::VectorXd data = Eigen::VectorXd::Zero(s.op->n());
  std::vector<char> in_dom(s.g->n(), 0);
  for (int v : s.dom) in_dom[v] = 1;
  int targets = 0;
  for (int r = 0; r < s.op->n(); ++r) {
    const int v = w.verts[r];
    if (!in_dom[v] && squared_distance(s.g->pts[v], tc) <= tr2) {
      data[r] = 1.0;
      ++targets;
    }
  }
  HarmonicSolution sol = harmonic_solve(*s.op, s.dom, data);
  std::printf("domain        %d vertices, %d boundary targets\n", (int)s.dom.size(), targets);
  std::printf("h(center)     %.17g\n", sol.h[s.center_pos]);
  std::printf("killed mass   %.17g\n", sol.killed_mass[s.center_pos]);
  std::printf("h range       [%.17g, %.17g]\n", sol.h.minCoeff(), sol.h.maxCoeff());
  std::printf("residual      %.3g\n", sol.residual);
  std::printf("sym defect    %.3g\n", sol.sym_defect);
  std::printf("cond estimate %.3g\n", sol.cond_hat);
  if (!ho.g.out.empty()) {
    std::string csv = "id,a,b,h\n";
    for (size_t i = 0; i < sol.domain.size(); ++i) {
      const int v = sol.domain[i];
      csv += std::to_string(v) + "," + rat_str(s.g->pts[v].a) + "," + rat_str(s.g->pts[v].b) +
             "," + fmt_field(sol.h[(int)i]) + "\n";
    }
    write_file(ho.g.out, csv);
    std::printf("wrote         %s\n", ho.g.out.c_str());
  }
  return 0;
}

int cmd_exit_time(const GraphOpts& o) {
  SolveSetup s = open_ball_setup(o);
  Eigen::VectorXd t = exit_time_solve(*s.op, s.dom);
  std::printf("domain          %d vertices\n", (int)s.dom.size());
  std::printf("E jumps(center) %.17g\n", t[s.center_pos]);
  std::printf("jump range      [%.17g, %.17g]\n", t.minCoeff(), t.maxCoeff());
  if (!o.out.empty()) {
    std::string csv = "id,a,b,expected_jumps\n";
    for (size_t i = 0; i < s.dom.size(); ++i) {
      const int v = s.dom[i];
      csv += std::to_string(v) + "," + rat_str(s.g->pts[v].a) + "," + rat_str(s.g->pts[v].b) +
             "," + fmt_field(t[(int)i]) + "\n";
    }
    write_file(o.out, csv);
    std::printf("wrote           %s\n", o.out.c_str());
  }
  return 0;
}

int cmd_green(const GraphOpts& o, int cap) {
  SolveSetup s = open_ball_setup(o);
  Eigen::MatrixXd G = green_table(*s.op, s.dom, cap);
  Eigen::VectorXd t = exit_time_solve(*s.op, s.dom);
  const double asym = (G - G.transpose()).cwiseAbs().maxCoeff();
  const double rowsum_err = (G.rowwise().sum() - t).cwiseAbs().maxCoeff() /
                            std::max(1.0, t.maxCoeff());
  std::printf("domain        %d vertices\n", (int)s.dom.size());
  std::printf("G(c,c)        %.17g\n", G(s.center_pos, s.center_pos));
  std::printf("max diagonal  %.17g\n", G.diagonal().maxCoeff());
  std::printf("min entry     %.3g\n", G.minCoeff());
  std::printf("asymmetry     %.3g\n", asym);
  std::printf("rowsum vs E   %.3g (relative)\n", rowsum_err);
  if (!o.out.empty()) {
    std::string csv;
    for (int i = 0; i < G.rows(); ++i) {
      for (int j = 0; j < G.cols(); ++j)
        csv += (j ? "," : "") + fmt_field(G(i, j));
      csv += "\n";
    }
    write_file(o.out, csv);
    std::printf("wrote         %s\n", o.out.c_str());
  }
  return 0;
}

// --------------------------------------------------------------------- lambda

struct LambdaOpts {
  GraphOpts g;
  std::string f = "sin";
  bool check_dilation = false;
};

std::vector<double> lambda_data(const std::string& name, int n) {
  std::vector<double> f(n);
  if (name == "one")
    std::fill(f.begin(), f.end(), 1.0);
  else if (name == "sin")
    for (int i = 0; i < n; ++i) f[i] = 0.6 + 0.4 * std::sin(0.37 * i);
  else
    throw std::invalid_argument("data '" + name + "': expected one or sin");
  return f;
}

int cmd_lambda(const LambdaOpts& lo) {
  GasketGraph g = build_graph(window_by_name(lo.g.window, lo.g.pow), lo.g.level);
  const ExactPoint c = parse_point(lo.g.center);
  const Rational r2 = rat_parse(lo.g.r2);
  std::vector<double> f = lambda_data(lo.f, g.n());
  LambdaValue lv = lambda_functional(g, c, r2, f, lo.g.alpha);
  std::printf("alpha        %.17g\n", lv.alpha);
  std::printf("scale_pow    %d\n", lv.scale_pow);
  std::printf("mantissa     %.17g\n", lv.mantissa);
  std::printf("value        %.17g\n", lv.value());
  std::printf("tail bound   %.3g (mass beyond the window)\n",
              lambda_truncation_bound(std::exp2(g.side_pow), lo.g.alpha, 1.0));
  if (!lo.check_dilation) return 0;
  GasketGraph gd = dilate_graph(g, 1);
  LambdaValue lvd = lambda_functional(gd, dilate(c, 1), r2 * 4, f, lo.g.alpha);
  const bool exact = lvd.mantissa == lv.mantissa && lvd.scale_pow == lv.scale_pow + 1;
  std::printf("dilation     mantissa %s, scale_pow %d -> %d: %s\n",
              lvd.mantissa == lv.mantissa ? "bit-identical" : "DIFFERS", lv.scale_pow,
              lvd.scale_pow, exact ? "exact" : "FAIL");
  return exact ? 0 : 1;
}

// ---------------------------------------------------------------- mc-validate

struct McValidateOpts {
  double alpha = 0.5;
  long long paths = 1000000;
  std::uint64_t seed = 424242;
};

int cmd_mc_validate(const McValidateOpts& o) {
  if (!(o.alpha > 0 && o.alpha < kWalkDimension))
    throw std::invalid_argument("alpha must lie in (0, log2 5)");
  const double beta = o.alpha / kWalkDimension;
  bool ok = true;
  std::printf("alpha %.17g  ->  subordination exponent beta %.17g\n", o.alpha, beta);
  std::printf("jump normalization A_alpha = %.17g\n", stable_scaler(o.alpha));

  const double asym = weight_asymptote(beta);
  for (double m : {1e4, 1e6}) {
    const double scaled = weight_at(beta, m) * std::pow(m, 1.0 + beta);
    const double rel = std::abs(scaled - asym) / asym;
    const bool pass = rel <= 0.05;
    ok = ok && pass;
    std::printf("c_m m^(1+beta) at m=%.0e: %.17g vs %.17g  rel %.2e  %s\n", m, scaled, asym,
                rel, pass ? "ok" : "FAIL");
  }

  SeedPlan plan{o.seed};
  for (double s : {0.5, 1.0, 2.0}) {
    LaplaceCheck c = mc_laplace_check(beta, s, o.paths, plan);
    const double z = std::abs(c.mean - c.expected) / c.stderr_mean;
    const bool pass = z <= 3.0;
    ok = ok && pass;
    std::printf("laplace s=%-4g mean %.8f expected %.8f  z %.2f  %s\n", s, c.mean, c.expected,
                z, pass ? "ok" : "FAIL");
  }

  StepCountSampler sampler(beta);
  const double chi2 = step_count_chi2(sampler, std::min<long long>(o.paths, 400000), plan, 64);
  const double crit = 104.72;  // chi-square 0.999 quantile, 64 dof
  ok = ok && chi2 <= crit;
  std::printf("step-count chi2(64) = %.2f  critical(0.999) = %.2f  %s\n", chi2, crit,
              chi2 <= crit ? "ok" : "FAIL");
  std::printf("tail envelope rejection bound %.4f\n", sampler.envelope_bound());
  std::printf("verdict %s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- mc-harmonic

struct McHarmonicOpts {
  double alpha = 0.5;
  int level = 4;
  long long walks = 100000;
  std::uint64_t seed = 2024;
  std::string r2 = "9/64";
};

int cmd_mc_harmonic(const McHarmonicOpts& o) {
  if (!(o.alpha > 0 && o.alpha < kWalkDimension))
    throw std::invalid_argument("alpha must lie in (0, log2 5)");
  const double beta = o.alpha / kWalkDimension;
  GasketGraph g = build_graph(window_b(), o.level);
  const auto start = g.find_vertex({Rational(0), Rational(0)});
  std::vector<int> dom = interior_ball(g, {Rational(0), Rational(0)}, rat_parse(o.r2));

  // bin 0: a patch on the right; bin 1: the left half-plane
  std::vector<int> target_of(g.n(), -1);
  std::vector<char> in_dom(g.n(), 0);
  for (int v : dom) in_dom[v] = 1;
  for (int v = 0; v < g.n(); ++v) {
    if (in_dom[v] || g.rim[v]) continue;
    if (squared_distance(g.pts[v], {Rational(1, 2), Rational(1, 4)}) <= Rational(1, 64))
      target_of[v] = 0;
    else if (g.pts[v].a < 0)
      target_of[v] = 1;
  }

  FracOptions fo;
  fo.mode = FracMode::Spectral;
  fo.spectral_cap = std::max(fo.spectral_cap, g.n() + 1);
  FractionalOperator op(g, beta, fo);
  const WalkOperator& w = op.walk();
  double probs[2], killed = 0;
  for (int bin = 0; bin < 2; ++bin) {
    Eigen::VectorXd data = Eigen::VectorXd::Zero(op.n());
    for (int r = 0; r < op.n(); ++r)
      if (target_of[w.verts[r]] == bin) data[r] = 1.0;
    HarmonicSolution s = harmonic_solve(op, dom, data);
    const int pos = domain_pos(s.domain, *start, "the start vertex");
    probs[bin] = s.h[pos];
    killed = s.killed_mass[pos];
  }
  const double p_other = std::max(0.0, 1.0 - probs[0] - probs[1] - killed);

  SeedPlan plan{o.seed};
  HarmonicMC mc = mc_harmonic_measure(g, dom, target_of, 2, *start, beta, o.walks, plan);
  if (mc.aborted > 0) std::printf("WARNING: %lld paths hit the step cap\n", mc.aborted);

  bool ok = true;
  auto judge = [&](const char* name, long long count, double p) {
    const double n = (double)mc.paths;
    const double sigma = std::sqrt(std::max(p * (1 - p) * n, 1e-12));
    const double z = ((double)count - p * n) / sigma;
    const bool pass = std::abs(z) <= 3.0;
    ok = ok && pass;
    std::printf("%-10s observed %8lld  expected %10.1f  z %+.2f  %s\n", name, count, p * n, z,
                pass ? "ok" : "FAIL");
  };
  std::printf("alpha %.17g  level %d  domain %d vertices  paths %lld\n", o.alpha, o.level,
              (int)dom.size(), mc.paths);
  judge("patch", mc.hits[0], probs[0]);
  judge("left half", mc.hits[1], probs[1]);
  judge("killed", mc.died, killed);
  judge("other", mc.other, p_other);
  std::printf("mean jumps %.3f +- %.3f\n", mc.mean_jumps(), mc.stderr_jumps());
  std::printf("verdict %s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

// ------------------------------------------------------------------ batteries

struct BhiOpts {
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int level = -1;
  int instances = -1;
  bool print_config = false;
  bool verbose = false;
};

void add_bhi_opts(CLI::App* cmd, BhiOpts& o) {
  cmd->add_option("--config", o.config, "key=value config file (defaults when omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out-dir", o.out_dir, "override out_dir from the config");
  cmd->add_option("--seed", o.seed, "override the master seed")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--level", o.level, "override the lattice level");
  cmd->add_option("--instances", o.instances, "override the instance count");
  cmd->add_flag("--print-config", o.print_config, "print the resolved config and exit");
  cmd->add_flag("--verbose", o.verbose, "progress notes on stderr");
}

ExperimentConfig resolve_config(const BhiOpts& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : parse_config_file(o.config);
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (o.seed_set) cfg.seed = o.seed;
  if (o.level >= 0) cfg.level = o.level;
  if (o.instances >= 0) cfg.instances = o.instances;
  if (o.verbose) cfg.verbose = true;
  return cfg;
}

int cmd_bhi_run(const BhiOpts& o) {
  ExperimentConfig cfg = resolve_config(o);
  if (o.print_config) {
    std::fputs(print_config(cfg).c_str(), stdout);
    return 0;
  }
  const auto t0 = std::chrono::steady_clock::now();
  BhiReport rep = run_bhi(cfg);
  const double wall = wall_since(t0);

  std::filesystem::create_directories(cfg.out_dir);
  write_file(cfg.out_dir + "/report.json", bhi_report_json(cfg, rep));
  write_file(cfg.out_dir + "/ratios.csv", bhi_ratios_csv(rep));

  bool ok = true;
  std::string diag;
  for (const BhiAlphaReport& ar : rep.per_alpha) {
    const double frac = ar.rows.empty() ? 0.0 : (double)ar.excluded / (double)ar.rows.size();
    const bool pass = frac < 0.05;
    ok = ok && pass;
    std::printf("alpha %-5g %s rows %3d  excluded %2d  max R %10.4f  median %8.4f  q90 %8.4f  %s\n",
                ar.alpha, ar.exploratory ? "(exploratory)" : "             ",
                (int)ar.rows.size(), ar.excluded, ar.max_R, ar.median_R, ar.q90_R,
                pass ? "ok" : "EXCLUDED >= 5%");
    diag += (diag.empty() ? "" : "; ") + std::to_string(ar.excluded) + "/" +
            std::to_string(ar.rows.size()) + " excluded at alpha " + fmt_field(ar.alpha);
  }
  append_manifest(cfg.out_dir, "ratio", cfg, {"report.json", "ratios.csv"}, wall,
                  {{"excluded_max_fraction", 0.05}}, diag);
  std::printf("wall seconds %.1f, outputs in %s\n", wall, cfg.out_dir.c_str());
  if (!ok) std::printf("FAIL: an alpha row excluded 5%% or more of its instances\n");
  return ok ? 0 : 1;
}

int cmd_bhi_lemmas(const BhiOpts& o) {
  ExperimentConfig cfg = resolve_config(o);
  if (o.print_config) {
    std::fputs(print_config(cfg).c_str(), stdout);
    return 0;
  }
  const auto t0 = std::chrono::steady_clock::now();
  LemmaReport rep = run_lemma_battery(cfg);
  const double wall = wall_since(t0);

  std::filesystem::create_directories(cfg.out_dir);
  write_file(cfg.out_dir + "/report_lemmas.json", lemma_report_json(cfg, rep));
  write_file(cfg.out_dir + "/constants.csv", lemma_constants_csv(rep));

  bool ok = true;
  std::string diag;
  for (const LemmaAlphaReport& ar : rep.per_alpha) {
    const double frac = ar.rows.empty() ? 0.0 : (double)ar.excluded / (double)ar.rows.size();
    const bool pass = frac < 0.05 && std::isfinite(ar.c_fac_max) && ar.c_fac_min > 0;
    ok = ok && pass;
    std::printf("alpha %-5g rows %3d  excluded %2d  c_fac [%0.4g, %0.4g]  halving esc %.3f up %.3f  homothety %.1e  %s\n",
                ar.alpha, (int)ar.rows.size(), ar.excluded, ar.c_fac_min, ar.c_fac_max,
                ar.escape_half_ratio, ar.upper_half_ratio, ar.fac_homothety_rel,
                pass ? "ok" : "FAIL");
    diag += (diag.empty() ? "" : "; ") + std::to_string(ar.excluded) + "/" +
            std::to_string(ar.rows.size()) + " excluded at alpha " + fmt_field(ar.alpha);
  }
  append_manifest(cfg.out_dir, "lemmas", cfg, {"report_lemmas.json", "constants.csv"}, wall,
                  {{"excluded_max_fraction", 0.05}}, diag);
  std::printf("wall seconds %.1f, outputs in %s\n", wall, cfg.out_dir.c_str());
  if (!ok) std::printf("FAIL: excluded rows or degenerate constants\n");
  return ok ? 0 : 1;
}

int cmd_bhi_scaling(const BhiOpts& o) {
  ExperimentConfig cfg = resolve_config(o);
  if (o.print_config) {
    std::fputs(print_config(cfg).c_str(), stdout);
    return 0;
  }
  const auto t0 = std::chrono::steady_clock::now();
  ScalingReport rep = run_scaling_suite(cfg);
  const double wall = wall_since(t0);

  std::filesystem::create_directories(cfg.out_dir);
  write_file(cfg.out_dir + "/report_scaling.json", scaling_report_json(cfg, rep));

  bool ok = true;
  const double dw_err = std::abs(rep.dw.slope - rep.dw_target);
  ok = ok && dw_err <= 0.1;
  std::printf("walk dimension fit %.4f  target %.4f  |err| %.4f  %s\n", rep.dw.slope,
              rep.dw_target, dw_err, dw_err <= 0.1 ? "ok" : "FAIL");
  for (const ScalingReport::AlphaSlope& as : rep.stability) {
    const double err = std::abs(as.fit.slope - as.alpha);
    ok = ok && err <= 0.1;
    std::printf("jump-count slope at alpha %-5g: %.4f  |err| %.4f  %s\n", as.alpha,
                as.fit.slope, err, err <= 0.1 ? "ok" : "FAIL");
  }
  ok = ok && rep.lambda_exact;
  std::printf("dyadic dilation identity: %s\n", rep.lambda_exact ? "exact" : "FAIL");
  append_manifest(cfg.out_dir, "scaling", cfg, {"report_scaling.json"}, wall,
                  {{"dw_abs_tol", 0.1}, {"alpha_slope_abs_tol", 0.1}},
                  rep.lambda_exact ? "dilation identity exact" : "dilation identity BROKEN");
  std::printf("wall seconds %.1f, outputs in %s\n", wall, cfg.out_dir.c_str());
  std::printf("verdict %s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gasketlab: alpha-stable jump processes on the Sierpinski gasket lattice"};
  app.require_subcommand(1);
  int rc = 0;

  GraphOpts bg;
  auto* c_bg = app.add_subcommand("build-graph", "build a lattice window and print its stats");
  add_graph_opts(c_bg, bg, false);
  c_bg->add_option("--out", bg.out, "write a vertex CSV (exact rational coordinates)");
  c_bg->callback([&] { rc = cmd_build_graph(bg); });

  SplineEvalOpts se;
  auto* c_se = app.add_subcommand("spline-eval", "exact corner-spline states and values");
  c_se->add_option("--dump", se.dump, "dump all descent states of the given depth as CSV");
  c_se->add_option("--path", se.path, "descent path, digits 0-2 (e.g. 021)");
  c_se->add_option("--point", se.point, "evaluate at a dyadic point 'a,b' (rationals)");
  c_se->add_option("--corner", se.corner, "unit corner of the home cell (0, 1 or 2)")
      ->default_val(0);
  c_se->add_option("--out", se.out, "write the dump to a file instead of stdout");
  c_se->callback([&] { rc = cmd_spline_eval(se); });

  int sv_depth = 6;
  auto* c_sv = app.add_subcommand("spline-verify",
                                  "exhaustive exact check of the corner-spline inequalities");
  c_sv->add_option("--depth", sv_depth, "maximum descent depth")->default_val(6);
  c_sv->callback([&] { rc = cmd_spline_verify(sv_depth); });

  CutoffOpts co;
  auto* c_co = app.add_subcommand("cutoff", "assemble a piecewise-spline cutoff");
  c_co->add_option("--level", co.level, "tiling depth of the cell selection")->default_val(2);
  c_co->add_option("--cells", co.cells, "selected cell indices")->required()->delimiter(',');
  c_co->add_option("--eval-level", co.eval_level, "evaluation depth (default: tiling level)");
  c_co->add_option("--alpha", co.alpha, "also bound |(I-P)^(alpha/dw) phi| at this exponent");
  c_co->add_option("--mode", co.mode, "operator mode for the bound")->default_val("spectral");
  c_co->add_option("--out", co.out, "write exact vertex values as CSV");
  c_co->callback([&] { rc = cmd_cutoff(co); });

  HarmonicOpts ho;
  auto* c_sh = app.add_subcommand("solve-harmonic",
                                  "harmonic extension of boundary data into an open ball");
  add_graph_opts(c_sh, ho.g, true);
  c_sh->add_option("--target-center", ho.target_center, "indicator patch center 'a,b'")
      ->default_val(ho.target_center);
  c_sh->add_option("--target-r2", ho.target_r2, "indicator patch squared radius")
      ->default_val(ho.target_r2);
  c_sh->add_option("--out", ho.g.out, "write the solution as CSV");
  c_sh->callback([&] { rc = cmd_solve_harmonic(ho); });

  GraphOpts eo;
  auto* c_et = app.add_subcommand("exit-time", "expected jump counts before leaving a ball");
  add_graph_opts(c_et, eo, true);
  c_et->add_option("--out", eo.out, "write per-vertex expectations as CSV");
  c_et->callback([&] { rc = cmd_exit_time(eo); });

  GraphOpts go;
  int green_cap = 3000;
  auto* c_gr = app.add_subcommand("green", "dense Green table of a ball domain");
  add_graph_opts(c_gr, go, true);
  c_gr->add_option("--cap", green_cap, "refuse domains larger than this")->default_val(3000);
  c_gr->add_option("--out", go.out, "write the full table as CSV");
  c_gr->callback([&] { rc = cmd_green(go, green_cap); });

  LambdaOpts lo;
  lo.g.level = 5;
  lo.g.center = "3/4,1/4";
  lo.g.r2 = "9/16";
  auto* c_la = app.add_subcommand("lambda", "truncated jump-kernel functional");
  add_graph_opts(c_la, lo.g, true);
  c_la->add_option("--data", lo.f, "test data on vertices: one or sin")->default_val("sin");
  c_la->add_flag("--check-dilation", lo.check_dilation,
                 "verify the exact dyadic dilation identity");
  c_la->callback([&] { rc = cmd_lambda(lo); });

  McValidateOpts mv;
  auto* c_mv = app.add_subcommand("mc-validate",
                                  "subordination sampler checks: Laplace transform, "
                                  "step-count chi-square, tail asymptote");
  c_mv->add_option("--alpha", mv.alpha, "stability exponent")->required();
  c_mv->add_option("--paths", mv.paths, "Monte Carlo sample count")->default_val(1000000);
  c_mv->add_option("--seed", mv.seed, "master seed")->default_val(424242);
  c_mv->callback([&] { rc = cmd_mc_validate(mv); });

  McHarmonicOpts mh;
  auto* c_mh = app.add_subcommand("mc-harmonic",
                                  "subordinate-walk exit law vs the spectral solve");
  c_mh->add_option("--alpha", mh.alpha, "stability exponent")->required();
  c_mh->add_option("--level", mh.level, "lattice level")->default_val(4);
  c_mh->add_option("--walks", mh.walks, "Monte Carlo path count")->default_val(100000);
  c_mh->add_option("--seed", mh.seed, "master seed")->default_val(2024);
  c_mh->add_option("--r2", mh.r2, "domain ball squared radius")->default_val("9/64");
  c_mh->callback([&] { rc = cmd_mc_harmonic(mh); });

  auto* c_bhi = app.add_subcommand("bhi", "randomized-domain experiment batteries");
  c_bhi->require_subcommand(1);
  BhiOpts bo_run, bo_lem, bo_sca;
  auto* c_run = c_bhi->add_subcommand("run", "boundary ratio battery (report.json, ratios.csv)");
  add_bhi_opts(c_run, bo_run);
  c_run->callback([&] { rc = cmd_bhi_run(bo_run); });
  auto* c_lem = c_bhi->add_subcommand(
      "lemmas", "constant battery (report_lemmas.json, constants.csv)");
  add_bhi_opts(c_lem, bo_lem);
  c_lem->callback([&] { rc = cmd_bhi_lemmas(bo_lem); });
  auto* c_sca = c_bhi->add_subcommand("scaling", "walk-dimension and slope fits "
                                                 "(report_scaling.json)");
  add_bhi_opts(c_sca, bo_sca);
  c_sca->callback([&] { rc = cmd_bhi_scaling(bo_sca); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // clean --help vs usage error
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
