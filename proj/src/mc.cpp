#include "gasketlab/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gasketlab/subordination.hpp"

namespace gasketlab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// uniform on (0,1), never exactly 0 or 1
inline double unit_open(std::mt19937_64& rng) { return ((rng() >> 11) + 0.5) * 0x1.0p-53; }

// (m-1/2)^{-beta} - (m+1/2)^{-beta}, cancellation-free for large m
double envelope_step(double beta, double m) {
  const double a = 0.5 / m;
  const double lp = std::log1p(a), lm = std::log1p(-a);
  return std::pow(m, -beta) * std::exp(-beta * lp) * std::expm1(beta * (lp - lm));
}

// Packed degree-4 adjacency over non-rim vertices; stepping onto the rim is
// detected through the rim flags, so rim rows are never walked from.
struct FlatWalk {
  std::vector<int> adj4;
  std::vector<char> rim;
  explicit FlatWalk(const GasketGraph& g) : adj4((size_t)g.n() * 4, -1), rim(g.rim.begin(), g.rim.end()) {
    for (int v = 0; v < g.n(); ++v) {
      if (g.rim[v]) continue;
      if (g.degree(v) != 4) throw std::logic_error("walk: non-rim vertex without 4 neighbors");
      for (int j = 0; j < 4; ++j) adj4[(size_t)v * 4 + j] = g.nbr_begin(v)[j];
    }
  }
  int step(int v, std::mt19937_64& rng) const { return adj4[(size_t)v * 4 + (rng() & 3)]; }
};

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = (int)x.size();
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

}  // namespace

std::uint64_t SeedPlan::stream(std::uint64_t index) const {
  return splitmix64(master ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
}

StepCountSampler::StepCountSampler(double beta, int prefix) : beta_(beta), prefix_(prefix) {
  if (prefix < 1) throw std::invalid_argument("step sampler: prefix must be positive");
  SubordinationWeights w = make_weights(beta, prefix);
  cum_.assign(prefix + 1, 0.0);
  for (int m = 1; m <= prefix; ++m) cum_[m] = cum_[m - 1] + w.c[m];
  tail_ = w.tail;
  s_ = prefix + 0.5;
  kbound_ = 1.0;
  if (beta < 1.0 && tail_ > 0.0) {
    // c_m / (tail * g_m) increases toward its limit; scan a margin anyway.
    const double lim = 1.0 / (std::tgamma(1.0 - beta) * std::pow(s_, beta) * tail_);
    double k = lim;
    for (int m = prefix + 1; m <= prefix + 256; ++m) {
      const double r = weight_at(beta, m) / (tail_ * std::pow(s_, beta) * envelope_step(beta, (double)m));
      k = std::max(k, r);
    }
    kbound_ = k * (1.0 + 1e-9);
  }
}

double StepCountSampler::prob(long long m) const {
  if (m < 1) return 0.0;
  if (m <= prefix_) return cum_[m] - cum_[m - 1];
  return weight_at(beta_, m);
}

long long StepCountSampler::draw(std::mt19937_64& rng) const {
  const double u = unit_open(rng);
  if (u <= cum_[prefix_]) {
    auto it = std::lower_bound(cum_.begin() + 1, cum_.end(), u);
    return (long long)(it - cum_.begin());
  }
  const double senv = std::pow(s_, beta_);
  for (;;) {
    const double u1 = unit_open(rng);
    const double x = s_ * std::pow(u1, -1.0 / beta_);
    long long m;
    if (x >= 9.0e18)
      m = (long long)9e18;
    else
      m = (long long)std::ceil(x - 0.5);
    if (m <= prefix_) m = prefix_ + 1;  // ceil roundoff at the seam
    const double genv = senv * envelope_step(beta_, (double)m);
    const double accept = weight_at(beta_, m) / (kbound_ * tail_ * genv);
    if (unit_open(rng) <= accept) return m;
  }
}

double HarmonicMC::mean_jumps() const {
  const long long done = paths - aborted;
  return done > 0 ? (double)total_jumps / (double)done : 0.0;
}

double HarmonicMC::stderr_jumps() const {
  const long long done = paths - aborted;
  if (done < 2) return std::numeric_limits<double>::infinity();
  const double mean = mean_jumps();
  const double var = std::max(0.0, jump_sq_sum / done - mean * mean);
  return std::sqrt(var / done);
}

HarmonicMC mc_harmonic_measure(const GasketGraph& g, const std::vector<int>& domain,
                               const std::vector<int>& target_of, int n_bins, int start,
                               double beta, long long n_paths, const SeedPlan& seeds,
                               long long step_cap) {
  if ((int)target_of.size() != g.n())
    throw std::invalid_argument("mc harmonic: target map size mismatch");
  std::vector<char> in_dom(g.n(), 0);
  for (int v : domain) {
    if (v < 0 || v >= g.n() || g.rim[v])
      throw std::invalid_argument("mc harmonic: domain vertex missing or on the rim");
    in_dom[v] = 1;
  }
  if (start < 0 || start >= g.n() || !in_dom[start])
    throw std::invalid_argument("mc harmonic: start vertex must lie in the domain");

  FlatWalk walk(g);
  StepCountSampler sampler(beta);
  HarmonicMC out;
  out.hits.assign(n_bins, 0);

  for (long long p = 0; p < n_paths; ++p) {
    std::mt19937_64 rng(seeds.stream((std::uint64_t)p));
    int pos = start;
    long long used = 0, jumps = 0;
    bool dead = false, done = false;
    while (!done) {
      // The proposed step count can be astronomically large; absorption at the
      // rim ends it early, so only steps actually walked count against the cap.
      const long long m = sampler.draw(rng);
      ++jumps;
      bool capped = false;
      for (long long i = 0; i < m; ++i) {
        if (used == step_cap) {
          capped = true;
          break;
        }
        ++used;
        pos = walk.step(pos, rng);
        if (walk.rim[pos]) {
          dead = true;
          break;
        }
      }
      if (capped) {
        ++out.aborted;
        break;
      }
      if (dead) {
        ++out.died;
        done = true;
      } else if (!in_dom[pos]) {
        const int t = target_of[pos];
        if (t >= 0) {
          if (t >= n_bins) throw std::invalid_argument("mc harmonic: target bin out of range");
          ++out.hits[t];
        } else {
          ++out.other;
        }
        done = true;
      }
    }
    ++out.paths;
    if (done) {
      out.total_jumps += jumps;
      out.jump_sq_sum += (double)jumps * (double)jumps;
    }
  }
  return out;
}

namespace {

// Mean count (base steps or jumps) to leave each concentric ball.
ScalingFit scaling_fit(const GasketGraph& g, const ExactPoint& center,
                       const std::vector<Rational>& radii_sq, double beta, long long n_paths,
                       const SeedPlan& seeds, long long step_cap, bool count_jumps) {
  auto c0 = g.find_vertex(center);
  if (!c0 || g.rim[*c0]) throw std::invalid_argument("scaling fit: center must be an interior vertex");
  if (radii_sq.size() < 2) throw std::invalid_argument("scaling fit: need at least two radii");
  FlatWalk walk(g);
  StepCountSampler sampler(beta);

  ScalingFit fit;
  for (size_t ri = 0; ri < radii_sq.size(); ++ri) {
    std::vector<char> in_ball(g.n(), 0);
    for (int v : ball_vertices(g, center, radii_sq[ri])) {
      if (g.rim[v])
        throw std::invalid_argument("scaling fit: ball reaches the window rim; enlarge the window");
      in_ball[v] = 1;
    }
    double total = 0.0;
    long long done = 0;
    for (long long p = 0; p < n_paths; ++p) {
      std::mt19937_64 rng(seeds.stream(ri * (std::uint64_t)n_paths + (std::uint64_t)p));
      int pos = *c0;
      long long used = 0, count = 0;
      for (;;) {
        if (count_jumps) {
          const long long m = sampler.draw(rng);
          ++count;
          bool dead = false, capped = false;
          for (long long i = 0; i < m; ++i) {
            if (used == step_cap) {
              capped = true;
              break;
            }
            ++used;
            pos = walk.step(pos, rng);
            if (walk.rim[pos]) {
              dead = true;
              break;
            }
          }
          if (capped) {
            count = -1;  // aborted
            break;
          }
          if (dead || !in_ball[pos]) break;
        } else {
          pos = walk.step(pos, rng);
          ++count;
          if (!in_ball[pos]) break;
          if (count > step_cap) {
            count = -1;
            break;
          }
        }
      }
      if (count >= 0) {
        total += (double)count;
        ++done;
      }
    }
    fit.log2_r.push_back(0.5 * std::log2(to_double(radii_sq[ri])));
    fit.log2_mean.push_back(std::log2(total / (double)done));
  }
  fit.slope = least_squares_slope(fit.log2_r, fit.log2_mean);
  return fit;
}

}  // namespace

ScalingFit mc_walk_dimension_fit(const GasketGraph& g, const ExactPoint& center,
                                 const std::vector<Rational>& radii_sq, long long n_paths,
                                 const SeedPlan& seeds) {
  return scaling_fit(g, center, radii_sq, 1.0, n_paths, seeds, 1LL << 40, false);
}

ScalingFit mc_stability_fit(const GasketGraph& g, const ExactPoint& center,
                            const std::vector<Rational>& radii_sq, double beta,
                            long long n_paths, const SeedPlan& seeds, long long step_cap) {
  return scaling_fit(g, center, radii_sq, beta, n_paths, seeds, step_cap, true);
}

double kanter_stable(double beta, std::mt19937_64& rng) {
  if (beta >= 1.0) return 1.0;  // degenerate subordinator
  const double u = unit_open(rng);
  const double w = -std::log(unit_open(rng));
  const double ln_a = (beta * std::log(std::sin(M_PI * beta * u)) +
                       (1.0 - beta) * std::log(std::sin(M_PI * (1.0 - beta) * u)) -
                       std::log(std::sin(M_PI * u))) /
                      (1.0 - beta);
  return std::exp(((1.0 - beta) / beta) * (ln_a - std::log(w)));
}

LaplaceCheck mc_laplace_check(double beta, double s, long long n_samples, const SeedPlan& seeds) {
  std::mt19937_64 rng(seeds.stream((std::uint64_t)std::llround(s * 4096.0)));
  double sum = 0.0, sq = 0.0;
  for (long long i = 0; i < n_samples; ++i) {
    const double v = std::exp(-s * kanter_stable(beta, rng));
    sum += v;
    sq += v * v;
  }
  LaplaceCheck out;
  out.mean = sum / (double)n_samples;
  const double var = std::max(0.0, sq / (double)n_samples - out.mean * out.mean);
  out.stderr_mean = std::sqrt(var / (double)n_samples);
  out.expected = std::exp(-std::pow(s, beta));
  return out;
}

double step_count_chi2(const StepCountSampler& sampler, long long n_samples,
                       const SeedPlan& seeds, int bins) {
  std::mt19937_64 rng(seeds.stream(0));
  std::vector<long long> count(bins + 1, 0);
  for (long long i = 0; i < n_samples; ++i) {
    const long long m = sampler.draw(rng);
    if (m <= bins)
      ++count[m - 1];
    else
      ++count[bins];
  }
  double chi2 = 0.0, head = 0.0;
  for (int m = 1; m <= bins; ++m) {
    const double e = (double)n_samples * sampler.prob(m);
    head += sampler.prob(m);
    const double d = (double)count[m - 1] - e;
    chi2 += d * d / e;
  }
  const double etail = (double)n_samples * (1.0 - head);
  const double d = (double)count[bins] - etail;
  chi2 += d * d / etail;
  return chi2;
}

}  // namespace gasketlab
