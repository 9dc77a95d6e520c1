#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "levypass/common.hpp"
#include "levypass/parallel.hpp"
#include "levypass/process.hpp"
#include "levypass/rng.hpp"
#include "levypass/zero_finder.hpp"

namespace levypass {

// One simulated first-passage outcome. For a diffusive crossing k = l = 0 by
// path continuity; for a jump crossing k + l is the jump magnitude.
struct PassageSample {
  bool hit = false;
  double t = 0.0;
  double k = 0.0;  // overshoot X_T - x
  double l = 0.0;  // undershoot x - X_{T-}
};

struct SimConfig {
  long n_paths = 100000;
  double horizon = 0.0;  // 0: regime default (50 x/|E| or 50 x^2 phi''(0))
  double h_euler = 0.0;  // max diffusion segment length; 0: one per jump epoch.
                         // The bridge machinery is exact in law for any value.
  std::uint64_t seed = 1;
  double level = 1.0;
  int threads = 0;  // 0: default_thread_count()
};

inline double default_horizon(const ProcessSpec& spec, double x) {
  const double mean = mean_x1(spec);
  if (std::abs(mean) > 1e-12) return 50.0 * std::max(x, 1.0) / std::abs(mean);
  const double phi2 = 1.0 + spec.measure.moment2();
  return 50.0 * std::max(x * x, 1.0) * phi2;
}

namespace detail {

// Inverse-Gaussian draw from shared primitives (keeps coupled runs aligned).
inline double ig_from(double z, double u, double mu, double lambda) {
  const double y = z * z;
  const double x1 =
      mu + mu * mu * y / (2.0 * lambda) -
      mu / (2.0 * lambda) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
  if (u <= mu / (mu + x1)) return x1;
  return mu * mu / x1;
}

// First-passage time of a Brownian bridge from a to b over [0, dt], given the
// bridge crosses level x > a. The conditional law is GIG(1/2): tau =
// dt V/(1+V) with V inverse-Gaussian(|x-a|/|x-b|, (x-a)^2/dt).
inline double bridge_crossing_time(double z, double u, double a, double b,
                                   double x, double dt) {
  const double da = x - a;
  const double db = std::abs(x - b);
  if (db < 1e-300) return dt;
  const double v = ig_from(z, u, da / db, da * da / dt);
  return dt * v / (1.0 + v);
}

// Per-spec constants hoisted out of the path loop.
struct SimKernel {
  double rate;       // nu(R)
  double drift_eff;  // c + int y 1_{|y|<1} nu(dy): deterministic slope between jumps
  const JumpMeasure* measure;

  explicit SimKernel(const ProcessSpec& spec)
      : rate(spec.measure.mass()),
        drift_eff(spec.drift + spec.measure.compensator_linear()),
        measure(&spec.measure) {}

  // Simulate one path against ascending levels; out[i] receives the first
  // passage of levels[i]. Exact in law: Gaussian endpoints, bridge crossing
  // probabilities, and GIG crossing times carry no step-size bias.
  void run(Rng& rng, std::span<const double> levels,
           std::span<PassageSample> out, double horizon, double h_cap) const {
    for (auto& o : out) o = PassageSample{};
    std::size_t lvl = 0;
    // levels at or below the origin are crossed immediately
    while (lvl < levels.size() && levels[lvl] <= 0.0) {
      out[lvl] = {true, 0.0, 0.0, 0.0};
      ++lvl;
    }
    double pos = 0.0, t = 0.0;
    while (t < horizon && lvl < levels.size()) {
      const double dt_jump =
          rate > 0.0 ? rng.exponential(rate) : kInf;
      double seg = std::min(dt_jump, horizon - t);
      if (h_cap > 0.0) seg = std::min(seg, h_cap);
      const bool jump_now = seg == dt_jump;

      const double b = pos - drift_eff * seg + std::sqrt(seg) * rng.normal();
      // diffusive crossings within the segment, level by level on sub-bridges
      double t0 = t, a = pos;
      while (lvl < levels.size()) {
        const double x = levels[lvl];
        const double dt = t + seg - t0;
        bool crossed = false;
        double tau = 0.0;
        if (b > x) {
          crossed = true;
          tau = bridge_crossing_time(rng.normal(), rng.uniform(), a, b, x, dt);
        } else {
          const double p = std::exp(-2.0 * (x - a) * (x - b) / dt);
          if (rng.uniform() < p) {
            crossed = true;
            tau = bridge_crossing_time(rng.normal(), rng.uniform(), a, b, x, dt);
          }
        }
        if (!crossed) break;
        t0 += tau;
        a = x;
        out[lvl] = {true, t0, 0.0, 0.0};
        ++lvl;
      }
      pos = b;
      t += seg;
      if (jump_now && t < horizon && lvl < levels.size()) {
        const double y = measure->sample(rng);
        while (lvl < levels.size() && pos + y > levels[lvl]) {
          out[lvl] = {true, t, pos + y - levels[lvl], levels[lvl] - pos};
          ++lvl;
        }
        pos += y;
      }
    }
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Estimators. All drivers use per-path generator substreams and fixed-order
// chunk reduction, so results are bit-identical for any worker count.
// ---------------------------------------------------------------------------

struct FEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long hits = 0;
  long n_paths = 0;
};

// Monte Carlo F(theta, mu, rho, x) = E[e^{-theta T - mu K - rho L}; T <= horizon].
inline FEstimate estimate_F(const ProcessSpec& spec, double theta, double mu,
                            double rho, double x, const SimConfig& cfg) {
  FEstimate est;
  est.n_paths = cfg.n_paths;
  if (x <= 0.0) {  // T_0 = 0 a.s.: immediate crossing, no randomness
    est.value = 1.0;
    est.hits = cfg.n_paths;
    return est;
  }
  const double horizon = cfg.horizon > 0.0 ? cfg.horizon : default_horizon(spec, x);
  const detail::SimKernel kernel(spec);
  const double levels[1] = {x};

  const long chunk = 4096;
  const long n_chunks = (cfg.n_paths + chunk - 1) / chunk;
  std::vector<double> sum_w(n_chunks, 0.0), sum_w2(n_chunks, 0.0);
  std::vector<long> hits(n_chunks, 0);
  parallel_chunks(cfg.n_paths, chunk, cfg.threads,
                  [&](long ci, long begin, long end) {
                    PassageSample s[1];
                    for (long i = begin; i < end; ++i) {
                      Rng rng = Rng::for_path(cfg.seed, i);
                      kernel.run(rng, levels, s, horizon, cfg.h_euler);
                      if (s[0].hit) {
                        const double w = std::exp(-theta * s[0].t - mu * s[0].k -
                                                  rho * s[0].l);
                        sum_w[ci] += w;
                        sum_w2[ci] += w * w;
                        ++hits[ci];
                      }
                    }
                  });
  double sw = 0.0, sw2 = 0.0;
  for (long ci = 0; ci < n_chunks; ++ci) {
    sw += sum_w[ci];
    sw2 += sum_w2[ci];
    est.hits += hits[ci];
  }
  const double n = double(cfg.n_paths);
  est.value = sw / n;
  est.std_error = std::sqrt(std::max(0.0, sw2 / n - est.value * est.value) / n);
  return est;
}

// One pass, many levels: per-level estimates of F for weights e^{-theta t}.
inline std::vector<FEstimate> estimate_F_multi(const ProcessSpec& spec,
                                               double theta, double mu,
                                               double rho,
                                               std::span<const double> levels,
                                               const SimConfig& cfg) {
  std::vector<double> xs(levels.begin(), levels.end());
  if (!std::is_sorted(xs.begin(), xs.end()))
    throw DomainError("levels must be ascending");
  const double horizon =
      cfg.horizon > 0.0 ? cfg.horizon : default_horizon(spec, xs.back());
  const detail::SimKernel kernel(spec);

  const long chunk = 4096;
  const long n_chunks = (cfg.n_paths + chunk - 1) / chunk;
  const std::size_t m = xs.size();
  std::vector<std::vector<double>> sum_w(n_chunks), sum_w2(n_chunks);
  std::vector<std::vector<long>> hits(n_chunks);
  parallel_chunks(cfg.n_paths, chunk, cfg.threads,
                  [&](long ci, long begin, long end) {
                    sum_w[ci].assign(m, 0.0);
                    sum_w2[ci].assign(m, 0.0);
                    hits[ci].assign(m, 0);
                    std::vector<PassageSample> s(m);
                    for (long i = begin; i < end; ++i) {
                      Rng rng = Rng::for_path(cfg.seed, i);
                      kernel.run(rng, xs, s, horizon, cfg.h_euler);
                      for (std::size_t j = 0; j < m; ++j) {
                        if (!s[j].hit) continue;
                        const double w = std::exp(-theta * s[j].t - mu * s[j].k -
                                                  rho * s[j].l);
                        sum_w[ci][j] += w;
                        sum_w2[ci][j] += w * w;
                        ++hits[ci][j];
                      }
                    }
                  });
  std::vector<FEstimate> out(m);
  const double n = double(cfg.n_paths);
  for (std::size_t j = 0; j < m; ++j) {
    double sw = 0.0, sw2 = 0.0;
    long h = 0;
    for (long ci = 0; ci < n_chunks; ++ci) {
      sw += sum_w[ci][j];
      sw2 += sum_w2[ci][j];
      h += hits[ci][j];
    }
    out[j].value = sw / n;
    out[j].std_error =
        std::sqrt(std::max(0.0, sw2 / n - out[j].value * out[j].value) / n);
    out[j].hits = h;
    out[j].n_paths = cfg.n_paths;
  }
  return out;
}

// Raw conditional-on-hit samples of (T, K, L) at one level.
inline std::vector<PassageSample> sample_passages(const ProcessSpec& spec,
                                                  const SimConfig& cfg) {
  const double x = cfg.level;
  const double horizon = cfg.horizon > 0.0 ? cfg.horizon : default_horizon(spec, x);
  const detail::SimKernel kernel(spec);
  const double levels[1] = {x};

  const long chunk = 4096;
  const long n_chunks = (cfg.n_paths + chunk - 1) / chunk;
  std::vector<std::vector<PassageSample>> per_chunk(n_chunks);
  parallel_chunks(cfg.n_paths, chunk, cfg.threads,
                  [&](long ci, long begin, long end) {
                    per_chunk[ci].reserve(end - begin);
                    PassageSample s[1];
                    for (long i = begin; i < end; ++i) {
                      Rng rng = Rng::for_path(cfg.seed, i);
                      kernel.run(rng, levels, s, horizon, cfg.h_euler);
                      per_chunk[ci].push_back(s[0]);
                    }
                  });
  std::vector<PassageSample> out;
  out.reserve(cfg.n_paths);
  for (auto& c : per_chunk) out.insert(out.end(), c.begin(), c.end());
  return out;
}

// Conditional-on-hit empirical law of the normalized triplet.
struct TripletLaw {
  int regime = 0;  // sign of E(X_1)
  double scale_sigma = 0.0;  // limit std dev of the normalized time
  std::vector<double> t_norm;  // (T + x/phi'(-g0))/sqrt(x), or T/x^2 when E=0
  std::vector<double> k, l;
  long hits = 0;
  long n_paths = 0;
};

inline TripletLaw empirical_triplet_law(const ProcessSpec& spec, double x,
                                        const SimConfig& cfg_in) {
  SimConfig cfg = cfg_in;
  cfg.level = x;
  const double mean = mean_x1(spec);
  TripletLaw law;
  law.regime = std::abs(mean) <= 1e-12 ? 0 : (mean < 0.0 ? -1 : +1);
  double shift = 0.0;
  if (law.regime != 0) {
    double g0 = 0.0;
    if (law.regime < 0) {
      g0 = find_real_zeros(spec, 0.0).gamma0;
    }
    const double d1 = eval_phi_derivative(spec, cplx(-g0, 0.0), 1).real();
    const double d2 = eval_phi_derivative(spec, cplx(-g0, 0.0), 2).real();
    shift = 1.0 / d1;
    law.scale_sigma = std::sqrt(std::max(0.0, -d2 / (d1 * d1 * d1)));
  }
  const auto samples = sample_passages(spec, cfg);
  law.n_paths = cfg.n_paths;
  for (const auto& s : samples) {
    if (!s.hit) continue;
    ++law.hits;
    if (law.regime == 0)
      law.t_norm.push_back(s.t / (x * x));
    else
      law.t_norm.push_back((s.t + x * shift) / std::sqrt(x));
    law.k.push_back(s.k);
    law.l.push_back(s.l);
  }
  if (law.hits < 1000)
    throw TooFewHits("fewer than 1000 hits: raise n_paths or the horizon");
  return law;
}

}  // namespace levypass
