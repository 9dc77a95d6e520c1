#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "levypass/common.hpp"
#include "levypass/mc_engine.hpp"
#include "levypass/process.hpp"
#include "levypass/stats.hpp"
#include "levypass/transform_core.hpp"
#include "levypass/zero_finder.hpp"

namespace levypass {

struct TwoSidedUnsupported : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Gaussian limit of the normalized hitting time, conditionally on {T_x < inf}:
//   (T_x + x / phi'(-g)) / sqrt(x)  =>  N(0, -phi''(-g)/phi'(-g)^3),
// with g = gamma0(0) when E(X_1) < 0 and g = 0 when E(X_1) > 0.
// ---------------------------------------------------------------------------

struct GaussianLimit {
  double mean_shift_coeff = 0.0;  // 1/phi'(-g): time units per level unit
  double variance = 0.0;
  double anchor = 0.0;  // -g, the phi evaluation point
};

inline GaussianLimit gaussian_limit(const ProcessSpec& spec) {
  const double mean = mean_x1(spec);
  if (std::abs(mean) <= 1e-12)
    throw WrongRegime("E(X_1) = 0: the time norming is T_x/x^2 (hitting_law_rho)");
  double g = 0.0;
  if (mean < 0.0) g = find_real_zeros(spec, 0.0).gamma0;
  const double d1 = eval_phi_derivative(spec, cplx(-g, 0.0), 1).real();
  const double d2 = eval_phi_derivative(spec, cplx(-g, 0.0), 2).real();
  GaussianLimit lim;
  lim.anchor = -g;
  lim.mean_shift_coeff = 1.0 / d1;
  lim.variance = -d2 / (d1 * d1 * d1);
  if (!(lim.variance > 0.0)) throw Error("limit variance must be positive");
  return lim;
}

// Laplace transform of the zero-mean time limit: T_x/x^2 converges to the
// first passage of level 1/sqrt(phi''(0)) by a standard Brownian motion, so
//   int e^{-theta u} rho(du) = exp(-sqrt(2 theta / phi''(0))).
inline double hitting_law_rho(const ProcessSpec& spec, double theta) {
  if (std::abs(mean_x1(spec)) > 1e-10)
    throw WrongRegime("hitting_law_rho requires E(X_1) = 0");
  if (theta < 0.0) throw DomainError("theta must be nonnegative");
  const double phi2 = eval_phi_derivative(spec, 0.0, 2).real();
  return std::exp(-std::sqrt(2.0 * theta / phi2));
}

// ---------------------------------------------------------------------------
// Limit law w of (K_x, L_x) for spectrally positive measures:
//   w(dk, dl) = atom * delta_{0,0} + weight(l) nu(l + dk) dl,
// with the regime-specific weight
//   E<0: (e^{g0 l} - 1)/(-E)    E>0: (1 - e^{-g0* l})/E    E=0: 2 l/phi''(0).
// L has density weight(l) nu([l, inf)); S = K + L given L = l follows
// nu restricted to (l, inf), normalized.
// ---------------------------------------------------------------------------

struct OvershootLaw {
  int regime = -1;         // sign of E(X_1)
  double atom = 0.0;       // mass at (0, 0)
  double gamma = 0.0;      // gamma0(0), gamma0*(0), or 0 in the E=0 regime
  double norm = 0.0;       // 1/(-E), 1/E, or 1/phi''(0)
  double ac_mass = 0.0;    // integral of the continuous part (for checks)
  JumpMeasure measure;
  MonotoneCubic l_cdf;     // conditional CDF of L given L > 0
  double l_max = 0.0;

  double weight(double l) const {
    if (l <= 0.0) return 0.0;
    switch (regime) {
      case -1: return norm * std::expm1(gamma * l);
      case +1: return -norm * std::expm1(-gamma * l);
      default: return norm * 2.0 * l;
    }
  }
  double l_density(double l) const { return weight(l) * measure.tail_mass(l); }
  // conditional CDF of the L-marginal given L > 0
  double l_marginal_cdf(double l) const {
    if (l <= 0.0) return 0.0;
    return std::clamp(l_cdf(l), 0.0, 1.0);
  }
};

inline OvershootLaw overshoot_law(const ProcessSpec& spec) {
  if (!spec.measure.spectrally_positive())
    throw TwoSidedUnsupported(
        "analytic overshoot law needs a spectrally positive measure (the "
        "Monte Carlo route remains available)");
  if (spec.measure.mass() <= 0.0)
    throw DomainError("overshoot law is degenerate without jumps");
  const double mean = mean_x1(spec);
  OvershootLaw law;
  law.measure = spec.measure;
  if (std::abs(mean) <= 1e-12) {
    law.regime = 0;
    law.norm = 1.0 / eval_phi_derivative(spec, 0.0, 2).real();
    law.atom = law.norm;
    law.gamma = 0.0;
  } else if (mean < 0.0) {
    law.regime = -1;
    law.norm = -1.0 / mean;
    law.gamma = find_real_zeros(spec, 0.0).gamma0;
    law.atom = law.norm * law.gamma / 2.0;
  } else {
    law.regime = +1;
    law.norm = 1.0 / mean;
    law.gamma = find_real_zeros(spec, 0.0).gamma0_star;
    law.atom = law.norm * law.gamma / 2.0;
  }

  // tabulate the L-marginal CDF on a log-spaced grid
  double l_hi = 1.0;
  while (law.l_density(l_hi) > 1e-18 && l_hi < 1e6) l_hi *= 1.4;
  law.l_max = l_hi;
  const int n_nodes = 4096;
  const double l_lo = l_hi * 1e-12;
  std::vector<double> xs(n_nodes), cum(n_nodes, 0.0);
  for (int i = 0; i < n_nodes; ++i)
    xs[i] = l_lo * std::pow(l_hi / l_lo, double(i) / (n_nodes - 1));
  double acc = 0.5 * law.l_density(xs[0]) * xs[0];  // ~linear below the grid
  cum[0] = acc;
  for (int i = 1; i < n_nodes; ++i) {
    const double a = xs[i - 1], b = xs[i], m = 0.5 * (a + b);
    acc += (b - a) / 6.0 *
           (law.l_density(a) + 4.0 * law.l_density(m) + law.l_density(b));
    cum[i] = acc;
  }
  law.ac_mass = acc;
  for (auto& c : cum) c /= acc;
  law.l_cdf = MonotoneCubic(std::move(xs), std::move(cum));
  return law;
}

// n independent (k, l) pairs; the atom is drawn with its exact mass, the
// continuous part by inverse-CDF in L and the conditional tail law of S.
inline std::vector<std::pair<double, double>> sample_overshoot_law(
    const OvershootLaw& law, long n, std::uint64_t seed) {
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (long i = 0; i < n; ++i) {
    Rng rng = Rng::for_path(seed, i);
    if (rng.uniform() < law.atom) {
      out.emplace_back(0.0, 0.0);
      continue;
    }
    const double l = law.l_cdf.inverse(rng.uniform());
    const double s = law.measure.sample_tail(rng, l);
    out.emplace_back(std::max(0.0, s - l), l);
  }
  return out;
}

// Total mass of w by quadrature: atom + int weight(l) nu([l, inf)) dl.
inline double overshoot_law_total_mass(const OvershootLaw& law) {
  return law.atom + law.ac_mass;
}

// Joint CDF W(k, l) = atom + int_0^l weight(u) [tail(u) - tail(u + k)] du.
inline double overshoot_law_cdf(const OvershootLaw& law, double k, double l) {
  if (k < 0.0 || l < 0.0) return 0.0;
  const double val = integrate_adaptive<double>(
      [&](double u) {
        return law.weight(u) *
               (law.measure.tail_mass(u) - law.measure.tail_mass(u + k));
      },
      0.0, std::min(l, law.l_max), 1e-9);
  return law.atom + val;
}

// ---------------------------------------------------------------------------
// Limit law w0 of the jump size at passage, S = K + L:
//   w0(ds) = atom * delta_0 + w0_weight(s) nu(ds),
//   w0_weight(s) = (e^{g0 s} - 1 - g0 s) / (g0 (-E))     (E < 0 display).
// ---------------------------------------------------------------------------

struct JumpSizeLimit {
  double atom = 0.0;
  double gamma = 0.0;
  double norm = 0.0;  // 1/(-E)
  JumpMeasure measure;

  double weight(double s) const {
    if (s <= 0.0) return 0.0;
    return norm * (std::expm1(gamma * s) - gamma * s) / gamma;
  }
  double cdf(double s) const {
    if (s < 0.0) return 0.0;
    return atom + measure.integrate_pos([&](double y) {
      return y <= s ? weight(y) : 0.0;
    });
  }
};

inline JumpSizeLimit jump_size_limit_w0(const ProcessSpec& spec) {
  if (!spec.measure.spectrally_positive())
    throw TwoSidedUnsupported("w0 display needs a spectrally positive measure");
  const double mean = mean_x1(spec);
  if (!(mean < 0.0)) throw WrongRegime("w0 display is the E(X_1) < 0 case");
  JumpSizeLimit w0;
  w0.measure = spec.measure;
  w0.norm = -1.0 / mean;
  w0.gamma = find_real_zeros(spec, 0.0).gamma0;
  w0.atom = w0.norm * w0.gamma / 2.0;
  return w0;
}

// K-marginal Laplace transform of w, E[e^{-mu K}]; in the zero-mean regime
// this equals the leading constant C0(0, mu) of the expansion.
inline double overshoot_law_laplace_k(const OvershootLaw& law, double mu) {
  const double val = integrate_adaptive<double>(
      [&](double u) {
        return law.weight(u) * law.measure.integrate_pos([&](double y) {
          return y > u ? std::exp(-mu * (y - u)) : 0.0;
        });
      },
      0.0, law.l_max, 1e-9);
  return law.atom + val;
}

// ---------------------------------------------------------------------------
// Two-dimensional KS-type comparison of an empirical (K, L) sample against w:
// the statistic is the max joint-CDF gap over a quantile grid drawn from a
// large reference sample of w; its null critical value comes from resampling
// w itself at the same sample size.
// ---------------------------------------------------------------------------

struct Ks2dResult {
  double statistic = 0.0;
  double critical_1pct = 0.0;
  bool below = false;
};

namespace detail {

inline double ks2d_grid_statistic(
    const std::vector<std::pair<double, double>>& sample,
    const std::vector<double>& kq, const std::vector<double>& lq,
    const std::vector<std::vector<double>>& ref_cdf) {
  double d = 0.0;
  for (std::size_t i = 0; i < kq.size(); ++i)
    for (std::size_t j = 0; j < lq.size(); ++j) {
      long cnt = 0;
      for (const auto& [k, l] : sample)
        if (k <= kq[i] && l <= lq[j]) ++cnt;
      d = std::max(d, std::abs(double(cnt) / sample.size() - ref_cdf[i][j]));
    }
  return d;
}

}  // namespace detail

inline Ks2dResult overshoot_law_ks2d(
    const OvershootLaw& law, const std::vector<std::pair<double, double>>& mc,
    int grid = 12, int resamples = 40, long ref_n = 200000,
    std::uint64_t seed = 321) {
  const auto reference = sample_overshoot_law(law, ref_n, seed);
  std::vector<double> ks, ls;
  ks.reserve(reference.size());
  ls.reserve(reference.size());
  for (const auto& [k, l] : reference) {
    ks.push_back(k);
    ls.push_back(l);
  }
  std::sort(ks.begin(), ks.end());
  std::sort(ls.begin(), ls.end());
  std::vector<double> kq(grid), lq(grid);
  for (int i = 0; i < grid; ++i) {
    const double u = (i + 1.0) / (grid + 1.0);
    kq[i] = ks[static_cast<std::size_t>(u * (ks.size() - 1))];
    lq[i] = ls[static_cast<std::size_t>(u * (ls.size() - 1))];
  }
  std::vector<std::vector<double>> ref_cdf(grid, std::vector<double>(grid, 0.0));
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      long cnt = 0;
      for (const auto& [k, l] : reference)
        if (k <= kq[i] && l <= lq[j]) ++cnt;
      ref_cdf[i][j] = double(cnt) / reference.size();
    }

  Ks2dResult out;
  out.statistic = detail::ks2d_grid_statistic(mc, kq, lq, ref_cdf);
  std::vector<double> null_stats(resamples);
  for (int r = 0; r < resamples; ++r) {
    const auto draw = sample_overshoot_law(law, long(mc.size()),
                                           seed + 7919 * (r + 1));
    null_stats[r] = detail::ks2d_grid_statistic(draw, kq, lq, ref_cdf);
  }
  std::sort(null_stats.begin(), null_stats.end());
  out.critical_1pct = null_stats[static_cast<std::size_t>(0.99 * (resamples - 1))];
  out.below = out.statistic < out.critical_1pct;
  return out;
}

// ---------------------------------------------------------------------------
// Two-sided w by plugging a Monte Carlo estimate of the conditional passage
// kernel n(b, dk, dl) into the general display:
//   w = (-1/E)[ g0/2 delta + (e^{g0 l}-1) nu_l(dk) dl
//               + int_{R_-} nu(dy) int_0^{-y} (1 - e^{g0(b+y)}) F(b) n(b,.) db ].
// The kernel is estimated on a b-grid, so cells carry MC error bars.
// ---------------------------------------------------------------------------

struct TwoSidedOvershootEstimate {
  std::vector<double> k_edges, l_edges;  // histogram cell edges (k x l)
  double atom = 0.0, atom_se = 0.0;      // P(K = 0, L = 0)
  std::vector<std::vector<double>> prob, se;
  double total_mass = 0.0, total_se = 0.0;
};

inline TwoSidedOvershootEstimate overshoot_law_two_sided_mc(
    const ProcessSpec& spec, const FGrid& fgrid, std::vector<double> k_edges,
    std::vector<double> l_edges, long kernel_paths = 20000, int b_nodes = 9,
    std::uint64_t seed = 99) {
  const double mean = mean_x1(spec);
  if (!(mean < 0.0)) throw WrongRegime("two-sided w estimate: E(X_1) < 0 case");
  const double g0 = find_real_zeros(spec, 0.0).gamma0;
  const double norm = -1.0 / mean;
  const double k_cut = spec.measure.neg_support_bound();

  TwoSidedOvershootEstimate est;
  est.k_edges = k_edges;
  est.l_edges = l_edges;
  const std::size_t nk = k_edges.size() - 1, nl = l_edges.size() - 1;
  est.prob.assign(nk, std::vector<double>(nl, 0.0));
  est.se.assign(nk, std::vector<double>(nl, 0.0));
  est.atom = norm * g0 / 2.0;

  // direct part: (e^{g0 l} - 1) nu(l + dk) dl over each cell
  for (std::size_t i = 0; i < nk; ++i)
    for (std::size_t j = 0; j < nl; ++j)
      est.prob[i][j] = norm * integrate_adaptive<double>(
                                  [&](double l) {
                                    return std::expm1(g0 * l) *
                                           (spec.measure.tail_mass(l + k_edges[i]) -
                                            spec.measure.tail_mass(l + k_edges[i + 1]));
                                  },
                                  l_edges[j], l_edges[j + 1], 1e-10);

  if (k_cut > 0.0) {
    // kernel part on a b-grid (Simpson weights over [0, k_cut])
    const int nb = b_nodes | 1;
    std::vector<double> bs(nb), fb(nb);
    std::vector<std::vector<std::vector<double>>> kern(nb);  // [b][k][l]
    std::vector<double> kern_atom(nb, 0.0);
    std::vector<long> kern_hits(nb, 0);
    for (int ib = 0; ib < nb; ++ib) {
      const double b = k_cut * (ib + 0.5) / nb;
      bs[ib] = b;
      fb[ib] = fgrid.at(b);
      SimConfig cfg;
      cfg.n_paths = kernel_paths;
      cfg.seed = seed + ib;
      cfg.level = b;
      auto samples = sample_passages(spec, cfg);
      kern[ib].assign(nk, std::vector<double>(nl, 0.0));
      long hits = 0;
      for (const auto& s : samples) {
        if (!s.hit) continue;
        ++hits;
        if (s.k == 0.0 && s.l == 0.0) {
          kern_atom[ib] += 1.0;
          continue;
        }
        const auto ik = std::upper_bound(k_edges.begin(), k_edges.end(), s.k) -
                        k_edges.begin() - 1;
        const auto il = std::upper_bound(l_edges.begin(), l_edges.end(), s.l) -
                        l_edges.begin() - 1;
        if (ik >= 0 && ik < long(nk) && il >= 0 && il < long(nl))
          kern[ib][ik][il] += 1.0;
      }
      kern_hits[ib] = std::max<long>(hits, 1);
      kern_atom[ib] /= kern_hits[ib];
      for (auto& row : kern[ib])
        for (auto& v : row) v /= kern_hits[ib];
    }
    // int_{y < -b} (1 - e^{g0 (b + y)}) nu(dy), midpoint rule in b
    auto neg_weight = [&](double b) {
      return spec.measure.integrate_neg([&](double y) {
        return y < -b ? 1.0 - std::exp(g0 * (b + y)) : 0.0;
      });
    };
    const double db = k_cut / nb;
    for (int ib = 0; ib < nb; ++ib) {
      const double wq = norm * neg_weight(bs[ib]) * fb[ib] * db;
      est.atom += wq * kern_atom[ib];
      est.atom_se += sqr(wq * std::sqrt(kern_atom[ib] * (1 - kern_atom[ib]) /
                                        kern_hits[ib]));
      for (std::size_t i = 0; i < nk; ++i)
        for (std::size_t j = 0; j < nl; ++j) {
          est.prob[i][j] += wq * kern[ib][i][j];
          est.se[i][j] += sqr(wq * std::sqrt(kern[ib][i][j] *
                                             (1 - kern[ib][i][j]) /
                                             kern_hits[ib]));
        }
    }
    est.atom_se = std::sqrt(est.atom_se);
    for (auto& row : est.se)
      for (auto& v : row) v = std::sqrt(v);
  }

  est.total_mass = est.atom;
  est.total_se = sqr(est.atom_se);
  for (std::size_t i = 0; i < nk; ++i)
    for (std::size_t j = 0; j < nl; ++j) {
      est.total_mass += est.prob[i][j];
      est.total_se += sqr(est.se[i][j]);
    }
  est.total_se = std::sqrt(est.total_se);
  return est;
}

// ---------------------------------------------------------------------------
// Berry-Esseen-style probe: sup-CDF distance of the normalized time to its
// Gaussian limit, fitted as log D ~ slope * log x across replicates.
// ---------------------------------------------------------------------------

struct BerryEsseenProbe {
  std::vector<double> xs;
  std::vector<std::vector<double>> distances;  // [replicate][x index]
  double slope_mean = 0.0;
  double slope_sd = 0.0;
  double slope_upper95 = 0.0;  // one-sided Student bound across replicates
  int replicates = 0;
};

inline BerryEsseenProbe berry_esseen_probe(const ProcessSpec& spec,
                                           std::vector<double> xs, long n_paths,
                                           int replicates = 4,
                                           std::uint64_t seed = 2024) {
  if (std::abs(mean_x1(spec)) <= 1e-12)
    throw WrongRegime("probe requires E(X_1) != 0");
  const GaussianLimit lim = gaussian_limit(spec);
  const double sigma = std::sqrt(lim.variance);

  BerryEsseenProbe probe;
  probe.xs = xs;
  probe.replicates = replicates;
  std::vector<double> slopes;
  for (int r = 0; r < replicates; ++r) {
    std::vector<double> dist;
    for (double x : xs) {
      SimConfig cfg;
      cfg.n_paths = n_paths;
      cfg.seed = seed + 1000 * r + static_cast<std::uint64_t>(x);
      cfg.level = x;
      const TripletLaw law = empirical_triplet_law(spec, x, cfg);
      dist.push_back(ks_statistic(
          law.t_norm, [&](double t) { return normal_cdf(t / sigma); }));
    }
    std::vector<double> lx, ld;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      lx.push_back(std::log(xs[i]));
      ld.push_back(std::log(dist[i]));
    }
    slopes.push_back(ols_fit(lx, ld).slope);
    probe.distances.push_back(std::move(dist));
  }
  double m = 0.0;
  for (double s : slopes) m += s;
  m /= slopes.size();
  double v = 0.0;
  for (double s : slopes) v += (s - m) * (s - m);
  v = slopes.size() > 1 ? v / (slopes.size() - 1) : 0.0;
  probe.slope_mean = m;
  probe.slope_sd = std::sqrt(v);
  static constexpr double t95[] = {0.0, 6.3138, 2.9200, 2.3534, 2.1318, 2.0150};
  const int dof = std::min<int>(5, int(slopes.size()) - 1);
  probe.slope_upper95 =
      m + (dof > 0 ? t95[dof] * probe.slope_sd / std::sqrt(double(slopes.size()))
                   : kInf);
  return probe;
}

}  // namespace levypass
