#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "levypass/common.hpp"
#include "levypass/mc_engine.hpp"
#include "levypass/parallel.hpp"
#include "levypass/process.hpp"

namespace levypass {

// Supremum of p with int_0^inf y^p nu(dy) < inf (capped at 64; the cap plays
// the role of "exponential moments" for the gamma/atom/compact families).
inline double moment_order(const JumpMeasure& measure) {
  return measure.moment_order_sup();
}

struct PolyBoundCell {
  double x = 0.0;
  double f_hat = 0.0;
  double std_error = 0.0;
  double scaled = 0.0;  // f_hat * (1 + x^n)
};

struct PolyBoundReport {
  double p = 0.0;
  int n = 0;
  double C_n = 0.0;
  std::vector<PolyBoundCell> cells;
  std::vector<std::size_t> violations;  // must stay empty
  bool right_end_stable = true;
};

// Empirical certificate of F(x) <= C_n/(1 + x^n) with n = floor(p - 2):
// C_n is fitted as the largest upper-CI of F_hat(x)(1 + x^n) over the grid,
// then each cell's lower CI is checked against it and the largest-x cell must
// not dominate by more than its own CI (no growth trend at the right end).
inline PolyBoundReport check_poly_bound(const ProcessSpec& spec, double p,
                                        const std::vector<double>& x_grid,
                                        const SimConfig& cfg) {
  if (mean_x1(spec) >= 0.0)
    throw RegimeError("polynomial bound requires E(X_1) < 0");
  const double p_sup = moment_order(spec.measure);
  if (!(p >= 2.0) || p > p_sup || (p == p_sup && p_sup < 64.0))
    throw DomainError("need 2 <= p < sup{finite moment orders}");

  PolyBoundReport rep;
  rep.p = p;
  rep.n = static_cast<int>(std::floor(p - 2.0));
  std::vector<double> xs = x_grid;
  std::sort(xs.begin(), xs.end());
  const auto ests = estimate_F_multi(spec, 0.0, 0.0, 0.0, xs, cfg);

  double cmax = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    PolyBoundCell cell;
    cell.x = xs[i];
    cell.f_hat = ests[i].value;
    cell.std_error = ests[i].std_error;
    cell.scaled = cell.f_hat * (1.0 + std::pow(cell.x, rep.n));
    cmax = std::max(cmax, (cell.f_hat + 3.0 * cell.std_error) *
                              (1.0 + std::pow(cell.x, rep.n)));
    rep.cells.push_back(cell);
  }
  rep.C_n = cmax;
  for (std::size_t i = 0; i < rep.cells.size(); ++i) {
    const auto& c = rep.cells[i];
    if ((c.f_hat - 3.0 * c.std_error) * (1.0 + std::pow(c.x, rep.n)) > rep.C_n)
      rep.violations.push_back(i);
  }
  if (rep.cells.size() >= 2) {
    const auto& last = rep.cells.back();
    double rest_max = 0.0;
    for (std::size_t i = 0; i + 1 < rep.cells.size(); ++i)
      rest_max = std::max(rest_max, rep.cells[i].scaled);
    const double ci = 3.0 * last.std_error * (1.0 + std::pow(last.x, rep.n));
    rep.right_end_stable = last.scaled <= rest_max + ci;
  }
  return rep;
}

inline JumpMeasure truncate_below(const JumpMeasure& measure, double k) {
  return measure.truncate_below(k);
}

// ---------------------------------------------------------------------------
// Coupled truncation run: the full path and its [-k, inf)-truncated version
// share every primitive draw, so X_t <= X^k_t pathwise and T^k_x <= T_x holds
// path by path, not just in distribution. Requires the removed jumps to be
// uncompensated (k >= 1 or no mass in (-1, -k)); otherwise truncation shifts
// the compensator drift and pathwise domination genuinely fails.
// ---------------------------------------------------------------------------

struct CoupledTruncationReport {
  long n_paths = 0;
  long full_hits = 0, trunc_hits = 0;
  long pathwise_violations = 0;  // pairs with T^k > T (must be 0)
  double f_full = 0.0, se_full = 0.0;
  double f_trunc = 0.0, se_trunc = 0.0;
};

inline CoupledTruncationReport coupled_truncation_run(const ProcessSpec& spec,
                                                      double k, double x,
                                                      const SimConfig& cfg) {
  if (!(k > 0.0)) throw DomainError("truncation level must be positive");
  if (k < 1.0) {
    const double band_mass = spec.measure.integrate_neg(
        [&](double y) { return (y > -1.0 && y < -k) ? 1.0 : 0.0; });
    if (band_mass > 0.0)
      throw DomainError(
          "coupled certificate undefined: truncation removes compensated "
          "jumps (need k >= 1 or no mass in (-1, -k))");
  }
  const double horizon = cfg.horizon > 0.0 ? cfg.horizon : default_horizon(spec, x);
  const double rate = spec.measure.mass();
  const double drift_eff = spec.drift + spec.measure.compensator_linear();

  const long chunk = 4096;
  const long n_chunks = (cfg.n_paths + chunk - 1) / chunk;
  struct Acc {
    long full_hits = 0, trunc_hits = 0, violations = 0;
    double wf = 0.0, wf2 = 0.0, wt = 0.0, wt2 = 0.0;
  };
  std::vector<Acc> accs(n_chunks);

  parallel_chunks(cfg.n_paths, chunk, cfg.threads, [&](long ci, long begin,
                                                       long end) {
    Acc& acc = accs[ci];
    for (long i = begin; i < end; ++i) {
      Rng rng = Rng::for_path(cfg.seed, i);
      double pos_f = 0.0, pos_t = 0.0, t = 0.0;
      bool hit_f = false, hit_t = false;
      double tf = 0.0, tt = 0.0;
      while (t < horizon && !hit_f) {
        const double dt_jump = rate > 0.0 ? rng.exponential(rate) : kInf;
        double seg = std::min(dt_jump, horizon - t);
        if (cfg.h_euler > 0.0) seg = std::min(seg, cfg.h_euler);
        const bool jump_now = seg == dt_jump;
        const double z = rng.normal();
        const double bf = pos_f - drift_eff * seg + std::sqrt(seg) * z;
        const double bt = pos_t - drift_eff * seg + std::sqrt(seg) * z;
        const double u = rng.uniform();
        const double pf =
            bf > x ? 1.0 : std::exp(-2.0 * (x - pos_f) * (x - bf) / seg);
        const double pt =
            hit_t ? 0.0
                  : (bt > x ? 1.0 : std::exp(-2.0 * (x - pos_t) * (x - bt) / seg));
        const bool cross_f = u < pf;
        const bool cross_t = !hit_t && u < pt;
        if (cross_f || cross_t) {
          const double ztau = rng.normal();
          const double utau = rng.uniform();
          double tau_f = 0.0, tau_t = 0.0;
          if (cross_f)
            tau_f = detail::bridge_crossing_time(ztau, utau, pos_f, bf, x, seg);
          if (cross_t)
            tau_t = detail::bridge_crossing_time(ztau, utau, pos_t, bt, x, seg);
          if (cross_f && cross_t) tau_t = std::min(tau_t, tau_f);
          if (cross_t) {
            hit_t = true;
            tt = t + tau_t;
          }
          if (cross_f) {
            hit_f = true;
            tf = t + tau_f;
            break;
          }
        }
        pos_f = bf;
        if (!hit_t) pos_t = bt;
        t += seg;
        if (jump_now && t < horizon) {
          const double y = spec.measure.sample(rng);
          if (!hit_f && pos_f + y > x) {
            hit_f = true;
            tf = t;
          }
          if (!hit_t && y >= -k && pos_t + y > x) {
            hit_t = true;
            tt = t;
          }
          pos_f += y;
          if (y >= -k) pos_t += y;
          if (hit_f) break;
        }
      }
      if (hit_f) {
        ++acc.full_hits;
        acc.wf += 1.0;
        acc.wf2 += 1.0;
        if (!hit_t || tt > tf + 1e-12) ++acc.violations;
      }
      if (hit_t) {
        ++acc.trunc_hits;
        acc.wt += 1.0;
        acc.wt2 += 1.0;
      }
    }
  });

  CoupledTruncationReport rep;
  rep.n_paths = cfg.n_paths;
  double wf = 0.0, wt = 0.0;
  for (const auto& a : accs) {
    rep.full_hits += a.full_hits;
    rep.trunc_hits += a.trunc_hits;
    rep.pathwise_violations += a.violations;
    wf += a.wf;
    wt += a.wt;
  }
  const double n = double(cfg.n_paths);
  rep.f_full = wf / n;
  rep.f_trunc = wt / n;
  rep.se_full = std::sqrt(std::max(0.0, rep.f_full * (1.0 - rep.f_full)) / n);
  rep.se_trunc = std::sqrt(std::max(0.0, rep.f_trunc * (1.0 - rep.f_trunc)) / n);
  return rep;
}

}  // namespace levypass
