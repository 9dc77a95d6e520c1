#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "levypass/common.hpp"
#include "levypass/process.hpp"
#include "levypass/zero_finder.hpp"

namespace levypass {

// Uniform grid of F(theta, mu, rho, x) values on [0, n*h].
struct FGrid {
  double h = 0.0;
  std::vector<double> values;  // values[j] = F(j*h)
  double residual = 0.0;       // final sup-change of the fixed-point iteration

  double x_max() const { return values.empty() ? 0.0 : h * (values.size() - 1); }

  double at(double x) const {
    if (x <= 0.0) return values.empty() ? 1.0 : values.front();
    const double j = x / h;
    const auto jl = static_cast<std::size_t>(j);
    if (jl + 1 >= values.size()) return values.back();
    const double w = j - double(jl);
    return (1.0 - w) * values[jl] + w * values[jl + 1];
  }
};

// R h(q) = int_{-inf}^0 nu(dy) int_0^{-y} (e^{-q(b+y)} - 1) h(b) db.
// Identically 0 for spectrally positive measures.
inline cplx apply_R(const ProcessSpec& spec, const FGrid& grid, cplx q) {
  const double k_cut = spec.measure.neg_support_bound();
  if (k_cut == 0.0) return {0.0, 0.0};
  if (grid.h <= 0.0 || grid.values.empty())
    throw NeedsFGrid("R operator requires an F grid for two-sided measures");
  if (grid.h > k_cut / 64.0)
    throw GridTooCoarse("F grid step must be <= k_cut/64");
  if (grid.x_max() + 1e-12 < k_cut)
    throw GridTooCoarse("F grid must cover [0, k_cut]");

  // inner integral on the grid nodes (trapezoid, partial last cell)
  auto inner = [&](double y) -> cplx {  // y < 0
    const double top = -y;
    const auto full = static_cast<std::size_t>(top / grid.h);
    cplx acc = 0.0;
    auto integrand = [&](double b, double hb) -> cplx {
      return (std::exp(-q * (b + y)) - 1.0) * hb;
    };
    for (std::size_t jj = 0; jj < full && jj + 1 < grid.values.size(); ++jj) {
      const double b0 = jj * grid.h, b1 = (jj + 1) * grid.h;
      acc += 0.5 * grid.h *
             (integrand(b0, grid.values[jj]) + integrand(b1, grid.values[jj + 1]));
    }
    const double b0 = full * grid.h;
    if (top > b0) {
      acc += 0.5 * (top - b0) *
             (integrand(b0, grid.at(b0)) + integrand(top, grid.at(top)));
    }
    return acc;
  };

  cplx total = 0.0;
  if (const auto* at = spec.measure.get_if<Atoms>()) {
    for (const auto& a : at->atoms)
      if (a.y < 0.0) total += a.mass * inner(a.y);
  } else if (const auto* cd = spec.measure.get_if<CompactDensity>()) {
    for (const auto& p : cd->pieces) {
      const double hi = std::min(p.hi, 0.0);
      if (p.lo >= hi) continue;
      total += integrate_adaptive<cplx>(
          [&](double y) {
            double d = 0.0, yp = 1.0;
            for (double cj : p.coeffs) { d += cj * yp; yp *= y; }
            return d * inner(y);
          },
          p.lo, hi, 1e-10);
    }
  } else if (const auto* sm = spec.measure.get_if<SumMeasure>()) {
    for (const auto& part : sm->parts) {
      ProcessSpec sub{spec.drift, part, spec.label};
      total += apply_R(sub, grid, q);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Evaluation context: real zeros, Bromwich margin, optional F grid.
// ---------------------------------------------------------------------------

struct TransformContext {
  ProcessSpec spec;
  double theta = 0.0, mu = 0.0, rho = 0.0;
  double gamma0 = 0.0, gamma0_star = 0.0, beta = 0.0;
  std::optional<FGrid> grid;
  cplx rf_at_gstar{0.0, 0.0};
  bool two_sided = false;
};

inline TransformContext make_context(const ProcessSpec& spec, double theta,
                                     double mu, double rho,
                                     std::optional<FGrid> grid = std::nullopt) {
  if (theta < 0.0 || mu < 0.0 || rho < 0.0)
    throw DomainError("theta, mu, rho must be nonnegative");
  if (spec.measure.r_nu() <= 0.0)
    throw DomainError(
        "transform evaluation requires an exponential-moment measure "
        "(polynomial tails are served by the bounds module)");
  TransformContext ctx;
  ctx.spec = spec;
  ctx.theta = theta;
  ctx.mu = mu;
  ctx.rho = rho;
  const RealZeros rz = find_real_zeros(spec, theta);
  ctx.gamma0 = rz.gamma0;
  ctx.gamma0_star = rz.gamma0_star;
  ctx.beta = beta_theta(spec, rz);
  ctx.two_sided = !spec.measure.spectrally_positive();
  ctx.grid = std::move(grid);
  if (ctx.two_sided) {
    if (!ctx.grid)
      throw NeedsFGrid("two-sided measure: supply an F grid for the R terms");
    ctx.rf_at_gstar =
        apply_R(spec, *ctx.grid, cplx(ctx.gamma0_star, 0.0));
  }
  return ctx;
}

namespace detail {

// (lap_pos(a) - lap_pos(b)) / (a - b) with the removable point a = b filled
// by the derivative; equals int_0^inf (e^{-ay} - e^{-by})/(a-b) nu(dy) under
// the limit convention for vanishing denominators.
inline cplx j_pos(const JumpMeasure& m, cplx a, cplx b) {
  const double scale = 1.0 + std::abs(a) + std::abs(b);
  if (std::abs(a - b) < 1e-7 * scale) return m.laplace_pos(0.5 * (a + b), 1);
  return (m.laplace_pos(a) - m.laplace_pos(b)) / (a - b);
}

inline cplx rf_term(const TransformContext& ctx, cplx q) {
  if (!ctx.two_sided) return {0.0, 0.0};
  return apply_R(ctx.spec, *ctx.grid, q) - ctx.rf_at_gstar;
}

}  // namespace detail

// Numerator of the functional equation: F_hat = bracket / phi_theta.
inline cplx eval_Fhat_bracket(const TransformContext& ctx, cplx q) {
  const auto& m = ctx.spec.measure;
  const cplx jq = detail::j_pos(m, q + ctx.rho, cplx(ctx.mu, 0.0));
  const cplx jg =
      detail::j_pos(m, cplx(ctx.gamma0_star + ctx.rho, 0.0), cplx(ctx.mu, 0.0));
  return 0.5 * (q - ctx.gamma0_star) + jq - jg + detail::rf_term(ctx, q);
}

inline cplx eval_Fhat(const TransformContext& ctx, cplx q) {
  const cplx denom = eval_phi_theta(ctx.spec, q, ctx.theta);
  if (std::abs(denom) < 1e-14 * std::max(1.0, std::norm(q)))
    throw ZeroDivision("phi(q) = theta: q is a zero of phi_theta");
  return eval_Fhat_bracket(ctx, q) / denom;
}

// The tilde transform splits into an analytically invertible head
//   head(q)  = (e^q - 1)/q^2 - gs/(q (q + gs))  <->  (1+x)1_{[-1,0]} + e^{-gs x}1_{x>=0}
// plus a remainder whose numerators stay bounded on vertical lines, so the
// remainder decays like 1/t^2 and is the only part inverted numerically.
inline cplx eval_Fhat_tilde_head(const TransformContext& ctx, cplx q) {
  cplx head = expm1_over(q) / q;  // (e^q - 1)/q^2
  if (ctx.gamma0_star > 0.0) head -= ctx.gamma0_star / (q * (q + ctx.gamma0_star));
  return head;
}

inline double tilde_head_inverse(const TransformContext& ctx, double x) {
  if (x < 0.0) return x >= -1.0 ? 1.0 + x : 0.0;
  return std::exp(-ctx.gamma0_star * x);
}

inline cplx eval_Fhat_tilde_rest(const TransformContext& ctx, cplx q) {
  const auto& m = ctx.spec.measure;
  const double gs = ctx.gamma0_star;
  const cplx denom = eval_phi_theta(ctx.spec, q, ctx.theta);
  if (std::abs(denom) < 1e-14 * std::max(1.0, std::norm(q)))
    throw ZeroDivision("phi(q) = theta on the evaluation path");

  // M(q) = int (e^{-qy} - e^{-gs y} + (q - gs) y 1_{|y|<1}) nu(dy) / (q + gs)
  const cplx mint = (m.laplace(q) - m.laplace(cplx(gs, 0.0)) +
                     (q - gs) * m.compensator_linear()) /
                    (q + gs);
  const cplx jq = detail::j_pos(m, q + ctx.rho, cplx(ctx.mu, 0.0));
  const cplx jg = detail::j_pos(m, cplx(gs + ctx.rho, 0.0), cplx(ctx.mu, 0.0));
  const cplx bracket = -ctx.spec.drift * (q - gs) / (q + gs) - mint + jq - jg +
                       detail::rf_term(ctx, q);
  return bracket / denom;
}

inline cplx eval_Fhat_tilde(const TransformContext& ctx, cplx q) {
  return eval_Fhat_tilde_head(ctx, q) + eval_Fhat_tilde_rest(ctx, q);
}

// ---------------------------------------------------------------------------
// Mellin-Fourier inversion along Re q = q1 in (0, beta_theta).
// ---------------------------------------------------------------------------

struct BromwichOptions {
  double abs_tol = 1e-8;   // absolute tolerance on F(x)
  double q1 = 0.0;         // 0: use beta_theta / 2
  bool clamp = true;       // clamp x >= 0 results into [0, 1]
  long max_panels = 4'000'000;
};

inline double invert_bromwich(const TransformContext& ctx, double x,
                              const BromwichOptions& opts = {}) {
  if (x < -1.0) throw DomainError("inversion domain is x >= -1");
  const double q1 = opts.q1 > 0.0 ? opts.q1 : 0.5 * ctx.beta;
  if (!(q1 > 0.0)) throw DomainError("Bromwich abscissa must be positive");

  auto g = [&](double t) { return eval_Fhat_tilde_rest(ctx, cplx(q1, t)); };

  // e^{itx} advances at most ~pi/4 per panel, so a fixed GK15 panel rule
  // resolves the oscillation; g itself oscillates at the measure's support
  // scale, which the width must also resolve.
  const double radius = ctx.spec.measure.support_radius();
  const double osc = std::abs(x) + radius;
  const double w = std::min(kPi / (4.0 * osc + 1.0), 0.5);
  // Integration-by-parts tail corrections assume the e^{itx} phase dominates;
  // with support-scale oscillations at small x only plain truncation is safe.
  const bool corrected = radius == 0.0 || std::abs(x) >= 0.75;
  double tol = std::max(opts.abs_tol * kPi * std::exp(-q1 * x), 1e-15);
  if (!corrected) tol = std::max(tol, 3e-5);

  auto tail_correction = [&](double T) -> cplx {
    if (!corrected) return {0.0, 0.0};
    const cplx gT = g(T);
    // integration by parts is an expansion in 1/(xT); below that regime the
    // phase is slowly varying and the remaining 1/t^2 mass is g(T) T
    if (std::abs(x) * T < 3.0) return gT * T;
    // int_T^inf e^{itx} g dt ~ e^{iTx} [ i g(T)/x - g'(T)/x^2 ]
    const double d = w / 8.0;
    const cplx gp = (g(T + d) - g(T - d)) / (2.0 * d);
    return std::exp(cplx(0.0, T * x)) *
           (cplx(0.0, 1.0) * gT / x - gp / (x * x));
  };

  cplx sum = 0.0;
  double T = 0.0;
  cplx prev_result{kNaN, 0.0};
  long panels_done = 0;
  int stable = 0;
  const long block = 96;
  bool converged = false;
  while (panels_done < opts.max_panels) {
    for (long i = 0; i < block; ++i) {
      cplx val;
      double err;
      gk15_panel([&](double t) { return std::exp(cplx(0.0, t * x)) * g(t); }, T,
                 T + w, val, err);
      sum += val;
      T += w;
    }
    panels_done += block;
    const cplx result = sum + tail_correction(T);
    stable = (std::abs(result - prev_result) < 0.5 * tol) ? stable + 1 : 0;
    prev_result = result;
    if (stable >= 2 && panels_done >= 3 * block) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw SlowDecay("Bromwich tail failed to converge before the panel cap");

  const cplx full = sum + tail_correction(T);
  double F = tilde_head_inverse(ctx, x) + std::exp(q1 * x) / kPi * full.real();
  if (opts.clamp && x >= 0.0) F = std::clamp(F, 0.0, 1.0);
  return F;
}

// Many x values against one context: the transform is evaluated once per
// t-node and folded into every x, which is what grid solving and comparison
// tables need. Same quadrature as invert_bromwich with the panel width set by
// the largest x.
inline std::vector<double> invert_bromwich_batch(const TransformContext& ctx,
                                                 const std::vector<double>& xs,
                                                 const BromwichOptions& opts = {}) {
  if (xs.empty()) return {};
  for (double x : xs)
    if (x < -1.0) throw DomainError("inversion domain is x >= -1");
  const double q1 = opts.q1 > 0.0 ? opts.q1 : 0.5 * ctx.beta;
  if (!(q1 > 0.0)) throw DomainError("Bromwich abscissa must be positive");

  double x_top = 0.0;
  for (double x : xs) x_top = std::max(x_top, std::abs(x));
  const double radius = ctx.spec.measure.support_radius();
  const double w = std::min(kPi / (4.0 * (x_top + radius) + 1.0), 0.5);
  const bool corrected = radius == 0.0;
  double tol = std::max(opts.abs_tol * kPi, 1e-15);
  if (!corrected) tol = std::max(tol, 3e-5);

  auto g = [&](double t) { return eval_Fhat_tilde_rest(ctx, cplx(q1, t)); };

  const std::size_t n = xs.size();
  std::vector<cplx> sums(n, cplx(0.0));
  std::vector<cplx> prev(n, cplx(kNaN, 0.0));

  auto tail_correction = [&](double T, double x, cplx gT, cplx gp) -> cplx {
    if (!corrected) return {0.0, 0.0};
    if (std::abs(x) * T < 3.0) return gT * T;
    return std::exp(cplx(0.0, T * x)) *
           (cplx(0.0, 1.0) * gT / x - gp / (x * x));
  };

  double T = 0.0;
  const long block = 96;
  long panels_done = 0;
  int stable = 0;
  bool converged = false;
  // GK15 abscissas/weights reused against cached g values per panel
  while (panels_done < opts.max_panels) {
    for (long b = 0; b < block; ++b) {
      const double hl = 0.5 * w, c = T + hl;
      cplx gv[15];
      double tv[15];
      for (int i = 0; i < 8; ++i) {
        const double dx = hl * detail::kGk15Nodes[i];
        if (i == 7) {
          tv[14] = c;
          gv[14] = g(c);
        } else {
          tv[i] = c - dx;
          tv[13 - i] = c + dx;
          gv[i] = g(c - dx);
          gv[13 - i] = g(c + dx);
        }
      }
      for (std::size_t j = 0; j < n; ++j) {
        cplx acc = 0.0;
        for (int i = 0; i < 8; ++i) {
          const double wk = detail::kGk15WK[i] * hl;
          if (i == 7)
            acc += wk * std::exp(cplx(0.0, tv[14] * xs[j])) * gv[14];
          else
            acc += wk * (std::exp(cplx(0.0, tv[i] * xs[j])) * gv[i] +
                         std::exp(cplx(0.0, tv[13 - i] * xs[j])) * gv[13 - i]);
        }
        sums[j] += acc;
      }
      T += w;
    }
    panels_done += block;
    const cplx gT = g(T);
    const double d = w / 8.0;
    const cplx gp = (g(T + d) - g(T - d)) / (2.0 * d);
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const cplx result = sums[j] + tail_correction(T, xs[j], gT, gp);
      worst = std::max(worst,
                       std::abs(result - prev[j]) * std::exp(q1 * xs[j]));
      prev[j] = result;
    }
    stable = (worst < 0.5 * tol) ? stable + 1 : 0;
    if (stable >= 2 && panels_done >= 3 * block) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw SlowDecay("batched Bromwich tail failed to converge");

  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    double F =
        tilde_head_inverse(ctx, xs[j]) + std::exp(q1 * xs[j]) / kPi * prev[j].real();
    if (opts.clamp && xs[j] >= 0.0) F = std::clamp(F, 0.0, 1.0);
    out[j] = F;
  }
  return out;
}

// ---------------------------------------------------------------------------
// F grid by fixed-point closure of the functional equation when R != 0.
// ---------------------------------------------------------------------------

struct FGridOptions {
  double fixed_point_tol = 1e-4;
  int max_iterations = 50;
  double bromwich_tol = 1e-7;
  std::optional<FGrid> initial;  // e.g. a coarse Monte Carlo estimate
};

inline FGrid solve_F_grid(const ProcessSpec& spec, double theta, double mu,
                          double rho, double x_max, double h,
                          const FGridOptions& opts = {}) {
  const double k_cut = spec.measure.neg_support_bound();
  const double cover = std::max(x_max, k_cut);
  const auto n = static_cast<std::size_t>(std::ceil(cover / h)) + 1;
  if (k_cut > 0.0 && h > k_cut / 64.0)
    throw GridTooCoarse("grid step must be <= k_cut/64");

  FGrid grid;
  grid.h = h;
  grid.values.assign(n, 1.0);
  if (opts.initial) {
    for (std::size_t j = 0; j < n; ++j)
      grid.values[j] = std::clamp(opts.initial->at(j * h), 0.0, 1.0);
  }

  std::vector<double> nodes(n);
  for (std::size_t j = 0; j < n; ++j) nodes[j] = j * h;
  BromwichOptions bo;
  bo.abs_tol = opts.bromwich_tol;

  if (spec.measure.spectrally_positive()) {  // R = 0: single inversion pass
    TransformContext ctx = make_context(spec, theta, mu, rho);
    grid.values = invert_bromwich_batch(ctx, nodes, bo);
    return grid;
  }

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    TransformContext ctx = make_context(spec, theta, mu, rho, grid);
    FGrid next = grid;
    next.values = invert_bromwich_batch(ctx, nodes, bo);
    next.residual = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      next.residual =
          std::max(next.residual, std::abs(next.values[j] - grid.values[j]));
    grid = std::move(next);
    if (grid.residual < opts.fixed_point_tol) return grid;
  }
  throw NoConvergence("F-grid fixed point did not converge");
}

}  // namespace levypass
