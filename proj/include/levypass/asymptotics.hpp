#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "levypass/common.hpp"
#include "levypass/transform_core.hpp"
#include "levypass/zero_finder.hpp"

namespace levypass {

// One exponential-polynomial term a_i (C_i(x) e^{-gamma_i x} + conjugate).
struct ExpansionTerm {
  cplx gamma;              // Im >= 0 representative
  double a = 1.0;          // 1/2 when gamma is real, 1 otherwise
  std::vector<cplx> poly;  // C_i(x) = sum_k poly[k] x^k, degree n_i - 1
  int multiplicity = 1;
};

struct ExpansionReport {
  double theta = 0.0, mu = 0.0, rho = 0.0;
  double gamma0 = 0.0;
  double C0 = 0.0;       // positive real leading constant
  double C0_error = 0.0; // half-width from the R-grid residual (two-sided only)
  std::vector<ExpansionTerm> terms;
  double B = 0.0;  // remainder exponent: F - expansion = O(e^{-Bx})
};

// Residue of F_hat at a simple zero of phi_theta: bracket(z) / phi'(z), the
// difference quotients evaluated with their analytic limits. Valid on the
// meromorphic extension (the closed-form transforms continue past -r_nu).
inline cplx residue_simple(const TransformContext& ctx, cplx zero) {
  if (multiplicity_at(ctx.spec, ctx.theta, zero) != 1)
    throw MultiplicityMismatch("residue_simple needs a simple zero");
  return eval_Fhat_bracket(ctx, zero) / eval_phi_derivative(ctx.spec, zero, 1);
}

// Two-sided residues read R F off the grid, so the constants inherit the
// fixed-point residual through the Lipschitz bound of R in sup norm:
//   |R g1(q) - R g2(q)| <= ||g1 - g2||_inf int nu(dy) int_0^{-y} |e^{-q(b+y)} - 1| db.
inline double residue_rf_error_halfwidth(const TransformContext& ctx, cplx zero) {
  if (!ctx.two_sided) return 0.0;
  const double resid = ctx.grid->residual;
  auto lipschitz = [&](cplx q) {
    return ctx.spec.measure.integrate_neg([&](double y) {
      return integrate_adaptive<double>(
          [&](double b) { return std::abs(std::exp(-q * (b + y)) - 1.0); }, 0.0,
          -y, 1e-8);
    });
  };
  const double lip =
      lipschitz(zero) + lipschitz(cplx(ctx.gamma0_star, 0.0));
  return resid * lip / std::abs(eval_phi_derivative(ctx.spec, zero, 1));
}

namespace detail {

// int_{-inf}^0 nu(dy) int_0^{-y} (y + b) F(b) db  on the grid (two-sided R
// term of the zero-mean residue).
inline double r_linear_term(const ProcessSpec& spec, const FGrid& grid) {
  const double k_cut = spec.measure.neg_support_bound();
  if (k_cut == 0.0) return 0.0;
  if (grid.h <= 0.0 || grid.x_max() + 1e-12 < k_cut)
    throw GridTooCoarse("F grid must cover [0, k_cut]");
  auto inner = [&](double y) {
    const double top = -y;
    const auto full = static_cast<std::size_t>(top / grid.h);
    double acc = 0.0;
    for (std::size_t j = 0; j < full && j + 1 < grid.values.size(); ++j) {
      const double b0 = j * grid.h, b1 = (j + 1) * grid.h;
      acc += 0.5 * grid.h *
             ((y + b0) * grid.values[j] + (y + b1) * grid.values[j + 1]);
    }
    const double b0 = full * grid.h;
    if (top > b0)
      acc += 0.5 * (top - b0) *
             ((y + b0) * grid.at(b0) + (y + top) * grid.at(top));
    return acc;
  };
  double total = 0.0;
  if (const auto* at = spec.measure.get_if<Atoms>()) {
    for (const auto& a : at->atoms)
      if (a.y < 0.0) total += a.mass * inner(a.y);
  } else if (const auto* cd = spec.measure.get_if<CompactDensity>()) {
    for (const auto& p : cd->pieces) {
      const double hi = std::min(p.hi, 0.0);
      if (p.lo >= hi) continue;
      total += integrate_adaptive<double>(
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
      total += r_linear_term(sub, grid);
    }
  }
  return total;
}

}  // namespace detail

// Leading constant when theta = 0 and E(X_1) = 0: gamma0(0) = 0 is a double
// zero of phi but only a simple pole of F_hat. Direct formula
//   C0 = ( 1 - (2/(rho-mu)^2) int e^{-rho y}(1 - e^{(rho-mu)y} + (rho-mu)y) nu
//          - 2 int nu(dy) int_0^{-y} (y+b) F(b) db ) / phi''(0).
inline double residue_zero_mean(const ProcessSpec& spec, double mu, double rho,
                                const std::optional<FGrid>& grid = std::nullopt) {
  if (std::abs(mean_x1(spec)) > 1e-10)
    throw WrongRegime("residue_zero_mean requires E(X_1) = 0");
  const auto& m = spec.measure;
  const double phi2 = eval_phi_derivative(spec, 0.0, 2).real();
  const double a = rho - mu;
  double mid;  // (2/a^2) * int_0^inf e^{-rho y}(1 - e^{(rho-mu)y} + (rho-mu)y) nu(dy)
  if (std::abs(a) < 1e-5) {
    mid = -m.laplace_pos(rho, 2).real() + (a / 3.0) * m.laplace_pos(rho, 3).real();
  } else {
    const double t2 = m.laplace_pos(rho).real() - m.laplace_pos(mu).real() -
                      a * m.laplace_pos(rho, 1).real();
    mid = 2.0 * t2 / (a * a);
  }
  double r_term = 0.0;
  if (!m.spectrally_positive()) {
    if (!grid) throw NeedsFGrid("two-sided zero-mean residue needs an F grid");
    r_term = detail::r_linear_term(spec, *grid);
  }
  return (1.0 - mid - 2.0 * r_term) / phi2;
}

// Laurent coefficients K_1..K_n of F_hat at a zero of multiplicity n, by
// trapezoid Cauchy integrals on a circle of radius min(1e-2, clearance/2).
inline std::vector<cplx> higher_residue_coeffs(const TransformContext& ctx,
                                               cplx zero, int n,
                                               double clearance = 1.0) {
  for (const auto& [p, order] : ctx.spec.measure.poles())
    clearance = std::min(clearance, std::abs(zero - p));
  const double r = std::min(1e-2, 0.5 * clearance);
  if (!(r > 0.0))
    throw ContourContamination("another singularity sits inside the circle");
  const int M = 128;
  std::vector<cplx> ring(M);
  for (int j = 0; j < M; ++j) {
    const double ang = 2.0 * kPi * j / M;
    ring[j] = eval_Fhat(ctx, zero + r * cplx(std::cos(ang), std::sin(ang)));
  }
  std::vector<cplx> K(n);
  for (int k = 1; k <= n; ++k) {
    cplx acc = 0.0;
    for (int j = 0; j < M; ++j) {
      const double ang = 2.0 * kPi * j / M;
      acc += ring[j] * cplx(std::cos(k * ang), std::sin(k * ang));
    }
    K[k - 1] = acc * std::pow(r, k) / double(M);
  }
  return K;
}

// Assemble the asymptotic expansion over the strip of depth B:
//   F = C0 e^{-g0 x} + sum_i a_i (C_i(x) e^{-g_i x} + conj) + O(e^{-Bx}).
inline ExpansionReport expand_F(const ProcessSpec& spec, double theta, double mu,
                                double rho, double B,
                                const std::optional<FGrid>& grid = std::nullopt) {
  const ZeroReport zr = find_strip_zeros(spec, theta, B);
  const TransformContext ctx = make_context(spec, theta, mu, rho, grid);

  ExpansionReport rep;
  rep.theta = theta;
  rep.mu = mu;
  rep.rho = rho;
  rep.gamma0 = zr.gamma0;
  rep.B = zr.strip_B;

  if (zr.gamma0_multiplicity == 1) {
    const cplx c0 = residue_simple(ctx, cplx(-zr.gamma0, 0.0));
    rep.C0 = c0.real();
    rep.C0_error = residue_rf_error_halfwidth(ctx, cplx(-zr.gamma0, 0.0));
    if (std::abs(c0.imag()) > 1e-9 * std::max(1.0, std::abs(c0)))
      throw Error("leading residue is not real");
  } else {
    rep.C0 = residue_zero_mean(spec, mu, rho, grid);
  }
  if (!(rep.C0 > 0.0)) throw Error("leading constant C0 must be positive");

  auto clearance_at = [&](cplx z) {
    double c = kInf;
    auto upd = [&](cplx other) {
      const double d = std::abs(z - other);
      if (d > 1e-12) c = std::min(c, d);
    };
    upd(cplx(-zr.gamma0, 0.0));
    upd(cplx(zr.gamma0_star, 0.0));
    for (const auto& p : zr.pairs) {
      upd(-p.gamma);
      upd(-std::conj(p.gamma));
    }
    return c;
  };

  for (const auto& p : zr.pairs) {
    ExpansionTerm term;
    term.gamma = p.gamma;
    term.multiplicity = p.multiplicity;
    term.a = std::abs(p.gamma.imag()) < 1e-10 ? 0.5 : 1.0;
    const cplx zero = -p.gamma;
    if (p.multiplicity == 1) {
      term.poly = {residue_simple(ctx, zero)};
    } else {
      const auto K =
          higher_residue_coeffs(ctx, zero, p.multiplicity, clearance_at(zero));
      term.poly.resize(p.multiplicity);
      double fact = 1.0;
      for (int j = 1; j <= p.multiplicity; ++j) {
        term.poly[j - 1] = K[j - 1] / fact;
        fact *= j;
      }
    }
    rep.terms.push_back(std::move(term));
  }
  return rep;
}

// Real-valued by conjugate pairing: the a_i (.. + conj ..) pair sums to
// 2 a_i Re(C_i(x) e^{-gamma_i x}).
inline double eval_expansion(const ExpansionReport& rep, double x) {
  double acc = rep.C0 * std::exp(-rep.gamma0 * x);
  for (const auto& t : rep.terms) {
    cplx poly = 0.0;
    double xp = 1.0;
    for (const auto& c : t.poly) {
      poly += c * xp;
      xp *= x;
    }
    acc += 2.0 * t.a * (poly * std::exp(-t.gamma * x)).real();
  }
  return acc;
}

}  // namespace levypass
