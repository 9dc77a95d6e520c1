#pragma once

// Test-only oracles, kept independent of the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "levypass/polynomial.hpp"
#include "levypass/process.hpp"

namespace levypass::testing {

// For a GammaMixture spec, phi_theta is rational:
//   phi_theta(q) = base(q) + sum_i rho_i m_i! / (q + beta_i)^{m_i+1},
//   base(q)      = q^2/2 + (c + CL) q - (theta + MS).
// Multiplying by D(q) = prod_i (q + beta_i)^{m_i+1} gives the numerator
// polynomial whose roots (off the poles) are exactly the zeros of phi_theta.
inline std::vector<cplx> gamma_mixture_numerator(const ProcessSpec& spec,
                                                 double theta) {
  const auto* gm = spec.measure.get_if<GammaMixture>();
  if (!gm) throw DomainError("oracle needs a GammaMixture spec");
  const double cl = spec.measure.compensator_linear();
  const double ms = spec.measure.mass();
  const std::vector<cplx> base = {cplx(-(theta + ms)), cplx(spec.drift + cl),
                                  cplx(0.5)};

  std::vector<cplx> D = {cplx(1.0)};
  for (const auto& c : gm->components) {
    for (int k = 0; k <= c.m; ++k)
      D = polynomial_multiply(D, {cplx(c.beta), cplx(1.0)});
  }
  std::vector<cplx> N = polynomial_multiply(base, D);
  for (std::size_t i = 0; i < gm->components.size(); ++i) {
    const auto& ci = gm->components[i];
    std::vector<cplx> rest = {cplx(1.0)};
    for (std::size_t j = 0; j < gm->components.size(); ++j) {
      if (j == i) continue;
      const auto& cj = gm->components[j];
      for (int k = 0; k <= cj.m; ++k)
        rest = polynomial_multiply(rest, {cplx(cj.beta), cplx(1.0)});
    }
    double fact = 1.0;
    for (int k = 2; k <= ci.m; ++k) fact *= k;
    std::vector<cplx> term = rest;
    for (auto& t : term) t *= ci.rho * fact;
    N = polynomial_add(N, term);
  }
  return N;
}

// All zeros of phi_theta for a GammaMixture spec, by polynomial root solving
// on the numerator (spurious pole cancellations filtered out).
inline std::vector<cplx> gamma_mixture_zeros(const ProcessSpec& spec,
                                             double theta) {
  auto roots = polynomial_roots(gamma_mixture_numerator(spec, theta));
  std::vector<cplx> out;
  for (const auto& r : roots) {
    bool at_pole = false;
    for (const auto& [p, order] : spec.measure.poles())
      if (std::abs(r - p) < 1e-7) at_pole = true;
    if (!at_pole) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](cplx a, cplx b) {
    if (std::abs(a.real() - b.real()) > 1e-10) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

// Plain adaptive Simpson, independent of the library quadrature.
inline double simpson_adaptive(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-12, int depth = 0) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  std::function<double(double, double, double, double, double, double, int)>
      rec = [&](double x0, double x2, double f0, double f1, double f2,
                double whole, int d) -> double {
    const double x1 = 0.5 * (x0 + x2);
    const double lm = 0.5 * (x0 + x1), rm = 0.5 * (x1 + x2);
    const double flm = f(lm), frm = f(rm);
    const double left = (x1 - x0) / 6.0 * (f0 + 4.0 * flm + f1);
    const double right = (x2 - x1) / 6.0 * (f1 + 4.0 * frm + f2);
    if (d > 50 || std::abs(left + right - whole) < 15.0 * tol)
      return left + right + (left + right - whole) / 15.0;
    return rec(x0, x1, f0, flm, f1, left, d + 1) +
           rec(x1, x2, f1, frm, f2, right, d + 1);
  };
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return rec(a, b, fa, fm, fb, whole, depth);
}

inline double oracle_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// InverseGaussian(mu, lambda) distribution function; closed-form hitting law
// of Brownian motion with drift.
inline double inverse_gaussian_cdf(double t, double mu, double lambda) {
  if (t <= 0.0) return 0.0;
  const double a = std::sqrt(lambda / t);
  const double tail = oracle_normal_cdf(-a * (t / mu + 1.0));
  const double reflected =
      tail > 0.0 ? std::exp(2.0 * lambda / mu + std::log(tail)) : 0.0;
  return oracle_normal_cdf(a * (t / mu - 1.0)) + reflected;
}

}  // namespace levypass::testing
