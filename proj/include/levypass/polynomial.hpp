#pragma once

#include <cmath>
#include <vector>

#include "levypass/common.hpp"

namespace levypass {

inline cplx polynomial_eval(const std::vector<cplx>& coeffs, cplx z) {
  cplx acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * z + coeffs[i];
  return acc;
}

inline cplx polynomial_eval_derivative(const std::vector<cplx>& coeffs, cplx z) {
  cplx acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 1;) acc = acc * z + double(i) * coeffs[i];
  return acc;
}

// All complex roots of sum_k coeffs[k] z^k by Aberth–Ehrlich simultaneous
// iteration. Adequate for the modest-degree numerators arising from rational
// jump transforms; roots are Newton-polished at the end.
inline std::vector<cplx> polynomial_roots(std::vector<cplx> coeffs) {
  while (!coeffs.empty() && std::abs(coeffs.back()) == 0.0) coeffs.pop_back();
  const int n = static_cast<int>(coeffs.size()) - 1;
  if (n < 1) return {};
  for (auto& c : coeffs) c /= coeffs.back();

  double radius = 0.0;
  for (int k = 0; k < n; ++k) radius = std::max(radius, std::abs(coeffs[k]));
  radius = 1.0 + radius;

  std::vector<cplx> z(n);
  for (int i = 0; i < n; ++i) {
    const double angle = 2.0 * kPi * i / n + 0.4;
    z[i] = radius * cplx(std::cos(angle), std::sin(angle));
  }

  for (int iter = 0; iter < 800; ++iter) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const cplx p = polynomial_eval(coeffs, z[i]);
      const cplx dp = polynomial_eval_derivative(coeffs, z[i]);
      if (std::abs(dp) == 0.0) {
        z[i] += cplx(1e-8, 1e-8);
        worst = 1.0;
        continue;
      }
      const cplx w = p / dp;
      cplx rep = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) rep += 1.0 / (z[i] - z[j]);
      const cplx delta = w / (1.0 - w * rep);
      z[i] -= delta;
      worst = std::max(worst, std::abs(delta) / (1.0 + std::abs(z[i])));
    }
    if (worst < 1e-15) break;
  }

  // final Newton polish in extended precision: clustered roots near poles
  // are ill-conditioned in the coefficient basis and need the extra digits
  using lcplx = std::complex<long double>;
  std::vector<lcplx> lc(coeffs.size());
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    lc[k] = lcplx(coeffs[k].real(), coeffs[k].imag());
  for (int i = 0; i < n; ++i) {
    lcplx zi(z[i].real(), z[i].imag());
    for (int it = 0; it < 12; ++it) {
      lcplx p = 0.0, dp = 0.0;
      for (std::size_t k = lc.size(); k-- > 0;) p = p * zi + lc[k];
      for (std::size_t k = lc.size(); k-- > 1;) dp = dp * zi + (long double)(k)*lc[k];
      if (std::abs(dp) == 0.0L) break;
      const lcplx step = p / dp;
      zi -= step;
      if (std::abs(step) < 1e-19L * (1.0L + std::abs(zi))) break;
    }
    z[i] = cplx(double(zi.real()), double(zi.imag()));
  }
  return z;
}

// Convolution helper for assembling numerator polynomials.
inline std::vector<cplx> polynomial_multiply(const std::vector<cplx>& a,
                                             const std::vector<cplx>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<cplx> out(a.size() + b.size() - 1, cplx(0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline std::vector<cplx> polynomial_add(std::vector<cplx> a,
                                        const std::vector<cplx>& b) {
  if (a.size() < b.size()) a.resize(b.size(), cplx(0.0));
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  return a;
}

}  // namespace levypass
