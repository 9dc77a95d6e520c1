#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "levypass/common.hpp"

namespace levypass {

namespace detail {
// Gauss-Kronrod 15(7) nodes/weights on [-1, 1].
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kGk15WK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGk15WG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
}  // namespace detail

template <typename F, typename R>
void gk15_panel(const F& f, double a, double b, R& integral, double& err) {
  const double hl = 0.5 * (b - a);
  const double c = 0.5 * (a + b);
  R resg{}, resk{};
  for (int i = 0; i < 8; ++i) {
    const double dx = hl * detail::kGk15Nodes[i];
    R fv = (i == 7) ? f(c) : R(f(c - dx) + f(c + dx));
    resk += detail::kGk15WK[i] * fv;
    if (i % 2 == 1) resg += detail::kGk15WG[i / 2] * fv;
  }
  integral = resk * hl;
  err = std::abs(resk * hl - resg * hl);
}

// Adaptive GK15 with explicit breakpoints (the compensator cutoff at |y| = 1
// creates a kink that must be a panel boundary).
template <typename R = double, typename F>
R integrate_adaptive(const F& f, double a, double b, double abs_tol = 1e-10,
                     const std::vector<double>& breaks = {}, int max_depth = 48) {
  if (a == b) return R{};
  struct Seg { double a, b; int depth; };
  std::vector<Seg> stack;
  std::vector<double> pts{a, b};
  for (double p : breaks)
    if (p > a && p < b) pts.push_back(p);
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    stack.push_back({pts[i], pts[i + 1], 0});

  R total{};
  double total_err = 0.0;
  const double per_panel = abs_tol / std::max<std::size_t>(1, stack.size());
  while (!stack.empty()) {
    Seg s = stack.back();
    stack.pop_back();
    R val;
    double err;
    gk15_panel(f, s.a, s.b, val, err);
    if (err < per_panel || err < 1e-16 * (1.0 + std::abs(val)) ||
        s.depth >= max_depth) {
      total += val;
      total_err += err;
    } else {
      const double m = 0.5 * (s.a + s.b);
      stack.push_back({s.a, m, s.depth + 1});
      stack.push_back({m, s.b, s.depth + 1});
    }
  }
  (void)total_err;
  return total;
}

// Closed-form / series evaluation of  int_lo^hi P(y) e^{-s y} dy  for a
// polynomial P given by coeffs (c_0 + c_1 y + ...). Series branch avoids the
// 1/s^k cancellation of the antiderivative when |s|·ymax is small.
inline cplx poly_exp_integral(const std::vector<double>& coeffs, double lo,
                              double hi, cplx s) {
  if (lo == hi || coeffs.empty()) return {0.0, 0.0};
  const double ymax = std::max(std::abs(lo), std::abs(hi));
  const int deg = static_cast<int>(coeffs.size()) - 1;
  if (std::abs(s) * ymax <= 1.0) {
    // sum_n (-s)^n / n! * int P(y) y^n dy
    cplx acc = 0.0, pw = 1.0;
    for (int n = 0; n < 80; ++n) {
      double mom = 0.0;
      for (int j = 0; j <= deg; ++j) {
        const int k = j + n + 1;
        mom += coeffs[j] * (std::pow(hi, k) - std::pow(lo, k)) / k;
      }
      const cplx term = pw * mom;
      acc += term;
      if (std::abs(term) < 1e-18 * (1.0 + std::abs(acc)) && n > 4) break;
      pw *= -s / double(n + 1);
    }
    return acc;
  }
  // Antiderivative of y^j e^{-sy}: -e^{-sy} sum_{r<=j} j!/(j-r)! y^{j-r}/s^{r+1}
  auto anti = [&](double y) {
    cplx total = 0.0;
    const cplx e = std::exp(-s * y);
    for (int j = 0; j <= deg; ++j) {
      if (coeffs[j] == 0.0) continue;
      cplx sum = 0.0;
      double fact = 1.0;  // j!/(j-r)!
      cplx spow = s;
      for (int r = 0; r <= j; ++r) {
        sum += fact * std::pow(y, j - r) / spow;
        fact *= (j - r);
        spow *= s;
      }
      total += -coeffs[j] * e * sum;
    }
    return total;
  };
  return anti(hi) - anti(lo);
}

}  // namespace levypass
