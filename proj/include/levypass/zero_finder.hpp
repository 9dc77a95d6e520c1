#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "levypass/common.hpp"
#include "levypass/process.hpp"

namespace levypass {

// ---------------------------------------------------------------------------
// Real zeros -gamma0(theta) and gamma0_star(theta) of phi_theta = phi - theta.
// phi is strictly convex on the real domain, so each side holds at most one.
// ---------------------------------------------------------------------------

struct RealZeros {
  double gamma0 = 0.0;       // zero at -gamma0, gamma0 in [0, r_nu)
  double gamma0_star = 0.0;  // zero at +gamma0_star
};

namespace detail {

inline double phi_real(const ProcessSpec& spec, double q) {
  return eval_phi(spec, cplx(q, 0.0)).real();
}

// Bracketed bisection + Newton on f(g) = phi(sign * g) - theta, g > 0.
inline double solve_real_zero(const ProcessSpec& spec, double theta, int sign,
                              double lo, double hi) {
  auto f = [&](double g) { return detail::phi_real(spec, sign * g) - theta; };
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-13 * (1.0 + hi)) break;
  }
  double g = 0.5 * (lo + hi);
  for (int it = 0; it < 12; ++it) {  // Newton polish inside the bracket
    const double fv = f(g);
    const double dv =
        sign * eval_phi_derivative(spec, cplx(sign * g, 0.0), 1).real();
    if (dv == 0.0) break;
    const double next = g - fv / dv;
    if (next <= lo || next >= hi) break;
    if (std::abs(next - g) < 1e-16 * (1.0 + g)) {
      g = next;
      break;
    }
    g = next;
  }
  return g;
}

}  // namespace detail

inline RealZeros find_real_zeros(const ProcessSpec& spec, double theta) {
  if (theta < 0.0) throw DomainError("theta must be nonnegative");
  const double r_nu = spec.measure.r_nu();
  const double mean = mean_x1(spec);
  RealZeros out;

  // gamma0: phi(-gamma0) = theta with gamma0 in [0, r_nu)
  if (theta == 0.0 && mean >= -1e-14) {
    out.gamma0 = 0.0;
  } else {
    if (r_nu <= 0.0)
      throw NoNegativeZero(
          "phi has no zero in (-r_nu, 0]: r_nu = 0 (fall back to the "
          "O(e^{-(r_nu-eps)x}) statement)");
    const double lo = (theta > 0.0) ? 0.0 : 1e-9;
    double hi = 0.0;
    bool bracketed = false;
    if (std::isfinite(r_nu)) {
      for (int k = 2; k < 60 && !bracketed; ++k) {
        hi = r_nu * (1.0 - std::pow(0.5, k));
        bracketed = detail::phi_real(spec, -hi) - theta > 0.0;
      }
    } else {
      for (hi = 1.0; hi < 1e13 && !bracketed; hi *= 2.0)
        bracketed = detail::phi_real(spec, -hi) - theta > 0.0;
    }
    if (!bracketed)
      throw NoNegativeZero("phi(-gamma) never exceeds theta before -r_nu");
    out.gamma0 = detail::solve_real_zero(spec, theta, -1, lo, hi);
  }

  // gamma0_star: phi(gamma0_star) = theta with gamma0_star >= 0
  if (theta == 0.0 && mean <= 1e-14) {
    out.gamma0_star = 0.0;
  } else {
    const double lo = (theta > 0.0) ? 0.0 : 1e-9;
    double hi = 0.0;
    bool bracketed = false;
    for (hi = 1.0; hi < 1e13 && !bracketed; hi *= 2.0)
      bracketed = detail::phi_real(spec, hi) - theta > 0.0;
    if (!bracketed) throw Error("phi(gamma) never exceeds theta on the right");
    out.gamma0_star = detail::solve_real_zero(spec, theta, +1, lo, hi);
  }
  return out;
}

// Bromwich-line placement margin: inside (0, gamma0_star) when the latter is
// positive, else a conservative default clipped by r_nu.
inline double beta_theta(const ProcessSpec& spec, const RealZeros& rz) {
  if (rz.gamma0_star > 1e-12) return 0.5 * rz.gamma0_star;
  const double r = spec.measure.r_nu();
  return std::isfinite(r) ? std::min(1.0, r / 4.0) : 1.0;
}

// ---------------------------------------------------------------------------
// Strip zeros by the argument principle on rectangles.
// ---------------------------------------------------------------------------

struct StripZero {
  cplx gamma;        // zero of phi_theta at -gamma; Im(gamma) >= 0 representative
  int multiplicity;  // n_i
};

struct ZeroReport {
  double theta = 0.0;
  double gamma0 = 0.0;
  double gamma0_star = 0.0;
  int gamma0_multiplicity = 1;
  std::vector<StripZero> pairs;  // gamma_i ordered by Re ascending, then |Im|
  double strip_B = 0.0;          // effective strip depth actually searched
  double beta_theta = 0.0;
  long total_count = 0;  // zeros in the strip counting multiplicity
  bool ordered = true;   // Re(gamma_i) > gamma0 for every pair
};

namespace detail {

struct Rect {
  double xl, xr, yb, yt;
  double width() const { return xr - xl; }
  double height() const { return yt - yb; }
};

// Winding number of phi_theta along a rectangle boundary, by continuous
// argument tracking with adaptive edge refinement. Throws ContourThroughZero
// when an edge passes within tolerance of a zero. Edges are pre-anchored
// around the declared pole abscissas: a pole hugging the edge can pair with a
// nearby zero so that magnitudes cancel while the phase swings a full turn,
// which uniform sampling plus midpoint checks can alias away.
class WindingTracker {
 public:
  WindingTracker(const ProcessSpec& spec, double theta)
      : spec_(spec), theta_(theta), poles_(spec.measure.poles()) {}

  long winding(const Rect& r) const {
    const cplx c1(r.xl, r.yb), c2(r.xr, r.yb), c3(r.xr, r.yt), c4(r.xl, r.yt);
    double total = 0.0;
    total += edge_arg(c1, c2);
    total += edge_arg(c2, c3);
    total += edge_arg(c3, c4);
    total += edge_arg(c4, c1);
    const double w = total / (2.0 * kPi);
    const long rounded = std::lround(w);
    if (std::abs(w - double(rounded)) > 0.25)
      throw ContourThroughZero("winding count failed to close: " +
                               std::to_string(w));
    return rounded;
  }

 private:
  cplx f(cplx z) const { return eval_phi_theta(spec_, z, theta_); }

  double edge_arg(cplx a, cplx b) const {
    const int base = 16;
    std::vector<double> ts;
    ts.reserve(base + 1);
    for (int i = 0; i <= base; ++i) ts.push_back(double(i) / base);
    // geometric anchor cluster around each pole's projection onto the edge
    const double len = std::abs(b - a);
    for (const auto& [p, order] : poles_) {
      const double u = ((p - a) / (b - a)).real();
      const double d = std::abs(a + (b - a) * u - p) / len;
      if (u < -0.2 || u > 1.2 || d > 1.0) continue;
      const double step = std::max(d, 1e-12);
      for (double k : {-64.0, -16.0, -4.0, -1.0, -0.25, 0.0,
                       0.25, 1.0, 4.0, 16.0, 64.0}) {
        const double t = u + k * step;
        if (t > 0.0 && t < 1.0) ts.push_back(t);
      }
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    double acc = 0.0;
    cplx prev_z = a, prev_f = f(a);
    check_not_zero(prev_z, prev_f);
    for (std::size_t i = 1; i < ts.size(); ++i) {
      const cplx z = a + (b - a) * ts[i];
      const cplx fz = f(z);
      check_not_zero(z, fz);
      acc += refine(prev_z, prev_f, z, fz, 0);
      prev_z = z;
      prev_f = fz;
    }
    return acc;
  }

  // The segment is accepted only when the midpoint is phase- and
  // magnitude-consistent with both endpoints. Endpoint-only stepping aliases
  // a full 2 pi swing to ~0 when the contour passes right over a zero with
  // symmetric samples; the midpoint sits in the |f| dip and forces a split.
  double refine(cplx za, cplx fa, cplx zb, cplx fb, int depth) const {
    const cplx zm = 0.5 * (za + zb);
    const cplx fm = f(zm);
    check_not_zero(zm, fm);
    const double left = std::arg(fm / fa);
    const double right = std::arg(fb / fm);
    const double ml = std::abs(fm / fa);
    const double mr = std::abs(fb / fm);
    const bool ok = std::abs(left) < 1.2 && std::abs(right) < 1.2 &&
                    ml > 0.2 && ml < 5.0 && mr > 0.2 && mr < 5.0;
    if (ok) return left + right;
    if (depth > 44)  // a pole or zero hugs the edge: the caller must move it
      throw ContourThroughZero("edge refinement exhausted");
    return refine(za, fa, zm, fm, depth + 1) + refine(zm, fm, zb, fb, depth + 1);
  }

  void check_not_zero(cplx z, cplx fz) const {
    const double scale = std::max(1.0, std::norm(z));
    if (std::abs(fz) < 1e-9 * scale)
      throw ContourThroughZero("contour passes within tolerance of a zero near " +
                               std::to_string(z.real()) + "+" +
                               std::to_string(z.imag()) + "i");
  }

  const ProcessSpec& spec_;
  double theta_;
  std::vector<std::pair<cplx, int>> poles_;
};

inline long poles_inside(const std::vector<std::pair<cplx, int>>& poles,
                         const Rect& r) {
  long total = 0;
  for (const auto& [p, order] : poles)
    if (p.real() > r.xl && p.real() < r.xr && p.imag() > r.yb && p.imag() < r.yt)
      total += order;
  return total;
}

// Zeros minus declared pole orders come out of the winding; adding the orders
// back gives the zero count (phi_theta is meromorphic, not holomorphic).
inline long count_in_rect(const WindingTracker& wt,
                          const std::vector<std::pair<cplx, int>>& poles,
                          const Rect& r) {
  return wt.winding(r) + poles_inside(poles, r);
}

// Newton on phi_theta / phi_theta' (simple zeros of the ratio at every zero
// of phi_theta regardless of multiplicity; poles are rejected afterwards by
// the residual check).
inline bool polish_zero(const ProcessSpec& spec, double theta, cplx& z) {
  for (int it = 0; it < 80; ++it) {
    cplx fv, dv, d2;
    try {
      fv = eval_phi_theta(spec, z, theta);
      dv = eval_phi_derivative(spec, z, 1);
      d2 = eval_phi_derivative(spec, z, 2);
    } catch (const PoleHit&) {
      return false;
    }
    if (std::abs(dv) == 0.0) return false;
    const cplx g = fv / dv;
    const cplx denom = 1.0 - g * (d2 / dv);
    const cplx step = (std::abs(denom) > 1e-3) ? g / denom : g;
    z -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(z))) break;
  }
  cplx residual;
  try {
    residual = eval_phi_theta(spec, z, theta);
  } catch (const PoleHit&) {
    return false;
  }
  return std::abs(residual) < 1e-9 * std::max(1.0, std::norm(z));
}

}  // namespace detail

// Multiplicity of the zero z of phi_theta: analytic derivatives for orders
// 1-2, Cauchy-circle Taylor coefficients beyond.
inline int multiplicity_at(const ProcessSpec& spec, double theta, cplx z) {
  const double scale0 = std::max(1.0, std::norm(z));
  if (std::abs(eval_phi_theta(spec, z, theta)) > 1e-6 * scale0)
    throw DomainError("multiplicity_at: point is not a zero of phi_theta");

  double r = 1e-2;
  for (const auto& [p, order] : spec.measure.poles())
    r = std::min(r, 0.45 * std::abs(z - p));
  if (r <= 0.0) throw DomainError("multiplicity_at: zero coincides with a pole");

  const int M = 64;
  std::vector<cplx> ring(M);
  double ring_max = 0.0;
  for (int j = 0; j < M; ++j) {
    const double a = 2.0 * kPi * j / M;
    ring[j] = eval_phi_theta(spec, z + r * cplx(std::cos(a), std::sin(a)), theta);
    ring_max = std::max(ring_max, std::abs(ring[j]));
  }
  const double d1 = std::abs(eval_phi_derivative(spec, z, 1)) * r;
  if (d1 > 1e-6 * ring_max) return 1;
  const double d2 = std::abs(eval_phi_derivative(spec, z, 2)) * r * r / 2.0;
  if (d2 > 1e-6 * ring_max) return 2;
  for (int k = 3; k <= 6; ++k) {
    cplx ck = 0.0;
    for (int j = 0; j < M; ++j) {
      const double a = 2.0 * kPi * j / M;
      ck += ring[j] * cplx(std::cos(k * a), -std::sin(k * a));
    }
    ck /= double(M);
    if (std::abs(ck) > 1e-6 * ring_max) return k;
  }
  throw InconclusiveMultiplicity("orders 1..6 all vanish at the zero");
}

inline ZeroReport find_strip_zeros(const ProcessSpec& spec, double theta,
                                   double B) {
  const auto hyp = validate_hypotheses(spec, B);
  if (!hyp.satisfied)
    throw HypothesisUnverified("measure fails the strip growth hypothesis: " +
                               hyp.detail);
  if (!(B > 0.0) || B >= hyp.B_nu)
    throw DomainError("strip depth must satisfy 0 < B < B_nu");

  ZeroReport rep;
  rep.theta = theta;
  const RealZeros rz = find_real_zeros(spec, theta);
  rep.gamma0 = rz.gamma0;
  rep.gamma0_star = rz.gamma0_star;
  rep.beta_theta = beta_theta(spec, rz);
  const double mean = mean_x1(spec);
  rep.gamma0_multiplicity = (theta == 0.0 && std::abs(mean) <= 1e-12) ? 2 : 1;

  const auto poles = spec.measure.poles();
  const detail::WindingTracker wt(spec, theta);

  // Left edge: step inward (never outward, so the searched strip stays inside
  // the requested one) until it is off poles and off zeros.
  double Bedge = B;
  for (const auto& [p, order] : poles)
    while (std::abs(-Bedge - p.real()) < 1e-3) Bedge -= 2.7e-3;

  // Grow R until the total count stabilizes over two consecutive doublings.
  double R = std::max(8.0, 4.0 * Bedge);
  long total = 0;
  {
    long prev = -1, prev2 = -2;
    for (int grow = 0; grow < 12; ++grow) {
      long cnt = 0;
      bool ok = false;
      for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
        try {
          cnt = detail::count_in_rect(wt, poles,
                                      {-Bedge, rep.beta_theta, -R, R});
          ok = true;
        } catch (const ContourThroughZero&) {
          Bedge -= 3.1e-3 * (attempt + 1);  // inward jitter
        }
      }
      if (!ok)
        throw ContourThroughZero("could not place a clean strip boundary");
      if (cnt == prev && prev == prev2) {
        total = cnt;
        break;
      }
      prev2 = prev;
      prev = cnt;
      total = cnt;
      if (grow == 11) break;
      R *= 2.0;
    }
  }
  rep.strip_B = Bedge;
  rep.total_count = total;

  // --- real zeros: the known pair plus any in the extension (-B, -gamma0) ---
  struct RealHit {
    double q;
    int mult;
  };
  std::vector<RealHit> reals;
  auto push_real = [&](double q) {
    for (const auto& h : reals)
      if (std::abs(h.q - q) < 1e-8 * (1.0 + std::abs(q))) return;
    reals.push_back({q, multiplicity_at(spec, theta, cplx(q, 0.0))});
  };
  push_real(-rz.gamma0);
  // gamma0_star is inside the strip only when it is 0 (beta_theta = gamma0_star/2
  // places the right edge strictly left of a positive gamma0_star)
  if (rz.gamma0_star < rep.beta_theta) push_real(rz.gamma0_star);

  {
    const int N = 4096;
    const double lo = -Bedge + 1e-9, hi = -rz.gamma0 - 1e-7;
    if (hi > lo) {
      auto safe_phi = [&](double q) -> double {
        try {
          return detail::phi_real(spec, q) - theta;
        } catch (const PoleHit&) {
          return kNaN;
        }
      };
      // uniform grid plus geometric clusters at the poles: a zero and a pole
      // inside one uniform cell flip the sign twice and would go unseen
      std::vector<double> qs;
      qs.reserve(N + 1);
      for (int i = 0; i <= N; ++i) qs.push_back(lo + (hi - lo) * i / N);
      for (const auto& [p, order] : poles) {
        const double pr = p.real();
        if (pr < lo || pr > hi) continue;
        for (double d = 1e-9; d < 0.5; d *= 2.2) {
          if (pr - d > lo) qs.push_back(pr - d);
          if (pr + d < hi) qs.push_back(pr + d);
        }
      }
      std::sort(qs.begin(), qs.end());
      double prev_q = qs.front(), prev_f = safe_phi(qs.front());
      for (std::size_t qi = 1; qi < qs.size(); ++qi) {
        const double q = qs[qi];
        const double fq = safe_phi(q);
        if (std::isfinite(prev_f) && std::isfinite(fq) &&
            ((prev_f < 0.0) != (fq < 0.0))) {
          double a = prev_q, b = q, fa = prev_f;
          for (int it = 0; it < 100; ++it) {
            const double m = 0.5 * (a + b);
            const double fm = safe_phi(m);
            if (!std::isfinite(fm)) break;
            if ((fm < 0.0) == (fa < 0.0)) {
              a = m;
              fa = fm;
            } else {
              b = m;
            }
          }
          // a sign flip across a pole is not a zero: at a genuine zero the
          // bisection midpoint has |phi_theta| ~ 0, at a pole it blows up
          const double mid = 0.5 * (a + b);
          const double fmid = safe_phi(mid);
          if (std::isfinite(fmid) &&
              std::abs(fmid) < 1e-5 * std::max(1.0, mid * mid))
            push_real(mid);
        }
        prev_q = q;
        prev_f = fq;
      }
    }
  }

  // --- complex zeros: quadtree over the open upper half-strip ---
  std::vector<StripZero> upper;
  auto push_upper = [&](cplx z, int mult) {
    for (const auto& u : upper)
      if (std::abs(u.gamma - cplx(-z.real(), -z.imag())) < 1e-9) return false;
    upper.push_back({cplx(-z.real(), -z.imag()), mult});
    return true;
  };

  static constexpr double kSeamOffsets[8] = {0.0,    0.073, -0.081, 0.142,
                                             -0.117, 0.191, -0.163, 0.037};

  double delta_floor = 1e-6;  // the upper rectangle's bottom edge
  std::function<void(detail::Rect, long, int)> descend =
      [&](detail::Rect r, long count, int depth) {
        if (count <= 0) return;
        if (depth > 64) throw Error("zero subdivision failed to isolate a zero");
        const double diag = std::hypot(r.width(), r.height());
        // Try a direct polish first. Accept only an in-cell certified hit
        // strictly above the bottom floor: Newton can escape to a real-axis
        // zero, which must never be double-counted as a complex one.
        {
          cplx z(0.5 * (r.xl + r.xr), 0.5 * (r.yb + r.yt));
          if (detail::polish_zero(spec, theta, z)) {
            const double mx = 0.02 * r.width() + 1e-9;
            const double my = 0.02 * r.height() + 1e-9;
            if (z.real() > r.xl - mx && z.real() < r.xr + mx &&
                z.imag() > std::max(r.yb - my, delta_floor) &&
                z.imag() < r.yt + my) {
              const int mult = multiplicity_at(spec, theta, z);
              if (mult == count) {
                if (push_upper(z, mult)) return;
                throw Error("duplicate zero certification in subdivision");
              }
            }
          }
          if (diag < 1e-9)
            throw Error("could not certify zero in minimal cell");
        }
        // split at jittered seams that exactly partition the parent; seams
        // steer clear of pole abscissas, and an unexplained count mismatch is
        // treated as a seam placement problem and retried
        for (int attempt = 0; attempt < 8; ++attempt) {
          double xm = r.xl + r.width() * (0.5 + kSeamOffsets[attempt] * 0.7);
          const double ym =
              r.yb + r.height() * (0.5 + kSeamOffsets[(attempt + 3) % 8] * 0.7);
          for (const auto& [p, order] : poles)
            if (std::abs(xm - p.real()) < 2e-3 * r.width())
              xm = p.real() +
                   (xm >= p.real() ? 3e-3 : -3e-3) * r.width();
          if (xm <= r.xl || xm >= r.xr) continue;
          const detail::Rect quads[4] = {{r.xl, xm, r.yb, ym},
                                         {xm, r.xr, r.yb, ym},
                                         {r.xl, xm, ym, r.yt},
                                         {xm, r.xr, ym, r.yt}};
          long counts[4];
          bool clean = true;
          long seen = 0;
          for (int i = 0; i < 4 && clean; ++i) {
            try {
              counts[i] = detail::count_in_rect(wt, poles, quads[i]);
              seen += counts[i];
            } catch (const ContourThroughZero&) {
              clean = false;
            }
          }
          if (!clean || seen != count) continue;
          for (int i = 0; i < 4; ++i) descend(quads[i], counts[i], depth + 1);
          return;
        }
        throw ContourThroughZero(
            "no clean seam placement partitioned the zero count");
      };

  {
    long upper_count = 0;
    bool ok = false;
    for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
      try {
        const detail::Rect up{-Bedge, rep.beta_theta, delta_floor, R};
        upper_count = detail::count_in_rect(wt, poles, up);
        descend(up, upper_count, 0);
        ok = true;
      } catch (const ContourThroughZero&) {
        upper.clear();
        delta_floor *= 3.7;
      }
    }
    if (!ok)
      throw ContourThroughZero("could not place the upper half-strip contour");
  }

  // conjugate-paired completeness: full count == reals + 2 * upper
  long reals_mult = 0;
  for (const auto& h : reals) reals_mult += h.mult;
  long upper_mult = 0;
  for (const auto& u : upper) upper_mult += u.multiplicity;
  if (reals_mult + 2 * upper_mult != total)
    throw Error("winding completeness check failed: total " +
                std::to_string(total) + " vs " + std::to_string(reals_mult) +
                " real + 2*" + std::to_string(upper_mult) + " complex");

  // gamma_i list: every strip zero except -gamma0 and gamma0_star
  for (const auto& h : reals) {
    if (std::abs(h.q + rz.gamma0) < 1e-8) continue;
    if (std::abs(h.q - rz.gamma0_star) < 1e-8) continue;
    rep.pairs.push_back({cplx(-h.q, 0.0), h.mult});
  }
  for (const auto& u : upper) rep.pairs.push_back(u);

  std::sort(rep.pairs.begin(), rep.pairs.end(),
            [](const StripZero& a, const StripZero& b) {
              if (std::abs(a.gamma.real() - b.gamma.real()) > 1e-12)
                return a.gamma.real() < b.gamma.real();
              return std::abs(a.gamma.imag()) < std::abs(b.gamma.imag());
            });
  for (const auto& p : rep.pairs)
    if (p.gamma.real() <= rz.gamma0 + 1e-12) rep.ordered = false;
  return rep;
}

}  // namespace levypass
