#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <variant>
#include <vector>

#include "levypass/common.hpp"
#include "levypass/quadrature.hpp"
#include "levypass/rng.hpp"

namespace levypass {

// ---------------------------------------------------------------------------
// Measure variants. A closed tagged union: every analytic quantity (transform,
// poles, moments, exponential abscissa) is derivable per variant.
// ---------------------------------------------------------------------------

struct GammaComponent {
  double rho = 1.0;   // amplitude
  double beta = 1.0;  // decay rate, pole of the transform at -beta
  int m = 0;          // polynomial order, density rho * y^m * exp(-beta y)
};

struct GammaMixture {
  std::vector<GammaComponent> components;
};

struct PolyPiece {
  double lo = 0.0, hi = 1.0;
  std::vector<double> coeffs;  // density = sum_j coeffs[j] * y^j on [lo, hi]
};

struct CompactDensity {
  std::vector<PolyPiece> pieces;
};

struct Atom {
  double y = 1.0;
  double mass = 1.0;
};

struct Atoms {
  std::vector<Atom> atoms;  // may be empty: the pure-diffusion case
};

struct PowerTail {
  double amplitude = 1.0;  // density amplitude * y^{-alpha} on [cutoff, inf)
  double alpha = 6.0;      // must exceed 2 so big jumps are integrable
  double cutoff = 1.0;     // must be > 0 so the measure is finite-activity
};

class JumpMeasure;

struct SumMeasure {
  std::vector<JumpMeasure> parts;
};

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// int_0^1 y^k exp(-beta y) dy
inline double lower_exp_moment(int k, double beta) {
  return poly_exp_integral(
             [](int kk) {
               std::vector<double> c(kk + 1, 0.0);
               c[kk] = 1.0;
               return c;
             }(k),
             0.0, 1.0, cplx(beta, 0.0))
      .real();
}

// int P(y) y^k dy over [lo, hi]
inline double poly_moment(const std::vector<double>& coeffs, double lo,
                          double hi, int k) {
  double acc = 0.0;
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const int p = static_cast<int>(j) + k + 1;
    acc += coeffs[j] * (std::pow(hi, p) - std::pow(lo, p)) / p;
  }
  return acc;
}

// Gamma(m+1, beta) upper tail integral  int_l^inf y^m e^{-beta y} dy.
inline double gamma_tail(int m, double beta, double l) {
  if (l <= 0.0) return factorial(m) / std::pow(beta, m + 1);
  double series = 0.0, term = 1.0;
  for (int j = 0; j <= m; ++j) {
    series += term;
    term *= beta * l / (j + 1);
  }
  return factorial(m) / std::pow(beta, m + 1) * std::exp(-beta * l) * series;
}

}  // namespace detail

// ---------------------------------------------------------------------------

class JumpMeasure {
 public:
  using Variant =
      std::variant<GammaMixture, CompactDensity, Atoms, PowerTail, SumMeasure>;

  JumpMeasure() : v_(Atoms{}) {}
  JumpMeasure(GammaMixture g) : v_(std::move(g)) { validate(); }
  JumpMeasure(CompactDensity c) : v_(std::move(c)) { validate(); }
  JumpMeasure(Atoms a) : v_(std::move(a)) { validate(); }
  JumpMeasure(PowerTail p) : v_(std::move(p)) { validate(); }
  JumpMeasure(SumMeasure s) : v_(std::move(s)) { validate(); }

  static JumpMeasure none() { return JumpMeasure(Atoms{}); }

  const Variant& variant() const { return v_; }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }

  // ---- structural metadata ----

  double mass() const {  // nu(R), finite for every supported variant
    return visit_sum([](const GammaComponent& c) {
      return c.rho * detail::factorial(c.m) / std::pow(c.beta, c.m + 1);
    },
    [](const PolyPiece& p) { return detail::poly_moment(p.coeffs, p.lo, p.hi, 0); },
    [](const Atom& a) { return a.mass; },
    [](const PowerTail& p) {
      return p.amplitude * std::pow(p.cutoff, 1.0 - p.alpha) / (p.alpha - 1.0);
    });
  }

  double mean_jump() const {  // int y nu(dy)
    return visit_sum([](const GammaComponent& c) {
      return c.rho * detail::factorial(c.m + 1) / std::pow(c.beta, c.m + 2);
    },
    [](const PolyPiece& p) { return detail::poly_moment(p.coeffs, p.lo, p.hi, 1); },
    [](const Atom& a) { return a.mass * a.y; },
    [](const PowerTail& p) {
      return p.amplitude * std::pow(p.cutoff, 2.0 - p.alpha) / (p.alpha - 2.0);
    });
  }

  double moment2() const {  // int y^2 nu(dy); +inf for PowerTail alpha <= 3
    return visit_sum([](const GammaComponent& c) {
      return c.rho * detail::factorial(c.m + 2) / std::pow(c.beta, c.m + 3);
    },
    [](const PolyPiece& p) { return detail::poly_moment(p.coeffs, p.lo, p.hi, 2); },
    [](const Atom& a) { return a.mass * a.y * a.y; },
    [](const PowerTail& p) {
      if (p.alpha <= 3.0) return kInf;
      return p.amplitude * std::pow(p.cutoff, 3.0 - p.alpha) / (p.alpha - 3.0);
    });
  }

  // int y 1_{|y|<1} nu(dy), the compensator's linear coefficient
  double compensator_linear() const {
    return visit_sum([](const GammaComponent& c) {
      return c.rho * detail::lower_exp_moment(c.m + 1, c.beta);
    },
    [](const PolyPiece& p) {
      const double lo = std::max(p.lo, -1.0), hi = std::min(p.hi, 1.0);
      if (lo >= hi) return 0.0;
      return detail::poly_moment(p.coeffs, lo, hi, 1);
    },
    [](const Atom& a) { return std::abs(a.y) < 1.0 ? a.mass * a.y : 0.0; },
    [](const PowerTail& p) {
      if (p.cutoff >= 1.0) return 0.0;
      return p.amplitude * (std::pow(p.cutoff, 2.0 - p.alpha) - 1.0) /
             (p.alpha - 2.0);
    });
  }

  double abs_mean_big() const {  // int |y| 1_{|y|>1} nu(dy)
    return visit_sum([](const GammaComponent& c) {
      return c.rho * detail::gamma_tail(c.m + 1, c.beta, 1.0);
    },
    [](const PolyPiece& p) {
      double acc = 0.0;
      if (p.hi > 1.0)
        acc += detail::poly_moment(p.coeffs, std::max(p.lo, 1.0), p.hi, 1);
      if (p.lo < -1.0)
        acc -= detail::poly_moment(p.coeffs, p.lo, std::min(p.hi, -1.0), 1);
      return acc;
    },
    [](const Atom& a) { return std::abs(a.y) > 1.0 ? a.mass * std::abs(a.y) : 0.0; },
    [](const PowerTail& p) {
      const double lo = std::max(1.0, p.cutoff);
      return p.amplitude * std::pow(lo, 2.0 - p.alpha) / (p.alpha - 2.0);
    });
  }

  // sup{s : int_1^inf e^{sy} nu(dy) < inf}
  double r_nu() const {
    double r = kInf;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, GammaMixture>) {
        for (const auto& c : leaf.components) r = std::min(r, c.beta);
      } else if constexpr (std::is_same_v<T, PowerTail>) {
        r = 0.0;
      }
    });
    return r;
  }

  double B_nu() const {  // meromorphic-extension abscissa of the transform
    double b = kInf;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, PowerTail>) b = 0.0;
      (void)leaf;
    });
    return b;
  }

  bool has_extension() const { return B_nu() > 0.0; }

  bool entire() const {  // transform entire (no poles, no cut)
    bool e = true;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, GammaMixture>) {
        if (!leaf.components.empty()) e = false;
      } else if constexpr (std::is_same_v<T, PowerTail>) {
        e = false;
      }
    });
    return e;
  }

  std::vector<std::pair<cplx, int>> poles() const {
    std::vector<std::pair<cplx, int>> out;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, GammaMixture>) {
        for (const auto& c : leaf.components) {
          bool merged = false;
          for (auto& p : out)
            if (std::abs(p.first.real() + c.beta) < 1e-14) {
              p.second = std::max(p.second, c.m + 1);
              merged = true;
            }
          if (!merged) out.push_back({cplx(-c.beta, 0.0), c.m + 1});
        }
      }
    });
    return out;
  }

  bool spectrally_positive() const {
    bool sp = true;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, CompactDensity>) {
        for (const auto& p : leaf.pieces)
          if (p.lo < 0.0) sp = false;
      } else if constexpr (std::is_same_v<T, Atoms>) {
        for (const auto& a : leaf.atoms)
          if (a.y < 0.0) sp = false;
      }
    });
    return sp;
  }

  double neg_support_bound() const {  // k_cut: negative support in [-k_cut, 0)
    double k = 0.0;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, CompactDensity>) {
        for (const auto& p : leaf.pieces) k = std::max(k, -p.lo);
      } else if constexpr (std::is_same_v<T, Atoms>) {
        for (const auto& a : leaf.atoms) k = std::max(k, -a.y);
      }
    });
    return k;
  }

  // Largest |y| scale at which the transform oscillates on vertical lines
  // (0 for decaying transforms); sets the Bromwich panel resolution.
  double support_radius() const {
    double r = 0.0;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, Atoms>) {
        for (const auto& a : leaf.atoms) r = std::max(r, std::abs(a.y));
      } else if constexpr (std::is_same_v<T, CompactDensity>) {
        for (const auto& p : leaf.pieces)
          r = std::max({r, std::abs(p.lo), std::abs(p.hi)});
      }
    });
    return r;
  }

  // Supremum of p with int_0^inf y^p nu(dy) < inf, capped at 64.
  double moment_order_sup() const {
    double p = 64.0;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, PowerTail>)
        p = std::min(p, leaf.alpha - 1.0);
    });
    return p;
  }

  // ---- transform machinery ----

  // laplace(s, order, pos_only): d^order/ds^order of int e^{-s y} nu(dy),
  // i.e. int (-y)^order e^{-s y} nu(dy). For GammaMixture this is the
  // meromorphic extension (valid at any s off the poles); PowerTail requires
  // Re s >= 0.
  cplx laplace(cplx s, int order = 0, bool pos_only = false) const {
    cplx acc = 0.0;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, GammaMixture>) {
        for (const auto& c : leaf.components) {
          if (std::abs(s + c.beta) < 1e-13)
            throw PoleHit("transform pole at s = " + std::to_string(-c.beta));
          // d^k/ds^k  rho m!/(s+beta)^{m+1} = rho (-1)^k (m+k)!/m! * m!/(s+beta)^{m+k+1}
          const double sign = (order % 2 == 0) ? 1.0 : -1.0;
          acc += sign * c.rho * detail::factorial(c.m + order) /
                 std::pow(s + c.beta, c.m + order + 1);
        }
      } else if constexpr (std::is_same_v<T, CompactDensity>) {
        for (const auto& p : leaf.pieces) {
          double lo = p.lo, hi = p.hi;
          if (pos_only) {
            lo = std::max(lo, 0.0);
            if (lo >= hi) continue;
          }
          // (-y)^order P(y): multiply coefficient vector by (-1)^order y^order
          std::vector<double> c(p.coeffs.size() + order, 0.0);
          const double sign = (order % 2 == 0) ? 1.0 : -1.0;
          for (std::size_t j = 0; j < p.coeffs.size(); ++j)
            c[j + order] = sign * p.coeffs[j];
          acc += poly_exp_integral(c, lo, hi, s);
        }
      } else if constexpr (std::is_same_v<T, Atoms>) {
        for (const auto& a : leaf.atoms) {
          if (pos_only && a.y < 0.0) continue;
          acc += a.mass * std::pow(cplx(-a.y, 0.0), order) * std::exp(-s * a.y);
        }
      } else if constexpr (std::is_same_v<T, PowerTail>) {
        if (s.real() < 0.0)
          throw DomainError("PowerTail transform requires Re s >= 0");
        if (s == cplx(0.0, 0.0)) {
          switch (order) {
            case 0: acc += JumpMeasure(leaf).mass(); return;
            case 1: acc += -JumpMeasure(leaf).mean_jump(); return;
            case 2: acc += JumpMeasure(leaf).moment2(); return;
            default: throw DomainError("PowerTail moment order unsupported");
          }
        }
        const double scale = std::max(s.real(), 1e-3);
        const double upper = leaf.cutoff + 80.0 / scale;
        acc += integrate_adaptive<cplx>(
            [&](double y) {
              return std::pow(cplx(-y, 0.0), order) * std::exp(-s * y) *
                     leaf.amplitude * std::pow(y, -leaf.alpha);
            },
            leaf.cutoff, upper, 1e-12, {1.0});
      }
    });
    return acc;
  }

  cplx laplace_pos(cplx s, int order = 0) const { return laplace(s, order, true); }

  // nu([l, inf)) for l >= 0 (l = 0 gives the positive-part mass).
  double tail_mass(double l) const {
    return visit_sum([&](const GammaComponent& c) {
      return c.rho * detail::gamma_tail(c.m, c.beta, l);
    },
    [&](const PolyPiece& p) {
      const double lo = std::max(p.lo, l);
      if (lo >= p.hi) return 0.0;
      return detail::poly_moment(p.coeffs, lo, p.hi, 0);
    },
    [&](const Atom& a) { return a.y >= l && a.y > 0.0 ? a.mass : 0.0; },
    [&](const PowerTail& p) {
      return p.amplitude * std::pow(std::max(l, p.cutoff), 1.0 - p.alpha) /
             (p.alpha - 1.0);
    });
  }

  // int_(0,inf) f(y) nu(dy) for an arbitrary integrand (atoms enter as sums,
  // densities by adaptive quadrature with exponential/power tail cutoffs).
  template <typename F>
  double integrate_pos(const F& f, double abs_tol = 1e-10) const {
    double acc = 0.0;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, GammaMixture>) {
        for (const auto& c : leaf.components) {
          const double cut = (c.m + 45.0) / c.beta;
          acc += integrate_adaptive<double>(
              [&](double y) {
                return f(y) * c.rho * std::pow(y, c.m) * std::exp(-c.beta * y);
              },
              0.0, cut, abs_tol, {1.0});
        }
      } else if constexpr (std::is_same_v<T, CompactDensity>) {
        for (const auto& p : leaf.pieces) {
          const double lo = std::max(p.lo, 0.0);
          if (lo >= p.hi) continue;
          acc += integrate_adaptive<double>(
              [&](double y) {
                double d = 0.0, yp = 1.0;
                for (double cj : p.coeffs) { d += cj * yp; yp *= y; }
                return f(y) * d;
              },
              lo, p.hi, abs_tol, {1.0});
        }
      } else if constexpr (std::is_same_v<T, Atoms>) {
        for (const auto& a : leaf.atoms)
          if (a.y > 0.0) acc += a.mass * f(a.y);
      } else if constexpr (std::is_same_v<T, PowerTail>) {
        double hi = leaf.cutoff * 2.0;
        double prev = kNaN;
        double sum = 0.0, lo = leaf.cutoff;
        for (int k = 0; k < 60; ++k) {  // dyadic panels until the tail is dead
          sum += integrate_adaptive<double>(
              [&](double y) {
                return f(y) * leaf.amplitude * std::pow(y, -leaf.alpha);
              },
              lo, hi, abs_tol, {1.0});
          if (std::abs(sum - prev) < abs_tol) break;
          prev = sum;
          lo = hi;
          hi *= 2.0;
        }
        acc += sum;
      }
    });
    return acc;
  }

  // int_(-inf,0) f(y) nu(dy) over the negative leaves.
  template <typename F>
  double integrate_neg(const F& f, double abs_tol = 1e-10) const {
    double acc = 0.0;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, CompactDensity>) {
        for (const auto& p : leaf.pieces) {
          const double hi = std::min(p.hi, 0.0);
          if (p.lo >= hi) continue;
          acc += integrate_adaptive<double>(
              [&](double y) {
                double d = 0.0, yp = 1.0;
                for (double cj : p.coeffs) { d += cj * yp; yp *= y; }
                return f(y) * d;
              },
              p.lo, hi, abs_tol, {-1.0});
        }
      } else if constexpr (std::is_same_v<T, Atoms>) {
        for (const auto& a : leaf.atoms)
          if (a.y < 0.0) acc += a.mass * f(a.y);
      }
    });
    return acc;
  }

  // ---- sampling ----

  double sample(Rng& rng) const {
    const double total = mass();
    if (total <= 0.0) throw DomainError("cannot sample from a null measure");
    double u = rng.uniform() * total;
    double out = 0.0;
    bool done = false;
    for_each_leaf([&](const auto& leaf) {
      if (done) return;
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, GammaMixture>) {
        for (const auto& c : leaf.components) {
          const double w = c.rho * detail::factorial(c.m) / std::pow(c.beta, c.m + 1);
          if (u < w) {
            out = rng.gamma_int_shape(c.m, c.beta);
            done = true;
            return;
          }
          u -= w;
        }
      } else if constexpr (std::is_same_v<T, CompactDensity>) {
        for (const auto& p : leaf.pieces) {
          const double w = detail::poly_moment(p.coeffs, p.lo, p.hi, 0);
          if (u < w) {
            out = invert_piece_cdf(p, p.lo, u / w);
            done = true;
            return;
          }
          u -= w;
        }
      } else if constexpr (std::is_same_v<T, Atoms>) {
        for (const auto& a : leaf.atoms) {
          if (u < a.mass) {
            out = a.y;
            done = true;
            return;
          }
          u -= a.mass;
        }
      } else if constexpr (std::is_same_v<T, PowerTail>) {
        const double w = p_mass(leaf);
        if (u < w) {
          out = leaf.cutoff * std::pow(rng.uniform(), -1.0 / (leaf.alpha - 1.0));
          done = true;
          return;
        }
        u -= w;
      }
    });
    if (!done) {
      // numerical slack at the top of the cumulative scan
      out = last_leaf_max();
    }
    return out;
  }

  // One draw from nu restricted to (l, inf), normalized. Used by the
  // overshoot law: S | L = l is nu on (l, inf) / nu([l, inf)).
  double sample_tail(Rng& rng, double l) const {
    const double total = tail_mass(l);
    if (total <= 0.0) throw DomainError("empty tail at l = " + std::to_string(l));
    double u = rng.uniform() * total;
    double out = l;
    bool done = false;
    for_each_leaf([&](const auto& leaf) {
      if (done) return;
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, GammaMixture>) {
        for (const auto& c : leaf.components) {
          const double w = c.rho * detail::gamma_tail(c.m, c.beta, l);
          if (u < w) {
            out = sample_gamma_tail(rng, c, l);
            done = true;
            return;
          }
          u -= w;
        }
      } else if constexpr (std::is_same_v<T, CompactDensity>) {
        for (const auto& p : leaf.pieces) {
          const double lo = std::max(p.lo, l);
          if (lo >= p.hi) continue;
          const double w = detail::poly_moment(p.coeffs, lo, p.hi, 0);
          if (u < w) {
            out = invert_piece_cdf(p, lo, u / w);
            done = true;
            return;
          }
          u -= w;
        }
      } else if constexpr (std::is_same_v<T, Atoms>) {
        for (const auto& a : leaf.atoms) {
          if (a.y < l || a.y <= 0.0) continue;
          if (u < a.mass) {
            out = a.y;
            done = true;
            return;
          }
          u -= a.mass;
        }
      } else if constexpr (std::is_same_v<T, PowerTail>) {
        const double lo = std::max(l, leaf.cutoff);
        const double w =
            leaf.amplitude * std::pow(lo, 1.0 - leaf.alpha) / (leaf.alpha - 1.0);
        if (u < w) {
          out = lo * std::pow(rng.uniform(), -1.0 / (leaf.alpha - 1.0));
          done = true;
          return;
        }
        u -= w;
      }
    });
    return out;
  }

  JumpMeasure truncate_below(double k) const {
    if (k == kInf) return *this;
    if (k <= 0.0) throw DomainError("truncation level must be positive");
    Variant out = std::visit(
        [&](const auto& leaf) -> Variant {
          using T = std::decay_t<decltype(leaf)>;
          if constexpr (std::is_same_v<T, CompactDensity>) {
            CompactDensity trimmed;
            for (auto p : leaf.pieces) {
              if (p.hi <= -k) continue;
              p.lo = std::max(p.lo, -k);
              trimmed.pieces.push_back(p);
            }
            return trimmed;
          } else if constexpr (std::is_same_v<T, Atoms>) {
            Atoms trimmed;
            for (const auto& a : leaf.atoms)
              if (a.y >= -k) trimmed.atoms.push_back(a);
            return trimmed;
          } else if constexpr (std::is_same_v<T, SumMeasure>) {
            SumMeasure s;
            for (const auto& part : leaf.parts)
              s.parts.push_back(part.truncate_below(k));
            return s;
          } else {
            return leaf;  // positive-support variants are unchanged
          }
        },
        v_);
    JumpMeasure jm;
    jm.v_ = std::move(out);
    return jm;
  }

  void validate() const {
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, GammaMixture>) {
        for (const auto& c : leaf.components) {
          if (c.rho <= 0.0 || c.beta <= 0.0 || c.m < 0)
            throw DomainError("GammaMixture requires rho > 0, beta > 0, m >= 0");
        }
      } else if constexpr (std::is_same_v<T, CompactDensity>) {
        for (const auto& p : leaf.pieces) {
          if (!(p.lo < p.hi)) throw DomainError("CompactDensity piece needs lo < hi");
          if (p.coeffs.empty()) throw DomainError("CompactDensity piece has no coefficients");
          for (int i = 0; i <= 32; ++i) {
            const double y = p.lo + (p.hi - p.lo) * i / 32.0;
            double d = 0.0, yp = 1.0;
            for (double cj : p.coeffs) { d += cj * yp; yp *= y; }
            if (d < -1e-12) throw DomainError("CompactDensity density is negative");
          }
        }
      } else if constexpr (std::is_same_v<T, Atoms>) {
        for (const auto& a : leaf.atoms) {
          if (a.y == 0.0) throw DomainError("Atoms location must be nonzero");
          if (a.mass <= 0.0) throw DomainError("Atoms mass must be positive");
        }
      } else if constexpr (std::is_same_v<T, PowerTail>) {
        if (leaf.cutoff <= 0.0) throw DomainError("PowerTail cutoff must be positive");
        if (leaf.alpha <= 2.0)
          throw DomainError("PowerTail alpha <= 2 rejected: E|X_1| would be infinite");
        if (leaf.amplitude <= 0.0) throw DomainError("PowerTail amplitude must be positive");
      }
    });
  }

 private:
  Variant v_;

  static double p_mass(const PowerTail& p) {
    return p.amplitude * std::pow(p.cutoff, 1.0 - p.alpha) / (p.alpha - 1.0);
  }

  template <typename F>
  void for_each_leaf(const F& f) const {
    std::visit(
        [&](const auto& leaf) {
          using T = std::decay_t<decltype(leaf)>;
          if constexpr (std::is_same_v<T, SumMeasure>) {
            for (const auto& part : leaf.parts) part.for_each_leaf(f);
          } else {
            f(leaf);
          }
        },
        v_);
  }

  // Accumulate a scalar over per-component contributions.
  template <typename FG, typename FC, typename FA, typename FP>
  double visit_sum(const FG& fg, const FC& fc, const FA& fa, const FP& fp) const {
    double acc = 0.0;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, GammaMixture>) {
        for (const auto& c : leaf.components) acc += fg(c);
      } else if constexpr (std::is_same_v<T, CompactDensity>) {
        for (const auto& p : leaf.pieces) acc += fc(p);
      } else if constexpr (std::is_same_v<T, Atoms>) {
        for (const auto& a : leaf.atoms) acc += fa(a);
      } else if constexpr (std::is_same_v<T, PowerTail>) {
        acc += fp(leaf);
      }
    });
    return acc;
  }

  double last_leaf_max() const {
    double y = 0.0;
    for_each_leaf([&](const auto& leaf) {
      using T = std::decay_t<decltype(leaf)>;
      if constexpr (std::is_same_v<T, Atoms>) {
        if (!leaf.atoms.empty()) y = leaf.atoms.back().y;
      } else if constexpr (std::is_same_v<T, CompactDensity>) {
        if (!leaf.pieces.empty()) y = leaf.pieces.back().hi;
      } else if constexpr (std::is_same_v<T, GammaMixture>) {
        if (!leaf.components.empty()) y = 1.0 / leaf.components.back().beta;
      } else if constexpr (std::is_same_v<T, PowerTail>) {
        y = leaf.cutoff;
      }
    });
    return y;
  }

  static double invert_piece_cdf(const PolyPiece& p, double lo, double u) {
    // bisection on the polynomial CDF restricted to [lo, hi]
    const double total = detail::poly_moment(p.coeffs, lo, p.hi, 0);
    double a = lo, b = p.hi;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (a + b);
      const double c = detail::poly_moment(p.coeffs, lo, mid, 0) / total;
      (c < u ? a : b) = mid;
    }
    return 0.5 * (a + b);
  }

  // y = l + g with (l+g)^m expanded binomially: mixture of Gamma(j+1, beta).
  static double sample_gamma_tail(Rng& rng, const GammaComponent& c, double l) {
    if (l <= 0.0) return rng.gamma_int_shape(c.m, c.beta);
    double weights_total = 0.0;
    double w[32];
    double binom = 1.0;
    for (int j = 0; j <= c.m; ++j) {
      w[j] = binom * std::pow(l, c.m - j) * detail::factorial(j) /
             std::pow(c.beta, j + 1);
      weights_total += w[j];
      binom *= double(c.m - j) / double(j + 1);
    }
    double u = rng.uniform() * weights_total;
    int pick = c.m;
    for (int j = 0; j <= c.m; ++j) {
      if (u < w[j]) {
        pick = j;
        break;
      }
      u -= w[j];
    }
    return l + rng.gamma_int_shape(pick, c.beta);
  }
};

}  // namespace levypass
