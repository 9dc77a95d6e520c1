#include <doctest.h>

#include <cmath>

#include "levypass/process.hpp"
#include "support/rational_oracle.hpp"
#include "support/spec_fixtures.hpp"

using namespace levypass;
using namespace levypass::testing;

namespace {

// independent quadrature of the compensated integral in phi
double phi_integral_oracle(const JumpMeasure& m, double q) {
  double acc = 0.0;
  acc += m.integrate_pos([&](double y) {
    return std::exp(-q * y) - 1.0 + (std::abs(y) < 1.0 ? q * y : 0.0);
  });
  acc += m.integrate_neg([&](double y) {
    return std::exp(-q * y) - 1.0 + (std::abs(y) < 1.0 ? q * y : 0.0);
  });
  return acc;
}

}  // namespace

TEST_CASE("phi closed forms against the worked examples") {
  const ProcessSpec bm = brownian(1.0);
  CHECK(eval_phi(bm, cplx(2.0, 0.0)).real() == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(std::abs(eval_phi(bm, cplx(0.0, 0.0))) == 0.0);

  const ProcessSpec gm{0.0, JumpMeasure(GammaMixture{{{1.0, 1.0, 0}}}), "gm"};
  // q^2/2 + nuhat(q) - nu((0,inf)) + q int_0^1 y e^{-y} dy at q = 1
  const double expected =
      0.5 + 0.5 - 1.0 + (1.0 - 2.0 / std::exp(1.0));
  CHECK(eval_phi(gm, cplx(1.0, 0.0)).real() ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("phi(0) = 0 and real convexity for random specs") {
  Rng rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    const ProcessSpec spec = random_gamma_spec(rng);
    CHECK(std::abs(eval_phi(spec, cplx(0.0, 0.0))) < 1e-14);
    const double r = spec.measure.r_nu();
    const double lo = -0.95 * std::min(r, 3.0);
    for (int i = 0; i + 2 < 40; ++i) {
      const double h = (4.0 - lo) / 40.0;
      const double q = lo + i * h;
      const double second = eval_phi(spec, cplx(q, 0.0)).real() -
                            2.0 * eval_phi(spec, cplx(q + h, 0.0)).real() +
                            eval_phi(spec, cplx(q + 2 * h, 0.0)).real();
      CHECK(second >= -1e-9);
    }
  }
}

TEST_CASE("conjugate symmetry at 1000 random points") {
  Rng rng(77);
  const ProcessSpec spec = unit_gamma(1.3);
  for (int i = 0; i < 1000; ++i) {
    const cplx q(-0.9 + 6.0 * rng.uniform(), 40.0 * (rng.uniform() - 0.5));
    const cplx a = eval_phi(spec, std::conj(q));
    const cplx b = std::conj(eval_phi(spec, q));
    CHECK(std::abs(a - b) <= 1e-13 * (1.0 + std::abs(b)));
  }
}

TEST_CASE("quadrature oracle matches the closed-form compensated integral") {
  Rng rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    const ProcessSpec spec = random_gamma_spec(rng);
    for (double q : {-0.2, 0.3, 1.0, 2.7}) {
      if (q <= -spec.measure.r_nu()) continue;
      const double closed = eval_phi(spec, cplx(q, 0.0)).real() -
                            (0.5 * q * q + spec.drift * q);
      const double oracle = phi_integral_oracle(spec.measure, q);
      CHECK(closed == doctest::Approx(oracle).epsilon(1e-8));
    }
  }
}

TEST_CASE("analytic derivatives match central differences") {
  const ProcessSpec bm = brownian(1.0);
  CHECK(eval_phi_derivative(bm, cplx(0.0, 0.0), 1).real() ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(eval_phi_derivative(bm, cplx(0.7, -0.3), 2).real() ==
        doctest::Approx(1.0).epsilon(1e-14));

  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const ProcessSpec spec = random_gamma_spec(rng);
    const cplx q(0.1 + 2.0 * rng.uniform(), 3.0 * (rng.uniform() - 0.5));
    const double h = 1e-5;
    const cplx fd1 =
        (eval_phi(spec, q + h) - eval_phi(spec, q - h)) / (2.0 * h);
    const cplx an1 = eval_phi_derivative(spec, q, 1);
    CHECK(std::abs(fd1 - an1) <= 1e-6 * (1.0 + std::abs(an1)));
    const cplx fd2 = (eval_phi(spec, q + h) - 2.0 * eval_phi(spec, q) +
                      eval_phi(spec, q - h)) /
                     (h * h);
    const cplx an2 = eval_phi_derivative(spec, q, 2);
    CHECK(std::abs(fd2 - an2) <= 1e-5 * (1.0 + std::abs(an2)));
  }
}

TEST_CASE("gamma second derivative identity phi''(0) = 1 + int y^2 nu") {
  const ProcessSpec gm{0.0, JumpMeasure(GammaMixture{{{1.0, 1.0, 0}}}), "gm"};
  CHECK(eval_phi_derivative(gm, cplx(0.0, 0.0), 2).real() ==
        doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("mean_x1 sign and quadrature cross-check") {
  CHECK(mean_x1(brownian(1.0)) == doctest::Approx(-1.0));
  CHECK(mean_x1(brownian(-1.0)) == doctest::Approx(1.0));

  const ProcessSpec gm = unit_gamma(3.0);
  const double big_jump_mean =
      gm.measure.integrate_pos([](double y) { return y >= 1.0 ? y : 0.0; });
  CHECK(mean_x1(gm) == doctest::Approx(big_jump_mean - 3.0).epsilon(1e-9));
  // declared mean equals -phi'(0) by construction and by finite differences
  const double h = 1e-6;
  const double fd = (eval_phi(gm, cplx(h, 0)).real() -
                     eval_phi(gm, cplx(-h, 0)).real()) /
                    (2.0 * h);
  CHECK(mean_x1(gm) == doctest::Approx(-fd).epsilon(1e-8));
}

TEST_CASE("hypothesis validation per family") {
  CHECK(validate_hypotheses(unit_gamma(1.0), 1.0).satisfied);
  CHECK(validate_hypotheses(unit_gamma(1.0), 1.0).kappa_cap == kInf);

  CompactDensity cd;
  cd.pieces.push_back({-2.0, 2.0, {0.25}});
  const ProcessSpec compact{0.5, JumpMeasure(cd), "compact"};
  const auto rep = validate_hypotheses(compact, 3.0);
  CHECK(rep.satisfied);
  CHECK(rep.B_nu == kInf);

  const auto pt = validate_hypotheses(power_tail_spec(), 1.0);
  CHECK_FALSE(pt.satisfied);
  CHECK_FALSE(pt.asymptotics_supported);
}

TEST_CASE("meromorphic info: gamma poles, entire cases") {
  const ProcessSpec gm{
      0.0, JumpMeasure(GammaMixture{{{1.0, 1.5, 2}, {0.4, 0.7, 0}}}), "gm"};
  const auto info = meromorphic_info(gm);
  CHECK(info.B_nu == kInf);
  REQUIRE(info.poles.size() == 2);
  bool found_15 = false, found_07 = false;
  for (const auto& [p, order] : info.poles) {
    if (std::abs(p.real() + 1.5) < 1e-14) {
      found_15 = true;
      CHECK(order == 3);
    }
    if (std::abs(p.real() + 0.7) < 1e-14) {
      found_07 = true;
      CHECK(order == 1);
    }
  }
  CHECK(found_15);
  CHECK(found_07);
  CHECK(meromorphic_info(two_sided_atoms()).poles.empty());
}

TEST_CASE("domain errors: pole hit and missing extension") {
  const ProcessSpec gm = unit_gamma(0.0);
  CHECK_THROWS_AS(eval_phi(gm, cplx(-1.0, 0.0)), PoleHit);
  CHECK_THROWS_AS(eval_phi(power_tail_spec(), cplx(-0.5, 0.0)), DomainError);
  CHECK_THROWS_AS(JumpMeasure(PowerTail{1.0, 1.8, 1.0}), DomainError);
  CHECK_THROWS_AS(JumpMeasure(Atoms{{{0.0, 1.0}}}), DomainError);
}

TEST_CASE("measure moments, tails and truncation") {
  const JumpMeasure pt(PowerTail{1.0, 6.0, 1.0});
  CHECK(pt.mass() == doctest::Approx(0.2));
  CHECK(pt.mean_jump() == doctest::Approx(0.25));
  CHECK(pt.tail_mass(2.0) == doctest::Approx(std::pow(2.0, -5.0) / 5.0));
  CHECK(pt.moment_order_sup() == doctest::Approx(5.0));

  const JumpMeasure gm(GammaMixture{{{1.0, 1.0, 0}}});
  CHECK(gm.moment_order_sup() == 64.0);
  CHECK(gm.tail_mass(1.0) == doctest::Approx(std::exp(-1.0)));

  const JumpMeasure at(Atoms{{{-3.0, 1.0}, {1.0, 1.0}}});
  CHECK(at.moment_order_sup() == 64.0);
  const JumpMeasure trimmed = at.truncate_below(1.0);
  CHECK(trimmed.spectrally_positive());
  CHECK(trimmed.mass() == doctest::Approx(1.0));
  // positive-support measures unchanged, k = inf sentinel is the identity
  CHECK(gm.truncate_below(0.5).mass() == doctest::Approx(gm.mass()));
  CHECK(at.truncate_below(kInf).mass() == doctest::Approx(at.mass()));
}

TEST_CASE("sampling moments agree with analytic moments") {
  Rng seed_rng(42);
  SumMeasure sum;
  sum.parts.emplace_back(GammaMixture{{{0.7, 1.2, 1}}});
  sum.parts.emplace_back(Atoms{{{2.0, 0.3}}});
  const JumpMeasure m(sum);
  Rng rng(1234);
  const int n = 400000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = m.sample(rng);
    s1 += y;
    s2 += y * y;
  }
  const double mass = m.mass();
  CHECK(s1 / n * mass == doctest::Approx(m.mean_jump()).epsilon(0.01));
  CHECK(s2 / n * mass == doctest::Approx(m.moment2()).epsilon(0.02));

  // conditional tail sampling lands in (l, inf) with the right mean
  double st = 0.0;
  const double l = 1.7;
  for (int i = 0; i < 200000; ++i) {
    const double y = m.sample_tail(rng, l);
    REQUIRE(y > l);
    st += y;
  }
  const double tail_mean =
      m.integrate_pos([&](double y) { return y > l ? y : 0.0; }) / m.tail_mass(l);
  CHECK(st / 200000 == doctest::Approx(tail_mean).epsilon(0.01));
}
