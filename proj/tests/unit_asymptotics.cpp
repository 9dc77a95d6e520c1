#include <doctest.h>

#include <cmath>

#include "levypass/asymptotics.hpp"
#include "levypass/stats.hpp"
#include "levypass/mc_engine.hpp"
#include "support/rational_oracle.hpp"
#include "support/spec_fixtures.hpp"

using namespace levypass;
using namespace levypass::testing;

TEST_CASE("Brownian leading residue: C0 = 1, gamma0 = 2, F = e^{-2x}") {
  const auto rep = expand_F(brownian(1.0), 0.0, 0.0, 0.0, 10.0);
  CHECK(rep.gamma0 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(rep.C0 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(rep.terms.empty());
  CHECK(eval_expansion(rep, 3.0) ==
        doctest::Approx(std::exp(-6.0)).epsilon(1e-12));
}

TEST_CASE("two independent routes to the leading constant agree to 1e-10") {
  for (const ProcessSpec& spec : {unit_gamma(1.0), slow_gap_spec(),
                                  slow_gap_spec_b(), unit_gamma(2.0)}) {
    REQUIRE(mean_x1(spec) < 0.0);
    const auto ctx = make_context(spec, 0.0, 0.0, 0.0);
    const double g0 = find_real_zeros(spec, 0.0).gamma0;
    const cplx via_bracket = residue_simple(ctx, cplx(-g0, 0.0));
    const double via_closed_form =
        -eval_phi_derivative(spec, cplx(0.0, 0.0), 1).real() /
        eval_phi_derivative(spec, cplx(-g0, 0.0), 1).real();
    CHECK(std::abs(via_bracket.real() - via_closed_form) < 1e-10);
    CHECK(std::abs(via_bracket.imag()) < 1e-12);
    CHECK(via_bracket.real() > 0.0);
  }
}

TEST_CASE("subleading residues also reduce to -phi'(0)/phi'(-gamma_i)") {
  const ProcessSpec spec = unit_gamma(1.0);
  const auto zr = find_strip_zeros(spec, 0.0, 5.0);
  REQUIRE(zr.pairs.size() == 1);
  const cplx g1 = zr.pairs[0].gamma;
  const auto ctx = make_context(spec, 0.0, 0.0, 0.0);
  const cplx res = residue_simple(ctx, -g1);
  const cplx closed = -eval_phi_derivative(spec, cplx(0.0, 0.0), 1) /
                      eval_phi_derivative(spec, -g1, 1);
  CHECK(std::abs(res - closed) < 1e-10);
}

TEST_CASE("residue_simple rejects multiple zeros") {
  const ProcessSpec gz = unit_gamma_zero_mean();
  const auto ctx = make_context(gz, 0.0, 0.0, 0.0);
  CHECK_THROWS_AS(residue_simple(ctx, cplx(0.0, 0.0)), MultiplicityMismatch);
}

TEST_CASE("zero-mean leading constants") {
  CHECK(residue_zero_mean(unit_gamma_zero_mean(), 0.0, 0.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(residue_zero_mean(brownian(0.0), 0.0, 0.0) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(residue_zero_mean(brownian(1.0), 0.0, 0.0), WrongRegime);
  // continuity across the small-(rho - mu) series switch
  const double a = residue_zero_mean(unit_gamma_zero_mean(), 0.5, 0.5 - 2e-6);
  const double b = residue_zero_mean(unit_gamma_zero_mean(), 0.5, 0.5 - 2e-5);
  CHECK(a == doctest::Approx(b).epsilon(1e-4));
}

TEST_CASE("Laurent coefficients: synthetic checks on a double pole") {
  // For the Brownian Fhat(z) = 1/(z+2): K_1 at the pole equals 1
  const auto ctx = make_context(brownian(1.0), 0.0, 0.0, 0.0);
  const auto K = higher_residue_coeffs(ctx, cplx(-2.0, 0.0), 1, 1.0);
  CHECK(std::abs(K[0] - cplx(1.0, 0.0)) < 1e-10);
  // consistency with residue_simple at a simple zero
  const ProcessSpec spec = unit_gamma(1.0);
  const auto gctx = make_context(spec, 0.0, 0.0, 0.0);
  const double g0 = find_real_zeros(spec, 0.0).gamma0;
  const auto K1 = higher_residue_coeffs(gctx, cplx(-g0, 0.0), 1, 0.1);
  CHECK(std::abs(K1[0] - residue_simple(gctx, cplx(-g0, 0.0))) < 1e-9);
}

TEST_CASE("Laurent extraction formula on a synthetic double pole") {
  // G(z) = 1/(z - a)^2: the circle rule must return K_2 = 1, K_1 = 0
  const cplx a(0.4, -0.2);
  const double r = 0.05;
  const int M = 128;
  cplx K1 = 0.0, K2 = 0.0;
  for (int j = 0; j < M; ++j) {
    const double ang = 2.0 * kPi * j / M;
    const cplx zeta = a + r * cplx(std::cos(ang), std::sin(ang));
    const cplx g = 1.0 / ((zeta - a) * (zeta - a));
    K1 += g * cplx(std::cos(ang), std::sin(ang));
    K2 += g * cplx(std::cos(2 * ang), std::sin(2 * ang));
  }
  K1 *= r / double(M);
  K2 *= r * r / double(M);
  CHECK(std::abs(K1) < 1e-12);
  CHECK(std::abs(K2 - 1.0) < 1e-12);
  // and the induced polynomial structure: C(x) = K2 x / 1! + K1 -> x e^{ax}
  ExpansionReport synth;
  synth.gamma0 = 0.0;
  synth.C0 = 1.0;
  ExpansionTerm t;
  t.gamma = cplx(1.0, 0.0);
  t.a = 0.5;
  t.multiplicity = 2;
  t.poly = {K1, K2};
  synth.terms.push_back(t);
  const double x = 2.0;
  CHECK(eval_expansion(synth, x) ==
        doctest::Approx(1.0 + x * std::exp(-x)).epsilon(1e-12));
}

TEST_CASE("zero-mean double zero: simple pole with residue 1 via Laurent") {
  const ProcessSpec gz = unit_gamma_zero_mean();
  const auto ctx = make_context(gz, 0.0, 0.0, 0.0);
  // Fhat has a simple pole at 0 although phi has a double zero there
  const auto K = higher_residue_coeffs(ctx, cplx(0.0, 0.0), 2, 0.2);
  CHECK(std::abs(K[0].real() - 1.0) < 1e-8);  // matches residue_zero_mean
  CHECK(std::abs(K[1]) < 1e-9);               // no second-order part
}

TEST_CASE("expansion evaluation is real for random x") {
  const ProcessSpec gm2{
      1.2, JumpMeasure(GammaMixture{{{0.8, 1.0, 1}, {0.5, 2.5, 0}}}), "gm2"};
  // E > 0 here: gamma0 = 0, C0 = 1 (certain ruin)
  const auto rep = expand_F(gm2, 0.0, 0.0, 0.0, 4.0);
  CHECK(rep.gamma0 == doctest::Approx(0.0));
  CHECK(rep.C0 == doctest::Approx(1.0).epsilon(1e-9));
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const double x = 30.0 * rng.uniform();
    const double v = eval_expansion(rep, x);
    CHECK(std::isfinite(v));
  }
}

TEST_CASE("expansion against the Bromwich oracle, residual scales as gamma1") {
  const ProcessSpec spec = slow_gap_spec();
  const auto rep = expand_F(spec, 0.0, 0.0, 0.0, 2.0);
  REQUIRE(rep.terms.size() == 1);
  const double g0 = rep.gamma0;
  const double g1 = rep.terms[0].gamma.real();
  const auto ctx = make_context(spec, 0.0, 0.0, 0.0);
  BromwichOptions opts;
  opts.abs_tol = 1e-12;
  std::vector<double> lx, lr;
  for (double x : {5.0, 8.0, 11.0, 14.0}) {
    const double brom = invert_bromwich(ctx, x, opts);
    const double lead = rep.C0 * std::exp(-g0 * x);
    const double resid = std::abs(brom - lead) * std::exp(g0 * x);
    lx.push_back(x);
    lr.push_back(std::log(resid));
    // the full expansion tracks the inversion to the remainder order
    CHECK(std::abs(brom - eval_expansion(rep, x)) < 1e-8);
  }
  const auto fit = ols_fit(lx, lr);
  CHECK(fit.slope == doctest::Approx(-(g1 - g0)).epsilon(0.05));
}

TEST_CASE("uniformity probe over a theta grid") {
  const ProcessSpec spec = unit_gamma(1.0);
  BromwichOptions opts;
  opts.abs_tol = 1e-11;
  double rem0 = 0.0, worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double theta = 0.05 * i;
    const auto rep = expand_F(spec, theta, 0.0, 0.0, 5.0);
    const auto ctx = make_context(spec, theta, 0.0, 0.0);
    const double x = 20.0;
    const double rem = std::abs(invert_bromwich(ctx, x, opts) -
                                eval_expansion(rep, x));
    if (i == 0) rem0 = rem;
    worst = std::max(worst, rem);
  }
  CHECK(std::isfinite(worst));
  CHECK(worst <= 10.0 * std::max(rem0, 1e-12));
}

TEST_CASE("two-sided expansion carries the grid-residual error half-width") {
  const ProcessSpec spec = two_sided_atoms(0.8);
  REQUIRE(mean_x1(spec) < 0.0);
  const FGrid grid = solve_F_grid(spec, 0.0, 0.0, 0.0, 2.0, 0.5 / 80.0);
  const auto rep = expand_F(spec, 0.0, 0.0, 0.0, 2.2, grid);
  CHECK(rep.C0 > 0.0);
  CHECK(rep.C0_error >= 0.0);
  CHECK(rep.C0_error < 0.05);  // residual-scaled, far below C0 itself
  // the expansion leading term tracks a direct Monte Carlo estimate
  SimConfig cfg;
  cfg.n_paths = 200000;
  cfg.seed = 33;
  const double x = 9.0;
  const auto est = estimate_F(spec, 0.0, 0.0, 0.0, x, cfg);
  CHECK(std::abs(rep.C0 * std::exp(-rep.gamma0 * x) - est.value) <=
        3.0 * est.std_error + rep.C0_error + 5e-3);
}

TEST_CASE("positivity of C0 across test specs") {
  for (const ProcessSpec& spec :
       {brownian(1.0), unit_gamma(1.0), slow_gap_spec(), slow_gap_spec_b()}) {
    const auto rep = expand_F(spec, 0.0, 0.0, 0.0, 2.0 * (1.0 +
                               find_real_zeros(spec, 0.0).gamma0));
    CHECK(rep.C0 > 0.0);
  }
}
