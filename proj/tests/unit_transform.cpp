#include <doctest.h>

#include <cmath>

#include "levypass/mc_engine.hpp"
#include "levypass/transform_core.hpp"
#include "support/rational_oracle.hpp"
#include "support/spec_fixtures.hpp"

using namespace levypass;
using namespace levypass::testing;

TEST_CASE("functional equation: Brownian transform is 1/(q+2)") {
  const auto ctx = make_context(brownian(1.0), 0.0, 0.0, 0.0);
  CHECK(eval_Fhat(ctx, cplx(1.0, 0.0)).real() ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  for (double q : {0.5, 2.0, 7.0})
    CHECK(eval_Fhat(ctx, cplx(q, 0.0)).real() ==
          doctest::Approx(1.0 / (q + 2.0)).epsilon(1e-12));
  // real q > 0 gives a real transform
  CHECK(std::abs(eval_Fhat(ctx, cplx(2.0, 0.0)).imag()) < 1e-14);
}

TEST_CASE("tilde transform differs from Fhat by the (e^q-1-q)/q^2 cap") {
  const auto ctx = make_context(unit_gamma(1.0), 0.2, 0.4, 0.1);
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const cplx q(0.05 + 3.0 * rng.uniform(), 60.0 * (rng.uniform() - 0.5));
    const cplx lhs = eval_Fhat_tilde(ctx, q) - eval_Fhat(ctx, q);
    const cplx rhs = (std::exp(q) - 1.0 - q) / (q * q);
    CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("false singularity at gamma0_star is removable") {
  const auto ctx = make_context(unit_gamma(1.0), 0.3, 0.0, 0.0);
  REQUIRE(ctx.gamma0_star > 0.0);
  const cplx near = eval_Fhat(ctx, cplx(ctx.gamma0_star + 1e-6, 0.0));
  CHECK(std::isfinite(near.real()));
  CHECK(std::abs(near) < 1e3);
  CHECK_THROWS_AS(eval_Fhat(ctx, cplx(ctx.gamma0_star, 0.0)), ZeroDivision);
}

TEST_CASE("Bromwich inversion reproduces the Brownian ruin law") {
  const auto ctx = make_context(brownian(1.0), 0.0, 0.0, 0.0);
  for (double x : {0.0, 0.5, 1.0, 2.0, 5.0}) {
    const double F = invert_bromwich(ctx, x);
    CHECK(F == doctest::Approx(std::exp(-2.0 * x)).epsilon(1e-6));
  }
  // x = 0 within the 1e-4 contract
  CHECK(std::abs(invert_bromwich(ctx, 0.0) - 1.0) < 1e-4);
}

TEST_CASE("tilde extension evaluates to 1 + x inside (-1, 0)") {
  const auto ctx = make_context(unit_gamma(1.0), 0.0, 0.0, 0.0);
  BromwichOptions opts;
  opts.clamp = false;
  for (double x : {-0.75, -0.5, -0.25}) {
    CHECK(invert_bromwich(ctx, x, opts) ==
          doctest::Approx(1.0 + x).epsilon(1e-3));
  }
}

TEST_CASE("imaginary part of the inversion integrand cancels by conjugation") {
  const auto ctx = make_context(unit_gamma(1.0), 0.1, 0.2, 0.0);
  const double q1 = 0.5 * ctx.beta;
  for (double t : {0.3, 2.0, 11.0, 40.0}) {
    const cplx up = eval_Fhat_tilde(ctx, cplx(q1, t));
    const cplx dn = eval_Fhat_tilde(ctx, cplx(q1, -t));
    CHECK(std::abs(up - std::conj(dn)) < 1e-8 * (1.0 + std::abs(up)));
  }
}

TEST_CASE("R operator: spectrally positive measures give exactly zero") {
  FGrid grid;
  grid.h = 1.0 / 128.0;
  grid.values.assign(129, 0.7);
  CHECK(apply_R(unit_gamma(1.0), grid, cplx(1.0, 2.0)) == cplx(0.0, 0.0));
  CHECK(apply_R(power_tail_spec(), grid, cplx(0.5, 0.0)) == cplx(0.0, 0.0));
}

TEST_CASE("R operator closed form for a single negative atom") {
  const ProcessSpec at{0.4, JumpMeasure(Atoms{{{-1.0, 1.0}}}), "neg atom"};
  FGrid grid;
  grid.h = 1.0 / 256.0;
  grid.values.assign(257, 1.0);  // h = 1 on [0, 1]
  for (double q : {0.3, 1.0, 2.5}) {
    const double exact = (std::exp(q) - 1.0) / q - 1.0;
    CHECK(apply_R(at, grid, cplx(q, 0.0)).real() ==
          doctest::Approx(exact).epsilon(2e-5));
  }
  CHECK(apply_R(at, grid, cplx(0.0, 0.0)) == cplx(0.0, 0.0));
  // coarse grids are rejected
  FGrid coarse;
  coarse.h = 0.25;
  coarse.values.assign(5, 1.0);
  CHECK_THROWS_AS(apply_R(at, coarse, cplx(1.0, 0.0)), GridTooCoarse);
}

TEST_CASE("two-sided context requires an F grid") {
  CHECK_THROWS_AS(make_context(two_sided_atoms(), 0.0, 0.0, 0.0), NeedsFGrid);
}

TEST_CASE("transform consistency: integrating the inversion recovers Fhat") {
  const ProcessSpec spec = unit_gamma(1.0);
  const auto ctx = make_context(spec, 0.0, 0.0, 0.0);
  const auto rz = find_real_zeros(spec, 0.0);
  // leading residue for the analytic tail beyond x_max
  const double c0 = (eval_Fhat_bracket(ctx, cplx(-rz.gamma0, 0.0)) /
                     eval_phi_derivative(spec, cplx(-rz.gamma0, 0.0), 1))
                        .real();
  const double x_max = 40.0;
  const double h = 0.1;
  std::vector<double> nodes;
  for (double x = 0.0; x <= x_max + 1e-9; x += h) nodes.push_back(x);
  BromwichOptions bo;
  bo.abs_tol = 1e-6;
  const std::vector<double> fx = invert_bromwich_batch(ctx, nodes, bo);
  for (double q : {0.5, 1.0, 2.0}) {
    double integral = 0.0;  // composite Simpson over the tabulated values
    for (std::size_t i = 0; i + 2 < fx.size(); i += 2) {
      const double x0 = i * h;
      integral += h / 3.0 *
                  (std::exp(-q * x0) * fx[i] +
                   4.0 * std::exp(-q * (x0 + h)) * fx[i + 1] +
                   std::exp(-q * (x0 + 2 * h)) * fx[i + 2]);
    }
    integral += c0 * std::exp(-(q + rz.gamma0) * x_max) / (q + rz.gamma0);
    const double direct = eval_Fhat(ctx, cplx(q, 0.0)).real();
    CHECK(integral == doctest::Approx(direct).epsilon(1e-3));
  }
}

TEST_CASE("F grid: spectrally positive solves in a single pass") {
  const ProcessSpec spec = unit_gamma(1.0);
  const FGrid grid = solve_F_grid(spec, 0.0, 0.0, 0.0, 3.0, 0.05);
  const auto ctx = make_context(spec, 0.0, 0.0, 0.0);
  CHECK(grid.at(1.0) == doctest::Approx(invert_bromwich(ctx, 1.0)).epsilon(1e-6));
  // probability monotonicity at theta = mu = rho = 0
  for (std::size_t j = 0; j + 1 < grid.values.size(); ++j) {
    CHECK(grid.values[j] >= grid.values[j + 1] - 1e-6);
    CHECK(grid.values[j] >= 0.0);
    CHECK(grid.values[j] <= 1.0);
  }
}

TEST_CASE("full (theta, mu, rho) inversion agrees with simulation") {
  const ProcessSpec spec = unit_gamma(1.0);
  const auto ctx = make_context(spec, 0.1, 0.2, 0.3);
  SimConfig cfg;
  cfg.n_paths = 300000;
  cfg.seed = 29;
  for (double x : {1.0, 2.5}) {
    const auto est = estimate_F(spec, 0.1, 0.2, 0.3, x, cfg);
    const double fb = invert_bromwich(ctx, x);
    CHECK(std::abs(est.value - fb) <= 3.0 * est.std_error + 1e-6);
  }
}

TEST_CASE("F grid fixed point matches Monte Carlo for a two-sided spec") {
  const ProcessSpec spec = two_sided_atoms(0.3);
  REQUIRE(spec.measure.neg_support_bound() == doctest::Approx(0.5));
  const FGrid grid = solve_F_grid(spec, 0.0, 0.0, 0.0, 3.0, 0.5 / 80.0);
  SimConfig cfg;
  cfg.n_paths = 300000;
  cfg.seed = 21;
  for (double x : {0.5, 1.5, 3.0}) {
    const auto est = estimate_F(spec, 0.0, 0.0, 0.0, x, cfg);
    CHECK(std::abs(grid.at(x) - est.value) <=
          3.0 * est.std_error + 2e-4);
  }
}
