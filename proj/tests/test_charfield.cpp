#include "hyperhopf/charfield.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "sec6.hpp"

using namespace hyperhopf;

TEST_CASE("characteristic times of the builtin example") {
  const SystemSpec spec = builtin_example(-1.0);
  CharContext ctx(spec, 0.0);
  // a2 = +1: time to go from x=1 to xi=0 is -1
  CHECK(ctx.char_time(1, 0.0, 1.0, 0.0, 1.0) ==
        doctest::Approx(-1.0).epsilon(1e-12));
  // a1 = -1: same route takes +1
  CHECK(ctx.char_time(0, 0.0, 1.0, 0.0, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // xi = x: empty integral
  CHECK(ctx.char_time(0, 0.4, 0.4, 3.25, 2.0) == 3.25);
  // inverse round trip
  CHECK(ctx.char_time_inverse(1, 0.0, 1.0, -1.0, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-12));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> us(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double xi = us(rng), x = us(rng), tau = 4 * us(rng) - 2;
    const double t = ctx.char_time_inverse(1, xi, x, tau, 1.7);
    CHECK(ctx.char_time(1, xi, x, t, 1.7) ==
          doctest::Approx(tau).epsilon(1e-12));
  }
}

TEST_CASE("characteristic group property and monotonicity") {
  SystemSpec spec;
  spec.n = 2;
  spec.m = 1;
  const auto sv = spec.speed_variables();
  const auto rv = spec.rhs_variables();
  spec.speeds = {expr::parse("-1 - 0.3*x", sv),
                 expr::parse("2 + sin(x)", sv)};
  spec.rhs = {expr::parse("lambda*u1 - u2", rv), expr::parse("0.2*u1", rv)};
  spec.reflection = {{0.0, 0.4}, {0.7, 0.0}};
  CharContext ctx(spec, 0.3);

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> us(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double xi = us(rng), x = us(rng), eta = us(rng), t = us(rng);
    for (int j = 0; j < 2; ++j) {
      const double via = ctx.char_time(j, eta, xi,
                                       ctx.char_time(j, xi, x, t, 1.0), 1.0);
      const double direct = ctx.char_time(j, eta, x, t, 1.0);
      CHECK(via == doctest::Approx(direct).epsilon(1e-10));
    }
  }
  // strict monotonicity in xi, slope sign = sign(1/a_j) for omega > 0
  for (int j = 0; j < 2; ++j) {
    double prev = ctx.char_time(j, 0.0, 0.5, 0.0, 1.0);
    const double sign = ctx.speed(j, 0.5) > 0 ? 1.0 : -1.0;
    for (int i = 1; i <= 64; ++i) {
      const double cur = ctx.char_time(j, i / 64.0, 0.5, 0.0, 1.0);
      CHECK(sign * (cur - prev) > 0);
      prev = cur;
    }
  }
}

TEST_CASE("decay factors") {
  const double lam = 0.8;
  const SystemSpec spec = builtin_example(0.5);
  CharContext ctx(spec, lam);
  // c_j(x, x) = 1
  CHECK(ctx.decay_factor(0, 0.37, 0.37) == 1.0);
  // component 1: d_{u1} b_1 = lambda, a_1 = -1 => c_1(xi,x) = exp(lam (x-xi))
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> us(0.0, 1.0);
  for (int k = 0; k < 40; ++k) {
    const double xi = us(rng), x = us(rng);
    CHECK(ctx.decay_factor(0, xi, x) ==
          doctest::Approx(std::exp(lam * (x - xi))).epsilon(1e-10));
    // component 2 has b_22 = 0: no decay at all
    CHECK(ctx.decay_factor(1, xi, x) == 1.0);
  }
  // cocycle property on a generic context
  SystemSpec gen;
  gen.n = 2;
  gen.m = 1;
  const auto sv = gen.speed_variables();
  const auto rv = gen.rhs_variables();
  gen.speeds = {expr::parse("-1 - x", sv), expr::parse("1 + 0.5*x", sv)};
  gen.rhs = {expr::parse("(1 + 0.2*x)*u1 - u2", rv),
             expr::parse("0.3*u2 + u1*u2", rv)};
  gen.reflection = {{0.0, 0.1}, {0.2, 0.0}};
  CharContext gctx(gen, 0.0);
  for (int k = 0; k < 100; ++k) {
    const double xi = us(rng), x = us(rng), eta = us(rng);
    for (int j = 0; j < 2; ++j) {
      const double split = gctx.decay_factor(j, xi, x) *
                           gctx.decay_factor(j, eta, xi);
      CHECK(split ==
            doctest::Approx(gctx.decay_factor(j, eta, x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("interpolated antiderivatives match direct quadrature") {
  SystemSpec spec;
  spec.n = 1;
  spec.m = 1;
  const auto sv = spec.speed_variables();
  const auto rv = spec.rhs_variables();
  spec.speeds = {expr::parse("1 + 0.5*sin(3*x)", sv)};
  spec.rhs = {expr::parse("(2 + cos(2*x))*u1", rv)};
  spec.reflection = {{0.0}};
  CharContext ctx(spec, 0.0);
  expr::Bindings env;
  for (int k = 0; k <= 32; ++k) {
    const double x = (k + 0.4) / 33.0;  // off the cache nodes
    const double direct = adaptive_quadrature(
        [&](double s) {
          return 1.0 / spec.speeds[0].evaluate({{"x", s}, {"lambda", 0.0}});
        },
        0.0, x, 1e-13);
    CHECK(ctx.inv_speed_antiderivative(0, x) ==
          doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("remainder drops the diagonal linear part") {
  const double gamma = -2.0;
  const SystemSpec spec = builtin_example(gamma);
  CharContext ctx(spec, 0.7);
  // f_1 = u2 - gamma u1^3, f_2 = 0
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> us(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const std::vector<double> u = {us(rng), us(rng)};
    const auto f = ctx.remainder(0.3, u);
    CHECK(f[0] ==
          doctest::Approx(u[1] - gamma * u[0] * u[0] * u[0]).epsilon(1e-13));
    CHECK(f[1] == 0.0);
  }
  // f(x, lambda, 0) = 0 and the diagonal of d_u f vanishes, by finite
  // differences on a generic system
  SystemSpec gen;
  gen.n = 2;
  gen.m = 1;
  const auto sv = gen.speed_variables();
  const auto rv = gen.rhs_variables();
  gen.speeds = {expr::parse("-2 + 0.1*x", sv), expr::parse("1", sv)};
  gen.rhs = {expr::parse("(lambda + x)*u1 - 3*u2 + u1^2", rv),
             expr::parse("u1 + 0.5*u2 + u1*u2^2", rv)};
  gen.reflection = {{0.0, 0.3}, {0.4, 0.0}};
  CharContext gctx(gen, 0.4);
  for (double x : {0.1, 0.6, 0.9}) {
    const auto f0 = gctx.remainder(x, {0.0, 0.0});
    CHECK(std::abs(f0[0]) < 1e-14);
    CHECK(std::abs(f0[1]) < 1e-14);
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j) {
      std::vector<double> up = {0.0, 0.0}, um = {0.0, 0.0};
      up[j] += h;
      um[j] -= h;
      const double diag =
          (gctx.remainder(x, up)[j] - gctx.remainder(x, um)[j]) / (2 * h);
      CHECK(std::abs(diag) < 1e-8);
    }
  }
}

TEST_CASE("dissipativity gains") {
  const SystemSpec spec = builtin_example(-1.0);
  CharContext ctx(spec, sec6::kA0);
  const auto d = ctx.dissipativity();
  CHECK(d.R0 == 0.0);                        // r_12 = 0: empty sum
  CHECK(d.R1 == doctest::Approx(1.0).epsilon(1e-14));  // b_22 = 0, r_21 = 1
  CHECK(d.product_ok);

  SystemSpec mute = spec;
  mute.reflection = {{0.0, 0.0}, {0.0, 0.0}};
  CharContext mctx(mute, 0.0);
  const auto dm = mctx.dissipativity();
  CHECK(dm.R0 == 0.0);
  CHECK(dm.R1 == 0.0);
  CHECK(dm.product_ok);
}
