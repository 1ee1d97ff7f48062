#include "hyperhopf/bifcoef.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "sec6.hpp"
#include "testutil.hpp"

using namespace hyperhopf;

namespace {

EigenPair sec6_pair(const SystemSpec& spec, int N) {
  SpectralSolver solver(spec, sec6::kA0);
  const Complex mu(0.0, sec6::kOmega0);
  auto [v, w, raw] = normalize_pair(
      solver.eigenfunction(mu, N),
      solver.adjoint_eigenfunction(std::conj(mu), N), spec.anchor);
  EigenPair pair;
  pair.mu = mu;
  pair.v = std::move(v);
  pair.w = std::move(w);
  pair.pairing = raw;
  return pair;
}

// plug the solution back into the harmonic BVP with an independent
// finite-difference derivative
double bvp_residual(const SystemSpec& spec, const EigenPair& pair,
                    const GridFn& g, Complex shift, double factor,
                    bool conj_second) {
  SpectralSolver solver(spec, sec6::kA0);
  DerivTable table(spec);
  const GridFn dg = testutil::fd_derivative(g);
  double worst = 0;
  for (int i = 0; i <= g.N; ++i) {
    const double x = g.x(i);
    const DerivTensors t = table.at(x, sec6::kA0);
    for (int j = 0; j < g.n; ++j) {
      Complex r = solver.speed(j, x) * dg.at(i, j) - shift * g.at(i, j);
      for (int k = 0; k < g.n; ++k)
        r += t.bjk[j * g.n + k] * g.at(i, k);
      Complex force = 0;
      for (int k = 0; k < g.n; ++k)
        for (int l = 0; l < g.n; ++l) {
          const Complex second =
              conj_second ? std::conj(pair.v.at(i, l)) : pair.v.at(i, l);
          force += t.b2(j, k, l) * pair.v.at(i, k) * second;
        }
      r -= factor * force;
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

double boundary_residual(const SystemSpec& spec, const GridFn& g) {
  double worst = 0;
  for (int j = 0; j < spec.m; ++j) {
    Complex r = g.at(0, j);
    for (int k = spec.m; k < spec.n; ++k)
      r -= spec.reflection[j][k] * g.at(0, k);
    worst = std::max(worst, std::abs(r));
  }
  for (int j = spec.m; j < spec.n; ++j) {
    Complex r = g.at(g.N, j);
    for (int k = 0; k < spec.m; ++k)
      r -= spec.reflection[j][k] * g.at(g.N, k);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace

TEST_CASE("builtin example: zero quadratic tensors give y = z = 0 exactly") {
  const SystemSpec spec = builtin_example(-1.0);
  const EigenPair pair = sec6_pair(spec, 256);
  const GridFn y = solve_y_bvp(spec, pair, sec6::kA0, sec6::kOmega0, 256);
  const GridFn z = solve_z_bvp(spec, pair, sec6::kA0, 256);
  CHECK(y.max_abs() == 0.0);
  CHECK(z.max_abs() == 0.0);
}

TEST_CASE("quadratically coupled system: residuals, boundary, linearity") {
  const SystemSpec spec = testutil::quadratic_example(-1.0, 0.45, -0.3);
  REQUIRE(validate(spec).ok);
  const EigenPair pair = sec6_pair(spec, 512);

  const GridFn y = solve_y_bvp(spec, pair, sec6::kA0, sec6::kOmega0, 512);
  const GridFn z = solve_z_bvp(spec, pair, sec6::kA0, 512);
  CHECK(bvp_residual(spec, pair, y, Complex(0, 2 * sec6::kOmega0), -0.25,
                     false) < 1e-8);
  CHECK(bvp_residual(spec, pair, z, Complex(0, 0), -0.5, true) < 1e-8);
  CHECK(boundary_residual(spec, y) < 1e-10);
  CHECK(boundary_residual(spec, z) < 1e-10);

  // z is real
  double im = 0;
  for (const Complex& c : z.data) im = std::max(im, std::abs(c.imag()));
  CHECK(im < 1e-10);

  // linearity in the forcing: tensors add, solutions add
  const SystemSpec a = testutil::quadratic_example(-1.0, 0.45, 0.0);
  const SystemSpec b = testutil::quadratic_example(-1.0, 0.0, -0.3);
  const GridFn ya = solve_y_bvp(a, pair, sec6::kA0, sec6::kOmega0, 512);
  const GridFn yb = solve_y_bvp(b, pair, sec6::kA0, sec6::kOmega0, 512);
  double worst = 0;
  for (size_t i = 0; i < y.data.size(); ++i)
    worst = std::max(worst,
                     std::abs(y.data[i] - (ya.data[i] + yb.data[i])));
  CHECK(worst < 1e-9 * std::max(1.0, y.max_abs()));
}

TEST_CASE("resonant harmonic shift is reported") {
  // spectrum at i*pi*k (see the nonresonance test); shift 2i*(pi/2) hits it
  SystemSpec spec;
  spec.n = 2;
  spec.m = 1;
  const auto sv = spec.speed_variables();
  const auto rv = spec.rhs_variables();
  spec.speeds = {expr::parse("-1", sv), expr::parse("1", sv)};
  spec.rhs = {expr::parse("0*u1", rv), expr::parse("0*u2", rv)};
  spec.reflection = {{0.0, 1.0}, {1.0, 0.0}};
  auto zero_forcing = [](double, Complex* out) {
    out[0] = 0.1;  // nonzero forcing so the solve is actually attempted
    out[1] = -0.2;
  };
  CHECK_THROWS_AS(solve_harmonic_bvp(spec, 0.0, Complex(0, M_PI),
                                     zero_forcing, 64),
                  ResonanceError);
}

TEST_CASE("beta for the builtin example against the frozen oracle value") {
  for (double gamma : {-1.0, 1.0}) {
    const SystemSpec spec = builtin_example(gamma);
    const EigenPair pair = sec6_pair(spec, 512);
    BifAux aux;
    aux.y = solve_y_bvp(spec, pair, sec6::kA0, sec6::kOmega0, 512);
    aux.z = solve_z_bvp(spec, pair, sec6::kA0, 512);
    const double beta = beta_coefficient(spec, pair, aux, sec6::kA0);
    const double want = -gamma * sec6::kBetaGammaMinus1;
    CHECK(std::abs(beta - want) < 1e-7 * std::abs(want));
  }
}

TEST_CASE("scale covariance: alpha invariant, beta scales by |s|^2") {
  const SystemSpec spec = builtin_example(-1.0);
  const EigenPair pair = sec6_pair(spec, 256);
  BifAux aux;
  aux.y = solve_y_bvp(spec, pair, sec6::kA0, sec6::kOmega0, 256);
  aux.z = solve_z_bvp(spec, pair, sec6::kA0, 256);
  const double beta = beta_coefficient(spec, pair, aux, sec6::kA0);
  const double alpha = transversality_alpha(spec, pair, sec6::kA0);

  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> us(-1.0, 1.0);
  for (int k = 0; k < 6; ++k) {
    const Complex s(us(rng) + 1.4, us(rng));
    EigenPair scaled = pair;
    for (auto& c : scaled.v.data) c *= s;
    for (auto& c : scaled.w.data) c /= std::conj(s);
    BifAux saux;
    saux.y = solve_y_bvp(spec, scaled, sec6::kA0, sec6::kOmega0, 256);
    saux.z = solve_z_bvp(spec, scaled, sec6::kA0, 256);
    const double beta_s = beta_coefficient(spec, scaled, saux, sec6::kA0);
    const double alpha_s = transversality_alpha(spec, scaled, sec6::kA0);
    CHECK(std::abs(alpha_s - alpha) < 1e-10);
    CHECK(std::abs(beta_s - std::norm(s) * beta) <
          1e-8 * std::abs(std::norm(s) * beta));
  }
}

TEST_CASE("bifurcation result: direction, side, amplitude law") {
  HopfOptions opts;
  opts.lambda_lo = 1.0;
  opts.lambda_hi = 2.0;
  opts.region = Rect{-3.0, 1.0, -12.0, 12.0};
  opts.grid_n = 256;

  SUBCASE("supercritical for gamma < 0, orbits on the right") {
    const HopfReport report = full_report(builtin_example(-1.0), opts);
    const BifurcationResult res =
        bifurcation_result(builtin_example(-1.0), report);
    CHECK(res.direction == Direction::Supercritical);
    CHECK(res.bifurcating_side == 1);
    CHECK(res.curvature == doctest::Approx(res.beta / res.alpha));
    CHECK(res.orbit_scale == doctest::Approx(1.0).epsilon(1e-6));
    const double eps = res.eps_of_offset(0.02);
    CHECK(eps == doctest::Approx(std::sqrt(2 * res.alpha * 0.02 / res.beta))
                     .epsilon(1e-12));
  }
  SUBCASE("subcritical for gamma > 0, orbits on the left") {
    const HopfReport report = full_report(builtin_example(1.0), opts);
    const BifurcationResult res =
        bifurcation_result(builtin_example(1.0), report);
    CHECK(res.direction == Direction::Subcritical);
    CHECK(res.bifurcating_side == -1);
  }
  SUBCASE("degenerate for gamma = 0") {
    const HopfReport report = full_report(builtin_example(0.0), opts);
    const BifurcationResult res =
        bifurcation_result(builtin_example(0.0), report);
    CHECK(res.direction == Direction::Degenerate);
    CHECK(res.bifurcating_side == 0);
    CHECK_THROWS_AS(res.eps_of_offset(0.02), NumericsError);
  }
}
