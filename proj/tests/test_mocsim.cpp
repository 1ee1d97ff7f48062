#include "hyperhopf/mocsim.hpp"

#include <cmath>

#include "doctest.h"
#include "sec6.hpp"
#include "testutil.hpp"

using namespace hyperhopf;

namespace {

SimConfig sec6_config(double gamma, double lambda) {
  SimConfig cfg;
  cfg.spec = builtin_example(gamma);
  cfg.lambda = lambda;
  cfg.dx = 1.0 / 100;
  cfg.t_end = 1.0;
  cfg.probes = {0.0, 0.5};
  cfg.initial = std::vector<expr::ExprAst>{
      expr::parse("x*(1-x)", cfg.spec.speed_variables()),
      expr::parse("0.5*x", cfg.spec.speed_variables())};
  return cfg;
}

}  // namespace

TEST_CASE("configuration guards") {
  SUBCASE("dx must divide 1") {
    SimConfig cfg = sec6_config(0.0, 1.0);
    cfg.dx = 0.003;  // 1/0.003 is not an integer
    CHECK_THROWS_AS(Simulator{std::move(cfg)}, ConfigError);
  }
  SUBCASE("CFL violation is rejected before the run") {
    SimConfig cfg = sec6_config(0.0, 1.0);
    cfg.dt = 2.0 * cfg.cfl * cfg.dx;  // max|a| = 1
    CHECK_THROWS_AS(Simulator{std::move(cfg)}, ConfigError);
  }
  SUBCASE("speed blocks must have opposite signs") {
    SimConfig cfg = sec6_config(0.0, 1.0);
    cfg.spec.speeds[0] = expr::parse("0.5", cfg.spec.speed_variables());
    CHECK_THROWS_AS(Simulator{std::move(cfg)}, ConfigError);
  }
}

TEST_CASE("zero initial data stays exactly zero") {
  SimConfig cfg = sec6_config(-1.0, sec6::kA0 + 0.1);
  cfg.initial = std::vector<expr::ExprAst>{
      expr::parse("0", cfg.spec.speed_variables()),
      expr::parse("0", cfg.spec.speed_variables())};
  cfg.t_end = 2.0;
  Simulator sim(std::move(cfg));
  const TimeSeries ts = sim.run();
  for (const auto& signal : ts.samples)
    for (double v : signal) CHECK(v == 0.0);
}

TEST_CASE("reflection conditions hold exactly at the boundary nodes") {
  SimConfig cfg = sec6_config(-0.5, 1.2);
  Simulator sim(std::move(cfg));
  const int M = sim.cells();
  for (int step = 0; step < 25; ++step) {
    sim.step();
    // u_1(0) = r12 u_2(0) = 0 and u_2(1) = r21 u_1(1) = u_1(1)
    CHECK(sim.value(0, 0) == 0.0);
    CHECK(sim.value(M, 1) == sim.value(M, 0));
  }
}

TEST_CASE("determinism: identical configs give bit-identical series") {
  const TimeSeries a = Simulator(sec6_config(-1.0, 1.4)).run();
  const TimeSeries b = Simulator(sec6_config(-1.0, 1.4)).run();
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(a.sample_count() == static_cast<size_t>(std::floor(1.0 / a.dt)) + 1);
  for (size_t i = 0; i < a.samples.size(); ++i)
    for (size_t k = 0; k < a.samples[i].size(); ++k)
      CHECK(a.samples[i][k] == b.samples[i][k]);
}

TEST_CASE("pure transport advects the profile with cubic accuracy") {
  // n = 1 right-mover with no source and (numerically) vanishing inflow:
  // the solution is the shifted initial profile
  SystemSpec spec;
  spec.n = 1;
  spec.m = 1;
  spec.speeds = {expr::parse("1", spec.speed_variables())};
  spec.rhs = {expr::parse("0", spec.rhs_variables())};
  spec.reflection = {{0.0}};

  auto bump = [](double x) {
    const double s = (x - 0.3) / 0.08;
    return std::exp(-s * s);
  };
  double err_coarse = 0, err_fine = 0;
  for (int pass = 0; pass < 2; ++pass) {
    const int M = pass == 0 ? 100 : 200;
    SimConfig cfg;
    cfg.spec = spec;
    cfg.lambda = 0.0;
    cfg.dx = 1.0 / M;
    cfg.t_end = 0.25;
    cfg.probes = {0.5};
    cfg.initial = std::vector<expr::ExprAst>{
        expr::parse("exp(-((x-0.3)/0.08)^2)", spec.speed_variables())};
    Simulator sim(std::move(cfg));
    const long steps = static_cast<long>(std::floor(0.25 / sim.dt()));
    for (long s = 0; s < steps; ++s) sim.step();
    const double t = sim.time();
    double err = 0;
    for (int i = 0; i <= M; ++i) {
      const double x = static_cast<double>(i) / M;
      err = std::max(err, std::abs(sim.value(i, 0) - bump(x - t)));
    }
    (pass == 0 ? err_coarse : err_fine) = err;
  }
  CHECK(err_coarse < 5e-3);
  // cubic interpolation once per step over ~1/dt steps: O(dx^3) total
  CHECK(err_fine < err_coarse / 5.0);
}

TEST_CASE("linear decay rate matches the spectral prediction") {
  // gamma = 0 (cubic disabled), lambda = a0 - 0.2: the slowest mode decays
  // at (lambda - a0)/2 = -0.1 in simulation time
  const double lambda = sec6::kA0 - 0.2;
  SimConfig cfg;
  cfg.spec = builtin_example(0.0);
  cfg.lambda = lambda;
  cfg.dx = 1.0 / 200;
  cfg.t_end = 60.0;
  cfg.probes = {0.25};
  cfg.measure_window = 40.0;
  cfg.initial = std::vector<expr::ExprAst>{
      expr::parse("0.01*x*(1-x)", cfg.spec.speed_variables()),
      expr::parse("0.01*x*x", cfg.spec.speed_variables())};
  Simulator sim(std::move(cfg));
  const TimeSeries ts = sim.run();
  const Measurement& m = ts.measurements[0];  // probe 0, component 1
  CHECK(m.rate == doctest::Approx(-0.1).epsilon(0.05));
  // frequency of the decaying ringing approaches omega0
  CHECK(m.frequency == doctest::Approx(sec6::kOmega0).epsilon(0.02));
}

TEST_CASE("blow-up is reported with a time stamp") {
  // subcritical cubic sign with large data blows up in finite time
  SimConfig cfg = sec6_config(8.0, sec6::kA0 + 0.3);
  cfg.initial = std::vector<expr::ExprAst>{
      expr::parse("40*x*(1-x)", cfg.spec.speed_variables()),
      expr::parse("40*x*x*(1-x)", cfg.spec.speed_variables())};
  cfg.t_end = 50.0;
  Simulator sim(std::move(cfg));
  CHECK_THROWS_AS(sim.run(), BlowUpError);
}
