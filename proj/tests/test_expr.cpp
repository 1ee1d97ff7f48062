#include "hyperhopf/expr.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using namespace hyperhopf;
using namespace hyperhopf::expr;

namespace {
const std::vector<std::string> kVars = {"x", "lambda", "u1", "u2", "g"};
}

TEST_CASE("parse + evaluate basics") {
  const ExprAst e = parse("lambda*u1 - u2 + g*u1^3", kVars);
  CHECK(e.evaluate({{"lambda", 2}, {"u1", 1}, {"u2", 0}, {"g", -1}}) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(parse("x + 1", kVars).evaluate({{"x", 0}}) == 1.0);
  CHECK(parse("exp(2*x)", kVars).evaluate({{"x", 0}}) == 1.0);
  CHECK(parse("sin(x)^2 + cos(x)^2", kVars).evaluate({{"x", 0.7}}) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("operator precedence") {
  // ^ binds tightest, then unary minus, then * /, then + -
  CHECK(parse("-x^2", kVars).evaluate({{"x", 3}}) == -9.0);
  CHECK(parse("2*x^2", kVars).evaluate({{"x", 3}}) == 18.0);
  CHECK(parse("1 - 2 - 3", kVars).evaluate({}) == -4.0);
  CHECK(parse("12/2/3", kVars).evaluate({}) == 2.0);
  CHECK(parse("2*-x", kVars).evaluate({{"x", 5}}) == -10.0);
  CHECK(parse("x^-2", kVars).evaluate({{"x", 2}}) == 0.25);
}

TEST_CASE("syntax errors carry the byte offset") {
  try {
    parse("u1 +* u2", kVars);
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(parse("u1 + ", kVars), SyntaxError);
  CHECK_THROWS_AS(parse("(u1", kVars), SyntaxError);
  CHECK_THROWS_AS(parse("x^u1", kVars), SyntaxError);    // exponent not const
  CHECK_THROWS_AS(parse("x^1.5", kVars), SyntaxError);   // exponent not integer
  CHECK_THROWS_AS(parse("sin x", kVars), SyntaxError);
  try {
    parse("u1 + foo", kVars);
    FAIL("expected unknown identifier");
  } catch (const UnknownIdentifierError& e) {
    CHECK(e.name() == "foo");
    CHECK(e.offset() == 5);
  }
}

TEST_CASE("evaluation domain errors") {
  CHECK_THROWS_AS(parse("1/x", kVars).evaluate({{"x", 0}}), DomainError);
  CHECK_THROWS_AS(parse("log(x)", kVars).evaluate({{"x", 0}}), DomainError);
  CHECK_THROWS_AS(parse("log(x)", kVars).evaluate({{"x", -1}}), DomainError);
  CHECK_THROWS_AS(parse("sqrt(x)", kVars).evaluate({{"x", -1}}), DomainError);
  CHECK_THROWS_AS(parse("x^-1", kVars).evaluate({{"x", 0}}), DomainError);
  CHECK_THROWS_AS(parse("x+1", kVars).evaluate({}), UnboundVariableError);
}

TEST_CASE("differentiation examples") {
  const ExprAst e = parse("lambda*u1 + g*u1^3", kVars);
  const ExprAst d = e.differentiate("u1");
  for (double u1 : {-1.3, 0.0, 0.4, 2.0}) {
    const Bindings env{{"lambda", 0.7}, {"u1", u1}, {"g", 2.5}};
    CHECK(d.evaluate(env) ==
          doctest::Approx(0.7 + 3 * 2.5 * u1 * u1).epsilon(1e-14));
  }
  const ExprAst d3 = parse("g*u1^3", kVars)
                         .differentiate("u1")
                         .differentiate("u1")
                         .differentiate("u1");
  CHECK(d3.evaluate({{"g", -1.25}, {"u1", 77.0}}) == -7.5);
  CHECK(parse("x + 1", kVars).differentiate("lambda").evaluate({{"x", 3}}) ==
        0.0);
}

namespace {

// random polynomial trees of bounded degree, for the finite-difference check
struct PolyGen {
  std::mt19937 rng;
  explicit PolyGen(unsigned seed) : rng(seed) {}

  ExprAst gen(int depth, int max_degree) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 4);
    switch (pick(rng)) {
      case 0:
        return ExprAst::constant(uniform(-3, 3));
      case 1:
        return ExprAst::variable(kVars[var(rng)]);
      case 2:
        return gen(depth - 1, max_degree) + gen(depth - 1, max_degree);
      case 3:
        return gen(depth - 1, max_degree) - gen(depth - 1, max_degree);
      default: {
        // keep products shallow so total degree stays <= 4
        if (max_degree >= 2)
          return ExprAst::binary(BinaryOp::Mul, gen(depth - 1, max_degree / 2),
                                 gen(depth - 1, max_degree - max_degree / 2));
        return ExprAst::variable(kVars[var(rng)]);
      }
    }
  }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  std::uniform_int_distribution<int> var{0, 4};
};

}  // namespace

TEST_CASE("derivative matches central finite differences on polynomials") {
  PolyGen gen(20240811);
  int checked = 0;
  for (int trial = 0; trial < 1200; ++trial) {
    const ExprAst e = gen.gen(3, 4);
    const std::string var = kVars[gen.var(gen.rng)];
    const ExprAst d = e.differentiate(var);
    Bindings env;
    for (const auto& v : kVars) env.set(v, gen.uniform(-2, 2));
    const double h = 1e-5;
    Bindings plus = env, minus = env;
    plus.set(var, env.get(var) + h);
    minus.set(var, env.get(var) - h);
    const double fd = (e.evaluate(plus) - e.evaluate(minus)) / (2 * h);
    const double exact = d.evaluate(env);
    const double scale = std::max({1.0, std::abs(fd), std::abs(exact)});
    if (std::abs(fd) < 1e-12 && std::abs(exact) < 1e-12) continue;
    CHECK(std::abs(fd - exact) / scale < 1e-6);
    ++checked;
  }
  CHECK(checked > 200);
}

namespace {

// random trees over the full operator set, for the print/parse round trip
struct TreeGen {
  std::mt19937 rng;
  explicit TreeGen(unsigned seed) : rng(seed) {}
  ExprAst gen(int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 8);
    switch (pick(rng)) {
      case 0: {
        std::uniform_real_distribution<double> c(-4, 4);
        return ExprAst::constant(c(rng));
      }
      case 1:
        return ExprAst::variable(kVars[var(rng)]);
      case 2:
        return gen(depth - 1) + gen(depth - 1);
      case 3:
        return gen(depth - 1) - gen(depth - 1);
      case 4:
        return ExprAst::binary(BinaryOp::Mul, gen(depth - 1), gen(depth - 1));
      case 5:
        return ExprAst::binary(BinaryOp::Div, gen(depth - 1), gen(depth - 1));
      case 6: {
        std::uniform_int_distribution<int> e(0, 4);
        return ExprAst::pow(gen(depth - 1), e(rng));
      }
      case 7:
        return -gen(depth - 1);
      default: {
        std::uniform_int_distribution<int> f(0, 5);
        static constexpr UnaryOp ops[] = {UnaryOp::Sin, UnaryOp::Cos,
                                          UnaryOp::Exp, UnaryOp::Log,
                                          UnaryOp::Sqrt, UnaryOp::Abs};
        return ExprAst::unary(ops[f(rng)], gen(depth - 1));
      }
    }
  }
  std::uniform_int_distribution<int> var{0, 4};
};

}  // namespace

TEST_CASE("pretty-print round trip preserves evaluation on 1000 trees") {
  TreeGen gen(987654321);
  int compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const ExprAst e = gen.gen(4);
    const ExprAst back = parse(e.to_string(), kVars);
    // compare at a few bindings where the original evaluates cleanly
    for (int point = 0; point < 4; ++point) {
      Bindings env;
      std::uniform_real_distribution<double> val(0.1, 2.0);
      for (const auto& v : kVars) env.set(v, val(gen.rng));
      double a;
      try {
        a = e.evaluate(env);
      } catch (const DomainError&) {
        continue;
      }
      const double b = back.evaluate(env);
      CHECK(a == b);  // printing at 17 digits reproduces bit-identical values
      ++compared;
    }
  }
  CHECK(compared > 1500);
}

TEST_CASE("compiled expressions agree with tree evaluation") {
  const ExprAst e = parse("lambda*u1 - u2 + g*u1^3 + sin(x)*exp(u2)", kVars);
  CompiledExpr c(e, {"x", "u1", "u2"}, Bindings{{"lambda", 0.9}, {"g", -0.3}});
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> val(-2, 2);
  for (int k = 0; k < 200; ++k) {
    const double slots[3] = {val(rng), val(rng), val(rng)};
    const double want = e.evaluate({{"lambda", 0.9},
                                    {"g", -0.3},
                                    {"x", slots[0]},
                                    {"u1", slots[1]},
                                    {"u2", slots[2]}});
    CHECK(c(slots) == doctest::Approx(want).epsilon(1e-15));
  }
}
