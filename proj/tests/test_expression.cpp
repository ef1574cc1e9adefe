#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mint/expression.hpp"
#include "oracles.hpp"

using namespace mint;

namespace {

double eval2(const Expression& e, double x1, double x2) {
  std::vector<double> p{x1, x2};
  return e.evaluate(p);
}

TEST(Expression, ParsesArithmetic) {
  VariableListPtr vars = chart_variables(2);
  Expression e = parse_expression("2*x1^2 - 3/x2 + sin(x1)", vars);
  EXPECT_NEAR(eval2(e, 1.5, 2.0), 2 * 2.25 - 1.5 + std::sin(1.5), 1e-15);
  EXPECT_NEAR(eval2(parse_expression("1 + 2 * 3 ^ 2", vars), 0, 1), 19.0,
              1e-15);
  EXPECT_NEAR(eval2(parse_expression("(1 + 2) * 3", vars), 0, 1), 9.0, 1e-15);
  EXPECT_NEAR(eval2(parse_expression("-x1^2", vars), 3.0, 1), -9.0, 1e-15);
  EXPECT_NEAR(eval2(parse_expression("x1^-2", vars), 2.0, 1), 0.25, 1e-15);
  EXPECT_NEAR(eval2(parse_expression("cos(0) + exp(0) + log(1)", vars), 0, 1),
              2.0, 1e-15);
  EXPECT_NEAR(eval2(parse_expression("7*x1/10", vars), 0.5, 1), 0.35, 1e-15);
}

TEST(Expression, ParseErrorsCarryOffsets) {
  VariableListPtr vars = chart_variables(2);
  try {
    parse_expression("x1 + @", vars);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  EXPECT_THROW(parse_expression("x3 + 1", vars), ParseError);
  EXPECT_THROW(parse_expression("x1 + ", vars), ParseError);
  EXPECT_THROW(parse_expression("x1 ^ x2", vars), ParseError);
  EXPECT_THROW(parse_expression("(x1", vars), ParseError);
  EXPECT_THROW(parse_expression("", vars), ParseError);
}

TEST(Expression, EvaluationErrors) {
  VariableListPtr vars = chart_variables(1);
  std::vector<double> zero{0.0};
  std::vector<double> neg{-1.0};
  EXPECT_THROW(parse_expression("1/x1", vars).evaluate(zero), EvalError);
  EXPECT_THROW(parse_expression("log(x1)", vars).evaluate(neg), EvalError);
  EXPECT_THROW(parse_expression("x1^-1", vars).evaluate(zero), EvalError);
}

TEST(Expression, DifferentiateMatchesFiniteDifferences) {
  VariableListPtr vars = chart_variables(3);
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.2, 0.9);
  const char* sources[] = {
      "x1^2*x2 - x3/2 + 1",
      "sin(x1*x2) + cos(x3)",
      "exp(x1/2) * (x2 + x3^2)",
      "log(1 + x1^2) - x2*x3",
  };
  for (const char* src : sources) {
    Expression e = parse_expression(src, vars);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> p{u(rng), u(rng), u(rng)};
      for (int v = 0; v < 3; ++v) {
        Expression de = e.differentiate(v);
        double h = 1e-6;
        std::vector<double> lo = p, hi = p;
        lo[static_cast<std::size_t>(v)] -= h;
        hi[static_cast<std::size_t>(v)] += h;
        double fd = (e.evaluate(hi) - e.evaluate(lo)) / (2 * h);
        EXPECT_NEAR(de.evaluate(p), fd, 1e-7) << src << " d/dx" << v + 1;
      }
    }
  }
}

TEST(Expression, DifferentiateKnownValues) {
  VariableListPtr vars = chart_variables(2);
  Expression e = parse_expression("2*x1^2 - 3/x2 + sin(x1)", vars);
  EXPECT_NEAR(eval2(e.differentiate("x1"), 1.5, 2.0), 6.0 + std::cos(1.5),
              1e-15);
  EXPECT_NEAR(eval2(e.differentiate("x2"), 1.5, 2.0), 0.75, 1e-15);
  Expression c = parse_expression("5", vars);
  EXPECT_TRUE(c.differentiate(0).is_zero());
}

TEST(Expression, SubstituteComposesFunctions) {
  VariableListPtr xy = chart_variables(2);
  VariableListPtr tv = cube_variables(1);
  Expression e = parse_expression("x1*x2 + x2^2", xy);
  Expression t = Expression::variable(0, tv);
  std::vector<Expression> repl{t * t, t + Expression::constant(1.0, tv)};
  Expression composed = e.substitute(repl, tv);
  double tval = 0.7;
  std::vector<double> pt{tval};
  double expect = (tval * tval) * (tval + 1) + (tval + 1) * (tval + 1);
  EXPECT_NEAR(composed.evaluate(pt), expect, 1e-15);
}

TEST(Expression, ToStringRoundTrips) {
  VariableListPtr vars = chart_variables(3);
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Expression e = oracle::random_poly(vars, 3, rng);
    Expression back = parse_expression(e.to_string(), vars);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 4; ++k) {
      std::vector<double> p{u(rng), u(rng), u(rng)};
      EXPECT_NEAR(back.evaluate(p), e.evaluate(p), 1e-12) << e.to_string();
    }
  }
  const char* fixed[] = {"-x1^2", "x1^-2", "1 - (x2 - x3)", "x1/(2*x2)",
                         "sin(x1)*cos(x2) - exp(-x3)"};
  for (const char* src : fixed) {
    Expression e = parse_expression(src, vars);
    Expression back = parse_expression(e.to_string(), vars);
    std::vector<double> p{0.6, 0.4, 0.3};
    EXPECT_NEAR(back.evaluate(p), e.evaluate(p), 1e-15) << src;
  }
}

TEST(Expression, ConstantFolding) {
  VariableListPtr vars = chart_variables(1);
  EXPECT_TRUE(parse_expression("0*x1", vars).is_zero());
  EXPECT_TRUE(parse_expression("x1*0", vars).is_zero());
  EXPECT_TRUE(parse_expression("0 + 1", vars).is_one());
  Expression e = Expression::constant(2.5);
  EXPECT_TRUE(e.is_constant());
  EXPECT_EQ(e.constant_value(), 2.5);
}

TEST(Expression, VariableLists) {
  VariableListPtr chart = chart_variables(3);
  EXPECT_EQ((*chart)[0], "x1");
  EXPECT_EQ((*chart)[2], "x3");
  VariableListPtr cube = cube_variables(2);
  EXPECT_EQ((*cube)[0], "t1");
  EXPECT_EQ((*cube)[1], "t2");
  VariableListPtr fam = cube_variables(2, true);
  EXPECT_EQ(fam->size(), 3u);
  EXPECT_THROW(Expression::variable("nope", chart), std::invalid_argument);
}

}  // namespace
