#include "doctest.h"
#include "tws/expr.hpp"

using namespace tws;

TEST_SUITE_BEGIN("expr");

TEST_CASE("evaluation matches hand arithmetic") {
  CHECK(parse_expr("x*(1-x)")->eval(0.3) == doctest::Approx(0.21));
  CHECK(parse_expr("2+3*4")->eval(0.0) == 14.0);
  CHECK(parse_expr("2*3^2")->eval(0.0) == 18.0);
  CHECK(parse_expr("2^3^2")->eval(0.0) == 512.0);  // right associative
  CHECK(parse_expr("-x^2")->eval(2.0) == -4.0);    // unary minus binds looser
  CHECK(parse_expr("x^-2")->eval(2.0) == 0.25);
  CHECK(parse_expr("x^0.5")->eval(4.0) == 2.0);
  CHECK(parse_expr("sqrt(x)*x")->eval(4.0) == 8.0);
  CHECK(parse_expr("min(x, 1-x)")->eval(0.8) == doctest::Approx(0.2));
  CHECK(parse_expr("max(x, 1-x)")->eval(0.8) == doctest::Approx(0.8));
  CHECK(parse_expr("abs(x-0.5)")->eval(0.2) == doctest::Approx(0.3));
  CHECK(parse_expr("exp(log(x))")->eval(0.7) == doctest::Approx(0.7));
  CHECK(parse_expr("1e2 + .5")->eval(0.0) == 100.5);
  CHECK(parse_expr("2 - -3")->eval(0.0) == 5.0);
}

TEST_CASE("print then reparse reproduces the tree") {
  const char* cases[] = {
      "x",
      "2",
      "-2",
      "x^2",
      "(-2)^x",
      "x^-2",
      "-x^2",
      "2^3^2",
      "(x^2)^3",
      "min(x, 1-x)",
      "max(2*x, x/3)",
      "exp(log(x))",
      "2*x + 3/x - x^0.5",
      "abs(x-0.5)",
      "sqrt(x)*x",
      "x * -2",
      "2 - -3",
      "x - -x",
      "(x+1)*(x-1)",
      "1/(x - 0.5)",
      "x/(2*x)",
      "--x",
  };
  for (const char* s : cases) {
    CAPTURE(s);
    ExprPtr e = parse_expr(s);
    std::string printed = to_string(e);
    CAPTURE(printed);
    ExprPtr again = parse_expr(printed);
    CHECK(expr_equal(e, again));
    CHECK(to_string(again) == printed);  // printing is idempotent
  }
}

TEST_CASE("domain violations are signaled, not silent") {
  CHECK_THROWS_AS(parse_expr("1/x")->eval(0.0), EvalDomainError);
  CHECK_THROWS_AS(parse_expr("log(x)")->eval(0.0), EvalDomainError);
  CHECK_THROWS_AS(parse_expr("log(x-1)")->eval(0.5), EvalDomainError);
  CHECK_THROWS_AS(parse_expr("sqrt(x-1)")->eval(0.5), EvalDomainError);
  CHECK_THROWS_AS(parse_expr("(x-1)^0.5")->eval(0.5), EvalDomainError);
  CHECK_THROWS_AS(parse_expr("x^-1")->eval(0.0), EvalDomainError);
  CHECK_THROWS_AS(parse_expr("exp(x)")->eval(1000.0), EvalDomainError);  // overflow
  CHECK(parse_expr("(x-2)^3")->eval(0.5) == doctest::Approx(-3.375));   // integer power ok
}

TEST_CASE("syntax errors carry a column") {
  auto col_of = [](const char* s) {
    try {
      parse_expr(s);
    } catch (const ConfigError& e) {
      return e.col();
    }
    return -1;
  };
  CHECK(col_of("2+") > 0);
  CHECK(col_of("(x") > 0);
  CHECK(col_of("foo(x)") > 0);
  CHECK(col_of("x 2") > 0);
  CHECK(col_of("min(x)") > 0);
  CHECK(col_of("") > 0);
  CHECK(col_of("x @ 2") > 0);
}

TEST_CASE("builders fold trivial factors so derived trees stay small") {
  ExprPtr x = ex::var();
  CHECK(expr_equal(ex::mul(ex::constant(1.0), x), x));
  CHECK(expr_equal(ex::mul(x, ex::constant(1.0)), x));
  CHECK(expr_equal(ex::div(x, ex::constant(1.0)), x));
  CHECK(expr_equal(ex::pow(x, ex::constant(1.0)), x));
  CHECK(expr_equal(ex::neg(ex::constant(2.0)), ex::constant(-2.0)));
  CHECK_FALSE(expr_equal(ex::pow(x, ex::constant(2.0)), x));
}

TEST_SUITE_END();
