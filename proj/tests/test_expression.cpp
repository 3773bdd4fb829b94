#include "isovar/expression.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace isovar;
using Catch::Approx;

TEST_CASE("expressions evaluate with precedence and functions", "[expression]") {
  const Expr e = Expr::parse("1 + z^2", {"z"});
  CHECK(e(0.0) == 1.0);
  CHECK(e(2.0) == 5.0);
  CHECK(Expr::parse("-2^2", {}).eval({}) == -4.0);
  CHECK(Expr::parse("2^3^2", {}).eval({}) == 512.0);
  CHECK(Expr::parse("8/4/2", {}).eval({}) == 1.0);
  CHECK(Expr::parse("cosh(0) + sinh(0) + exp(0) + cos(pi)", {}).eval({}) == Approx(1.0));
  CHECK(Expr::parse("x*y - 3e-1", {"x", "y"})(2.0, 3.0) == Approx(5.7));
}

TEST_CASE("parse errors are reported", "[expression]") {
  CHECK_THROWS_AS(Expr::parse("1 +", {}), Error);
  CHECK_THROWS_AS(Expr::parse("foo(1)", {}), Error);
  CHECK_THROWS_AS(Expr::parse("(1", {}), Error);
  CHECK_THROWS_AS(Expr::parse("q + 1", {"z"}), Error);
}

TEST_CASE("symbolic derivatives agree with finite differences", "[expression]") {
  const char* texts[] = {"1 + z^2", "cosh(z)", "sin(z)*exp(-z)", "sqrt(2 + z^2)/(1 + z)", "z^z", "tanh(3*z) - log(2+z)"};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.1, 1.5);
  for (const char* t : texts) {
    const Expr e = Expr::parse(t, {"z"});
    const Expr d = e.derivative(0);
    for (int i = 0; i < 20; ++i) {
      const double z = u(rng), h = 1e-5;
      const double fd = (e(z + h) - e(z - h)) / (2 * h);
      CHECK(d(z) == Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("printing reparses to the same function", "[expression]") {
  const Expr e = Expr::parse("-(x - 2)^2/(1 + y) + sin(x*y)", {"x", "y"});
  const Expr r = Expr::parse(e.to_string(), {"x", "y"});
  CHECK(r(0.3, 0.7) == e(0.3, 0.7));
  const Expr d = e.derivative(1);
  CHECK(Expr::parse(d.to_string(), {"x", "y"})(0.3, 0.7) == d(0.3, 0.7));
}
