#include <catch_amalgamated.hpp>

#include <random>

#include "modphase/parser.hpp"
#include "support/expr_gen.hpp"

using namespace modphase;

namespace {

Expr x() { return Expr::variable("x"); }
Expr z() { return Expr::variable("z"); }
Expr c(double v) { return Expr::constant(v); }
Expr bin(BinaryOp op, const Expr& a, const Expr& b) { return Expr::binary(op, a, b); }

}  // namespace

TEST_CASE("printer uses minimal parentheses") {
  CHECK(print(bin(BinaryOp::Add, x(), bin(BinaryOp::Mul, c(2), z()))) == "x + 2*z");
  CHECK(print(bin(BinaryOp::Mul, bin(BinaryOp::Add, x(), c(1)), z())) == "(x + 1)*z");
  CHECK(print(bin(BinaryOp::Sub, x(), bin(BinaryOp::Sub, z(), c(1)))) == "x - (z - 1)");
  CHECK(print(bin(BinaryOp::Sub, bin(BinaryOp::Sub, x(), z()), c(1))) == "x - z - 1");
  CHECK(print(bin(BinaryOp::Div, x(), bin(BinaryOp::Mul, z(), c(2)))) == "x/(z*2)");
  CHECK(print(bin(BinaryOp::Pow, bin(BinaryOp::Pow, x(), c(2)), c(3))) == "(x^2)^3");
  CHECK(print(Expr::neg(bin(BinaryOp::Pow, x(), c(2)))) == "-x^2");
  CHECK(print(bin(BinaryOp::Pow, Expr::neg(x()), c(2))) == "(-x)^2");
  CHECK(print(bin(BinaryOp::Mul, c(-2), x())) == "(-2)*x");
  CHECK(print(Expr::neg(c(2))) == "-(2)");
  CHECK(print(Expr::call(Function::Tanh, bin(BinaryOp::Add, x(), z()))) == "tanh(x + z)");
  CHECK(print(bin(BinaryOp::Add, x(), Expr::neg(z()))) == "x + (-z)");
}

TEST_CASE("numbers print in shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(1e20) == "1e+20");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("structural equality distinguishes shape, not value") {
  CHECK(bin(BinaryOp::Add, x(), z()) == bin(BinaryOp::Add, x(), z()));
  CHECK_FALSE(bin(BinaryOp::Add, x(), z()) == bin(BinaryOp::Add, z(), x()));
  CHECK_FALSE(c(0.0) == c(-0.0));
  CHECK_FALSE(Expr::neg(c(2)) == c(-2));
}

TEST_CASE("free symbols exclude function names") {
  const auto s = free_symbols(parse("tanh(x*z) + a - sech(b)"));
  CHECK(s == std::set<std::string>{"a", "b", "x", "z"});
}

TEST_CASE("parser precedence and associativity") {
  CHECK(parse("1 + 2*3") == bin(BinaryOp::Add, c(1), bin(BinaryOp::Mul, c(2), c(3))));
  CHECK(parse("8/4/2") == bin(BinaryOp::Div, bin(BinaryOp::Div, c(8), c(4)), c(2)));
  CHECK(parse("x - y - z") == bin(BinaryOp::Sub, bin(BinaryOp::Sub, x(), Expr::variable("y")), z()));
  CHECK(parse("-x^2") == Expr::neg(bin(BinaryOp::Pow, x(), c(2))));
  CHECK(parse("-2^2") == Expr::neg(bin(BinaryOp::Pow, c(2), c(2))));
  CHECK(parse("-2*x") == bin(BinaryOp::Mul, c(-2), x()));
  CHECK(parse("x^-1") == bin(BinaryOp::Pow, x(), c(-1)));
  CHECK(parse("z^(1+2)") == bin(BinaryOp::Pow, z(), c(3)));
  CHECK(parse("1.5e-3*x") == bin(BinaryOp::Mul, c(1.5e-3), x()));
  CHECK(parse("  tanh( x + z )  ") == Expr::call(Function::Tanh, bin(BinaryOp::Add, x(), z())));
}

TEST_CASE("parser diagnostics carry offsets") {
  auto offset_of = [](const char* src) {
    try {
      parse(src);
    } catch (const SyntaxError& e) {
      return static_cast<long>(e.offset());
    }
    return -1L;
  };
  CHECK(offset_of("2x") == 1);
  CHECK(offset_of("x + ") == 4);
  CHECK(offset_of("(x + 1") == 6);
  CHECK(offset_of("x $ 1") == 2);
  CHECK(offset_of("x / 0") == 2);
  CHECK(offset_of("x^z") == 2);
  CHECK(offset_of("") == 0);

  try {
    parse("2 x");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(std::string(e.detail()).find("implicit multiplication") != std::string::npos);
    CHECK_FALSE(e.expected().empty());
  }
}

TEST_CASE("unknown functions are named") {
  try {
    parse("sigmoid(x)");
    FAIL("expected UnknownFunction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownFunction);
    CHECK(e.message().find("sigmoid") != std::string::npos);
  }
}

TEST_CASE("expression depth is bounded") {
  std::string deep;
  for (int i = 0; i < 70; ++i) deep += "tanh(";
  deep += "x";
  for (int i = 0; i < 70; ++i) deep += ")";
  CHECK_THROWS_AS(parse(deep), SyntaxError);

  std::string shallow;
  for (int i = 0; i < 60; ++i) shallow += "(";
  shallow += "x";
  for (int i = 0; i < 60; ++i) shallow += ")";
  CHECK(parse(shallow) == x());
}

TEST_CASE("print then parse reproduces the tree") {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 1000; ++i) {
    const Expr e = testing::random_expr(rng, 6);
    const std::string text = print(e);
    INFO(text);
    REQUIRE(parse(text) == e);
  }
}

TEST_CASE("parse_prefix stops at the first foreign token") {
  const auto p = parse_prefix("tanh(x + z) input z", 0);
  CHECK(print(p.expr) == "tanh(x + z)");
  CHECK(p.end == 12);
}
