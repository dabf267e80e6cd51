#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "modphase/systems.hpp"

using namespace modphase;
using Catch::Matchers::WithinAbs;

namespace {

ErrorCode code_of(const std::string& text) {
  try {
    parse_system_definition(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("definition unexpectedly accepted:\n" << text);
  return ErrorCode::InvalidArgument;
}

const char* kMinimal = R"(system osc
param k = 2
var x : y
var y : -k*x
term k*x*y input x modulator y
)";

}  // namespace

TEST_CASE("built-in systems load with their terms") {
  const auto names = builtin_names();
  REQUIRE(names == std::vector<std::string>{"rossler_original", "rossler_v1", "rossler_v2", "fitzhugh_nagumo"});
  for (const auto& n : names) {
    const auto sys = builtin(n);
    CHECK(sys.name() == n);
    REQUIRE(sys.term() != nullptr);
    CHECK(sys.var_index(sys.term()->input_var).has_value());
    CHECK(sys.var_index(sys.term()->modulator_var).has_value());
  }
  CHECK(print(builtin("rossler_v1").term()->expr) == "tanh(x + z)");
  CHECK(print(builtin("rossler_v2").term()->expr) == "tanh(x*z)");
  CHECK(print(builtin("rossler_original").term()->expr) == "x*z");
  CHECK(builtin("fitzhugh_nagumo").term()->input_var == "z");
  CHECK(builtin("rossler_v2").params().at("d") == 1.1);
}

TEST_CASE("unknown system names list the built-ins") {
  try {
    builtin("lorenz");
    FAIL("expected UnknownSystem");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownSystem);
    for (const auto& n : builtin_names()) CHECK(e.message().find(n) != std::string::npos);
  }
}

TEST_CASE("shipped definition files match the built-ins") {
  const std::filesystem::path dir = MODPHASE_SOURCE_DIR "/systems";
  for (const auto& n : builtin_names()) {
    std::ifstream in(dir / (n + ".sys"));
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto from_file = parse_system_definition(ss.str());
    const auto built = builtin(n);
    CHECK(from_file.params() == built.params());
    CHECK(from_file.state_vars() == built.state_vars());
    REQUIRE(from_file.rhs().size() == built.rhs().size());
    for (std::size_t i = 0; i < built.rhs().size(); ++i) CHECK(from_file.rhs()[i] == built.rhs()[i]);
  }
}

TEST_CASE("vector field evaluates the right-hand sides") {
  const auto sys = builtin("rossler_original");
  const double x[3] = {1.0, 2.0, 3.0};
  double dx[3];
  sys.derivative(x, dx);
  CHECK(dx[0] == -5.0);
  CHECK_THAT(dx[1], WithinAbs(1.0 + 0.2 * 2.0, 1e-15));
  CHECK_THAT(dx[2], WithinAbs(0.2 - 2.5 * 3.0 + 3.0, 1e-15));

  const auto fhn = builtin("fitzhugh_nagumo");
  const double s[2] = {1.0, 0.5};  // z, x
  double ds[2];
  fhn.derivative(s, ds);
  CHECK_THAT(ds[0], WithinAbs(1.0 - 1.0 / 3.0 - 0.5 + 0.5, 1e-15));
  CHECK_THAT(ds[1], WithinAbs(0.08 * (1.0 + 0.7 - 0.4), 1e-15));
}

TEST_CASE("definition files: comments, blank lines, several terms") {
  const auto sys = parse_system_definition(std::string(kMinimal) + "\n# extra\nterm x + y input x modulator y ; c\n");
  CHECK(sys.terms().size() == 2);
  CHECK(sys.dimension() == 2);
  CHECK(sys.params().at("k") == 2.0);
  const auto p = parse_system_definition("system s\nparam w = 2*3 - 1\nvar x : -w*x\n");
  CHECK(p.params().at("w") == 5.0);
  CHECK(p.term() == nullptr);
}

TEST_CASE("definition syntax errors carry line and column") {
  try {
    parse_system_definition("system s\nvar x : 2 x\n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 11);
  }
  try {
    parse_system_definition("system s\nparam a = 1\nvar x : a*(x + \n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 3);
  }
  try {
    parse_system_definition("system s\nvar tanh : 1\n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 5);
  }
  CHECK(code_of("var x : x\n") == ErrorCode::SyntaxError);
  CHECK(code_of("system s\nequation x = 1\n") == ErrorCode::SyntaxError);
  CHECK(code_of("system s\nvar x : -x\nterm x input x\n") == ErrorCode::SyntaxError);
  CHECK(code_of("system s\nparam a = b\nvar x : a\n") == ErrorCode::SyntaxError);
}

TEST_CASE("definition semantic errors") {
  CHECK(code_of("system s\nvar x : q*x\n") == ErrorCode::UnknownSymbol);
  CHECK(code_of("system s\nparam a = 1\nvar x : -x\n") == ErrorCode::InvalidArgument);
  CHECK(code_of("system s\nvar x : -x\nvar y : x\nterm x*y input x modulator x\n") == ErrorCode::DegenerateTerm);
  CHECK(code_of("system s\nvar x : -x\nterm x*w input x modulator w\n") == ErrorCode::UnknownSymbol);
  CHECK(code_of("system s\nvar x : foo(x)\n") == ErrorCode::UnknownFunction);
}

TEST_CASE("perturbation scales one parameter") {
  const auto v2 = builtin("rossler_v2");
  const auto p = perturb(v2, "d", -0.10);
  CHECK_THAT(p.params().at("d"), WithinAbs(0.99, 1e-15));
  CHECK(p.params().at("a") == v2.params().at("a"));
  CHECK(perturb(v2, "d", 0.0).params() == v2.params());
  try {
    perturb(v2, "q", 0.1);
    FAIL("expected UnknownParameter");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownParameter);
  }
}

// The two tanh variants, with the parameter values they ship with, have a
// stable equilibrium that attracts every nearby start.
TEST_CASE("tanh variants settle onto an equilibrium from small initial states") {
  for (const char* name : {"rossler_v1", "rossler_v2"}) {
    const auto sys = builtin(name);
    std::vector<double> reference;
    for (double s : {-1.0, -0.3, 0.1, 0.7, 1.0}) {
      IntegratorConfig cfg;
      cfg.t_end = 400.0;
      cfg.transient_fraction = 0.9;
      const auto traj = integrate(sys, StateVector({s, -s / 2, s}), cfg);
      const auto last = traj.state(traj.size() - 1);
      double rate[3];
      sys.derivative(last, rate);
      INFO(name << " from " << s);
      CHECK(std::abs(rate[0]) + std::abs(rate[1]) + std::abs(rate[2]) < 1e-6);
      if (reference.empty()) reference.assign(last.begin(), last.end());
      for (std::size_t i = 0; i < 3; ++i) CHECK_THAT(last[i], WithinAbs(reference[i], 1e-6));
    }
  }
}
