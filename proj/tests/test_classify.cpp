#include <catch_amalgamated.hpp>

#include "modphase/classify.hpp"

using namespace modphase;

namespace {

NonlinearTermDef term(const char* src, const char* input = "z", const char* modulator = "x") {
  return {parse(src), input, modulator};
}

TermClass class_of(const char* src, ClassifyOptions opts = {}) { return classify_term(term(src), opts).term_class; }

}  // namespace

TEST_CASE("the four reference terms") {
  const auto v1 = classify_term(term("tanh(x + z)"));
  CHECK(v1.term_class == TermClass::LinearInputModulation);
  CHECK(v1.predicted_dim == 2);
  CHECK(v1.collapse_axis == CollapseAxis::Output);
  CHECK(print(v1.gain_expr) == "sech(x + z)^2");

  const auto fhn = classify_term(term("-z^3/3 - x"));
  CHECK(fhn.term_class == TermClass::LinearOutputModulation);
  CHECK(fhn.predicted_dim == 2);
  CHECK(fhn.collapse_axis == CollapseAxis::Input);

  const auto orig = classify_term(term("x*z"));
  CHECK(orig.term_class == TermClass::GainModulation);
  CHECK(orig.predicted_dim == 3);
  CHECK(print(orig.gain_expr) == "x");

  const auto v2 = classify_term(term("tanh(x*z)"));
  CHECK(v2.term_class == TermClass::GainModulation);
  CHECK(v2.predicted_dim == 3);
  CHECK(v2.collapse_axis == CollapseAxis::None);
}

TEST_CASE("shifts along either axis of other I/O functions") {
  CHECK(class_of("(z + 2*x)^3") == TermClass::LinearInputModulation);
  // sin is not monotone over the box, so its slope is not a function of its value.
  CHECK(class_of("sin(z + 2*x)") == TermClass::GainModulation);
  CHECK(class_of("exp(z - x)") == TermClass::LinearInputModulation);
  CHECK(class_of("tanh(z) + x^2") == TermClass::LinearOutputModulation);
  CHECK(class_of("z^2 - 3*x") == TermClass::LinearOutputModulation);
  CHECK(class_of("x*tanh(z)") == TermClass::GainModulation);
  CHECK(class_of("sin(x*z) + z") == TermClass::GainModulation);
}

TEST_CASE("affine terms carry no modulation") {
  const auto c = classify_term(term("3*z - 2*x + 1"));
  CHECK(c.term_class == TermClass::NoModulation);
  CHECK(c.predicted_dim == 2);
  CHECK(c.collapse_axis == CollapseAxis::None);
}

TEST_CASE("terms must depend on both variables") {
  auto code = [](const NonlinearTermDef& t) {
    try {
      classify_term(t);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code(term("tanh(x)")) == ErrorCode::DegenerateTerm);
  CHECK(code(term("z^2")) == ErrorCode::DegenerateTerm);
  CHECK(code(term("x*z - z*x")) == ErrorCode::DegenerateTerm);
  CHECK(code(term("x*z", "z", "z")) == ErrorCode::DegenerateTerm);
}

TEST_CASE("parameters are bound from the options") {
  ClassifyOptions opts;
  opts.params = {{"k", 2.5}};
  CHECK(class_of("tanh(k*x + z)", opts) == TermClass::LinearInputModulation);
  CHECK_THROWS_AS(class_of("tanh(k*x + z)"), Error);
}

TEST_CASE("classification does not depend on the seed") {
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 123456789ull}) {
    ClassifyOptions opts;
    opts.seed = seed;
    CHECK(class_of("tanh(x + z)", opts) == TermClass::LinearInputModulation);
    CHECK(class_of("tanh(x*z)", opts) == TermClass::GainModulation);
    CHECK(class_of("-z^3/3 - x", opts) == TermClass::LinearOutputModulation);
  }
}

TEST_CASE("sampling is deterministic for a seed") {
  ClassifyOptions opts;
  opts.seed = 9;
  const auto a = classify_term(term("tanh(x*z)"), opts);
  const auto b = classify_term(term("tanh(x*z)"), opts);
  CHECK(a.residual_vs_output == b.residual_vs_output);
  CHECK(a.residual_vs_input == b.residual_vs_input);
}

TEST_CASE("Halton points fill the unit square evenly") {
  const auto pts = detail::halton_points(512, 0);
  int quadrant[4] = {0, 0, 0, 0};
  for (const auto& p : pts) {
    REQUIRE(p[0] >= 0.0);
    REQUIRE(p[0] < 1.0);
    REQUIRE(p[1] >= 0.0);
    REQUIRE(p[1] < 1.0);
    ++quadrant[(p[0] < 0.5 ? 0 : 1) + (p[1] < 0.5 ? 0 : 2)];
  }
  for (int q : quadrant) CHECK(std::abs(q - 128) <= 4);
  CHECK(detail::radical_inverse(1, 2) == 0.5);
  CHECK(detail::radical_inverse(3, 2) == 0.75);
  CHECK(detail::radical_inverse(2, 3) == 2.0 / 3.0);
}

TEST_CASE("terms that blow up somewhere still classify") {
  ClassifyOptions opts;
  CHECK(class_of("ln(z + 1) + x", opts) == TermClass::LinearOutputModulation);
}
