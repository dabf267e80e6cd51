#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "modphase/ode.hpp"

using namespace modphase;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Harmonic {
  std::size_t dimension() const { return 2; }
  void derivative(std::span<const double> x, std::span<double> dx) const {
    dx[0] = x[1];
    dx[1] = -x[0];
  }
};

struct Blowup {  // x' = x^2, x(0) = 1 escapes at t = 1
  std::size_t dimension() const { return 1; }
  void derivative(std::span<const double> x, std::span<double> dx) const { dx[0] = x[0] * x[0]; }
};

struct Decay {
  std::size_t dimension() const { return 1; }
  void derivative(std::span<const double> x, std::span<double> dx) const { dx[0] = -x[0]; }
};

IntegratorConfig cfg(double dt, double t_end, double transient = 0.0,
                     IntegrationMethod m = IntegrationMethod::RK4Fixed) {
  IntegratorConfig c;
  c.dt = dt;
  c.t_end = t_end;
  c.transient_fraction = transient;
  c.method = m;
  return c;
}

double final_error(double dt) {
  const auto traj = integrate(Harmonic{}, StateVector({1.0, 0.0}), cfg(dt, 10.0));
  const auto s = traj.state(traj.size() - 1);
  return std::hypot(s[0] - std::cos(10.0), s[1] + std::sin(10.0));
}

}  // namespace

TEST_CASE("state vectors reject non-finite and empty input") {
  CHECK_THROWS_AS(StateVector({}), Error);
  CHECK_THROWS_AS(StateVector({1.0, std::nan("")}), Error);
  CHECK(StateVector({1.0, 2.0}).dimension() == 2);
}

TEST_CASE("one RK4 step matches the Taylor series of the exponential") {
  const auto s = step_rk4(Decay{}, StateVector({1.0}), 0.1);
  const double h = 0.1;
  CHECK_THAT(s.values()[0], WithinAbs(1 - h + h * h / 2 - h * h * h / 6 + h * h * h * h / 24, 1e-15));
}

TEST_CASE("RK4 is fourth order") {
  const double ratio = final_error(0.02) / final_error(0.01);
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("RK4 conserves oscillator energy over 100 time units") {
  const auto traj = integrate(Harmonic{}, StateVector({1.0, 0.0}), cfg(0.01, 100.0));
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto s = traj.state(i);
    worst = std::max(worst, std::abs(0.5 * (s[0] * s[0] + s[1] * s[1]) - 0.5) / 0.5);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("Dormand-Prince output lands on the uniform grid") {
  const auto traj = integrate(Harmonic{}, StateVector({1.0, 0.0}), cfg(0.05, 20.0, 0.0, IntegrationMethod::DormandPrince45));
  REQUIRE(traj.size() == 401);
  for (std::size_t i = 0; i < traj.size(); i += 37) {
    CHECK_THAT(traj.state(i)[0], WithinAbs(std::cos(traj.time(i)), 1e-6));
    CHECK_THAT(traj.state(i)[1], WithinAbs(-std::sin(traj.time(i)), 1e-6));
  }
}

TEST_CASE("transient samples are dropped from the front") {
  const auto traj = integrate(Decay{}, StateVector({1.0}), cfg(0.01, 10.0, 0.5));
  CHECK(traj.size() == 501);
  CHECK_THAT(traj.time(0), WithinAbs(5.0, 1e-12));
  CHECK_THAT(traj.state(0)[0], WithinRel(std::exp(-5.0), 1e-9));
  const auto sub = traj.subsample(2);
  CHECK(sub.size() == 251);
  CHECK(sub.dt() == 0.02);
}

TEST_CASE("divergence reports the failing time") {
  for (auto m : {IntegrationMethod::RK4Fixed, IntegrationMethod::DormandPrince45}) {
    try {
      integrate(Blowup{}, StateVector({1.0}), cfg(0.001, 2.0, 0.0, m));
      FAIL("expected divergence");
    } catch (const NonFiniteStateError& e) {
      CHECK(e.time() > 0.9);
      CHECK(e.time() < 1.01);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::StepUnderflow);
    }
  }
}

TEST_CASE("integrator configuration is validated") {
  CHECK_THROWS_AS(integrate(Decay{}, StateVector({1.0}), cfg(0.0, 1.0)), Error);
  CHECK_THROWS_AS(integrate(Decay{}, StateVector({1.0}), cfg(0.1, -1.0)), Error);
  CHECK_THROWS_AS(integrate(Decay{}, StateVector({1.0}), cfg(0.1, 1.0, 1.0)), Error);
  CHECK_THROWS_AS(integrate(Decay{}, StateVector({1.0, 2.0}), cfg(0.1, 1.0)), Error);
}

TEST_CASE("period detection") {
  const double dt = 0.01;
  std::vector<double> s(10001);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::cos(2 * std::numbers::pi * static_cast<double>(i) * dt / 10.0);
  auto p = detect_period(s, dt);
  REQUIRE(p);
  CHECK_THAT(*p, WithinRel(10.0, 1e-5));

  for (std::size_t i = 0; i < s.size(); ++i) s[i] = 3.0 + 1e-12 * std::sin(static_cast<double>(i));
  CHECK_FALSE(detect_period(s, dt));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (auto& v : s) v = n(rng);
  CHECK_FALSE(detect_period(s, dt));

  std::vector<double> few{0.0, 1.0, 0.0, 1.0};
  CHECK_FALSE(detect_period(few, dt));
}
