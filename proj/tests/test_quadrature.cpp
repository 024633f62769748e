#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "brls/quadrature.hpp"

using Catch::Approx;
using namespace brls;

TEST_CASE("polynomials are integrated to machine precision", "[quadrature]") {
  auto f = [](double x) { return 3.0 * x * x - 2.0 * x + 1.0; };
  auto r = integrate(f, -1.0, 2.0);
  REQUIRE(r.value == Approx(9.0 - 3.0 + 3.0).epsilon(1e-14));
}

TEST_CASE("empty and reversed intervals give zero", "[quadrature]") {
  auto f = [](double x) { return x; };
  REQUIRE(integrate(f, 1.0, 1.0).value == 0.0);
  REQUIRE(integrate(f, 2.0, 1.0).value == 0.0);
}

TEST_CASE("sharp Lorentzian converges with a peak seed", "[quadrature]") {
  const double w0 = 0.35, h = 1e-4;
  auto f = [=](double x) {
    return h / ((x - w0) * (x - w0) + h * h);
  };
  QuadratureOptions opts;
  opts.seeds = {w0 - 3 * h, w0, w0 + 3 * h};
  auto r = integrate(f, 0.0, 1.0, opts);
  const double exact = std::atan((1.0 - w0) / h) + std::atan(w0 / h);
  REQUIRE(r.value == Approx(exact).epsilon(1e-9));
}

TEST_CASE("complex integrands work", "[quadrature]") {
  auto f = [](double x) {
    return std::complex<double>(std::cos(3.0 * x), std::sin(3.0 * x));
  };
  auto r = integrate(f, 0.0, 2.0);
  REQUIRE(r.value.real() == Approx(std::sin(6.0) / 3.0).margin(1e-12));
  REQUIRE(r.value.imag() == Approx((1.0 - std::cos(6.0)) / 3.0).margin(1e-12));
}

TEST_CASE("oscillatory integrand beyond the budget raises a diagnostic",
          "[quadrature]") {
  auto f = [](double x) { return std::sin(4000.0 * x); };
  QuadratureOptions opts;
  opts.abs_tol = 1e-13;
  opts.rel_tol = 1e-13;
  opts.max_intervals = 8;
  try {
    integrate(f, 0.0, 50.0, opts);
    FAIL("expected QuadratureError");
  } catch (const QuadratureError& e) {
    REQUIRE(e.achieved > e.requested);
    REQUIRE(std::string(e.what()).find("worst subinterval") !=
            std::string::npos);
  }
}

TEST_CASE("principal value of an odd pole vanishes", "[quadrature]") {
  auto f = [](double) { return 1.0; };
  auto r = integrate_pv(f, 0.0, 2.0, 1.0);
  REQUIRE(r.value == Approx(0.0).margin(1e-12));
}

TEST_CASE("principal value with asymmetric bounds", "[quadrature]") {
  // PV ∫_0^3 1/(x-1) dx = ln 2
  auto f = [](double) { return 1.0; };
  auto r = integrate_pv(f, 0.0, 3.0, 1.0);
  REQUIRE(r.value == Approx(std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("principal value of a smooth numerator", "[quadrature]") {
  // PV ∫_-1^1 e^x / x dx = 2 * Shi(1), Shi(1) = sum 1/((2k+1)!(2k+1))
  auto f = [](double x) { return std::exp(x); };
  auto r = integrate_pv(f, -1.0, 1.0, 0.0);
  REQUIRE(r.value == Approx(2.1145017507514571).epsilon(1e-10));
}

TEST_CASE("pole outside the interval is rejected", "[quadrature]") {
  auto f = [](double) { return 1.0; };
  REQUIRE_THROWS_AS(integrate_pv(f, 0.0, 1.0, 2.0), std::invalid_argument);
}
