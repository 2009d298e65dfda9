#include <doctest.h>

#include <cmath>

#include "freeconv/quadrature.hpp"
#include "freeconv/rng.hpp"

using namespace freeconv;

TEST_CASE("philox known-answer vector") {
  // Reference output of philox4x32-10 with zero counter and zero key.
  const Philox::Block out = Philox::block({0u, 0u, 0u, 0u}, {0u, 0u});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("philox streams are disjoint and reproducible") {
  Philox a(42, Philox::stream_id("x"));
  Philox b(42, Philox::stream_id("x"));
  Philox c(42, Philox::stream_id("y"));
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
}

TEST_CASE("gaussian moments") {
  Philox rng(7, Philox::stream_id("gauss"));
  double s1 = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gaussian();
    s1 += g;
    s2 += g * g;
  }
  CHECK(std::fabs(s1 / n) < 0.01);
  CHECK(std::fabs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("gauss-jacobi integrates the weight exactly") {
  // Legendre case: total weight is 2.
  auto rule = quadrature::jacobi_rule(0.0, 0.0, 16);
  CHECK(rule->total_weight == doctest::Approx(2.0).epsilon(1e-14));

  // Chebyshev case (arcsine weight): total weight is pi.
  auto cheb = quadrature::jacobi_rule(-0.5, -0.5, 16);
  CHECK(cheb->total_weight == doctest::Approx(M_PI).epsilon(1e-13));

  // Semicircle-type weight (1-x)^{1/2}(1+x)^{1/2}: integral is pi/2.
  auto semi = quadrature::jacobi_rule(0.5, 0.5, 16);
  CHECK(semi->total_weight == doctest::Approx(M_PI / 2.0).epsilon(1e-13));
}

TEST_CASE("gauss-jacobi polynomial exactness") {
  // n-point rule integrates x^k (1-x)^a(1+x)^b exactly for k <= 2n-1.
  auto rule = quadrature::jacobi_rule(0.3, -0.4, 8);
  auto moment = [&](int k) {
    double s = 0.0;
    for (std::size_t i = 0; i < rule->nodes.size(); ++i)
      s += rule->weights[i] * std::pow(rule->nodes[i], k);
    return s;
  };
  auto big = quadrature::jacobi_rule(0.3, -0.4, 64);
  auto moment_big = [&](int k) {
    double s = 0.0;
    for (std::size_t i = 0; i < big->nodes.size(); ++i)
      s += big->weights[i] * std::pow(big->nodes[i], k);
    return s;
  };
  for (int k = 0; k <= 15; ++k)
    CHECK(moment(k) == doctest::Approx(moment_big(k)).epsilon(1e-12));
}

TEST_CASE("regularized incomplete beta") {
  using quadrature::regularized_incomplete_beta;
  // Uniform case a=b=1: I_x = x.
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-14));
  // Symmetry: I_x(a,b) = 1 - I_{1-x}(b,a).
  const double v = regularized_incomplete_beta(2.5, 0.7, 0.3);
  CHECK(v == doctest::Approx(1.0 - regularized_incomplete_beta(0.7, 2.5, 0.7)).epsilon(1e-12));
  // Arcsine distribution a=b=1/2: I_x = (2/pi) asin(sqrt(x)).
  CHECK(regularized_incomplete_beta(0.5, 0.5, 0.2) ==
        doctest::Approx(2.0 / M_PI * std::asin(std::sqrt(0.2))).epsilon(1e-12));
}
