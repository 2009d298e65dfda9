#include <doctest.h>

#include <cmath>

#include "freeconv/errors.hpp"
#include "freeconv/rng.hpp"
#include "freeconv/subordination.hpp"

using namespace freeconv;

namespace {

// m of semicircle(1) [+] semicircle(1) = semicircle of variance 2.
Complex semi2_m(Complex z) {
  const Complex s = std::sqrt(z * z - 8.0);
  const Complex m = (-z + s) / 4.0;
  return m.imag() > 0.0 ? m : (-z - s) / 4.0;
}

const SpectralMeasure kSemi = SpectralMeasure::semicircle(1.0);
const SpectralMeasure kUni = SpectralMeasure::uniform(0.0, 1.0);
const SpectralMeasure kBern = SpectralMeasure::two_atoms(-1.0, 1.0);

}  // namespace

TEST_CASE("translation by a point mass") {
  const auto pm = SpectralMeasure::point_mass(1.0);
  const Complex z(0.0, 1.0);
  const SubordinationPair p = solve_subordination(pm, kUni, z);
  CHECK(p.converged);
  CHECK(std::abs(p.omega1 - (z - 1.0)) < 1e-12);
  const TransformValue tv = kUni.transform(z - 1.0);
  CHECK(std::abs(p.omega2 - (1.0 + tv.F)) < 1e-12);
  CHECK(std::abs(p.m - tv.m) < 1e-12);
}

TEST_CASE("semicircle pair closed form") {
  const Complex z(0.0, 1.0);
  const SubordinationPair p = solve_subordination(kSemi, kSemi, z);
  CHECK(p.converged);
  CHECK(std::abs(p.omega1 - Complex(0.0, 1.5)) < 1e-11);
  CHECK(std::abs(p.omega2 - Complex(0.0, 1.5)) < 1e-11);
  CHECK(std::abs(p.m - Complex(0.0, 0.5)) < 1e-11);

  for (Complex zz : {Complex(1.0, 0.5), Complex(-2.0, 0.1), Complex(0.3, 2.0)}) {
    CHECK(std::abs(free_conv_m(kSemi, kSemi, zz) - semi2_m(zz)) < 1e-10);
  }
}

TEST_CASE("swap symmetry") {
  const Complex z(0.4, 0.3);
  const SubordinationPair p12 = solve_subordination(kUni, kBern, z);
  const SubordinationPair p21 = solve_subordination(kBern, kUni, z);
  CHECK(std::abs(p12.omega1 - p21.omega2) < 2e-12);
  CHECK(std::abs(p12.omega2 - p21.omega1) < 2e-12);
  CHECK(std::abs(p12.m - p21.m) < 2e-12);
}

TEST_CASE("bernoulli pair gives the arcsine law") {
  // Bernoulli(+-1) [+] Bernoulli(+-1) = arcsine on [-2,2]:
  // m(2i) = i/(2 sqrt 2), branch with Im m > 0.
  const Complex z(0.0, 2.0);
  const Complex m = free_conv_m(kBern, kBern, z);
  CHECK(std::abs(m - Complex(0.0, 1.0 / (2.0 * std::sqrt(2.0)))) < 1e-11);
}

TEST_CASE("defining residuals and initialization independence") {
  const SolverConfig config;
  Philox rng(11, Philox::stream_id("subord-points"));
  for (int i = 0; i < 25; ++i) {
    const Complex z(-3.0 + 6.0 * rng.next_double(),
                    std::exp(std::log(1e-3) + rng.next_double() * std::log(2e3)));
    const SubordinationPair p = solve_subordination(kUni, kBern, z, config);
    CHECK(p.residual1 <= 2.0 * config.tolerance);
    CHECK(p.residual2 <= 2.0 * config.tolerance);
    CHECK(p.omega1.imag() >= z.imag() - 2.0 * config.tolerance);
    CHECK(p.omega2.imag() >= z.imag() - 2.0 * config.tolerance);
    const TransformValue f1 = kUni.transform(p.omega2);
    const TransformValue f2 = kBern.transform(p.omega1);
    CHECK(std::abs(f1.F - f2.F) <= 4.0 * config.tolerance);
    CHECK(std::abs(f1.m - f2.m) <= 4.0 * config.tolerance);

    // Distinct admissible starting points agree to 10 tol.
    SubordinationPair warm;
    warm.omega2 = z + Complex(0.7, 2.9);
    const SubordinationPair q = solve_subordination(kUni, kBern, z, config, &warm);
    CHECK(std::abs(p.omega1 - q.omega1) <= 10.0 * config.tolerance);
    CHECK(std::abs(p.omega2 - q.omega2) <= 10.0 * config.tolerance);
  }
}

TEST_CASE("translation covariance") {
  const Complex z(0.2, 0.8);
  for (double a : {1.0, -1.0, 0.3, -0.3}) {
    const Complex lhs = free_conv_m(kUni.shifted(a), kBern, z);
    const Complex rhs = free_conv_m(kUni, kBern, z - a);
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("dilation covariance") {
  const Complex z(0.4, 0.9);
  const double s = 2.5;
  const SubordinationPair base = solve_subordination(kUni, kBern, z);
  const SubordinationPair big =
      solve_subordination(kUni.scaled(s), kBern.scaled(s), s * z);
  CHECK(std::abs(big.omega1 - s * base.omega1) < 1e-9);
  CHECK(std::abs(big.omega2 - s * base.omega2) < 1e-9);
  CHECK(std::abs(big.m - base.m / s) < 1e-10);
}

TEST_CASE("imaginary part budget is the exact identity") {
  // Im omega1 + Im omega2 - eta = Im F(z); the C-bound form follows with
  // C = sup |F|^2/|m| ... checked with C frozen from a reference grid.
  double c_frozen = 0.0;
  for (double e : {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0}) {
    for (double eta : {1.0, 0.5, 0.1, 0.01}) {
      const SubordinationPair p = solve_subordination(kUni, kBern, Complex(e, eta));
      const Complex f = p.omega1 + p.omega2 - p.z;
      c_frozen = std::max(c_frozen, std::norm(f));
    }
  }
  for (double e : {-0.8, 0.3, 1.4}) {
    for (double eta : {1.0, 0.1, 0.01}) {
      const SubordinationPair p = solve_subordination(kUni, kBern, Complex(e, eta));
      const Complex f = p.omega1 + p.omega2 - p.z;
      const double lhs = p.omega1.imag() + p.omega2.imag();
      CHECK(lhs == doctest::Approx(eta + std::norm(f) * p.m.imag()).epsilon(1e-8));
      CHECK(lhs <= eta + 1.5 * c_frozen * p.m.imag());
    }
  }
}

TEST_CASE("derivatives against finite differences") {
  const Complex z(0.0, 1.0);
  const SubordinationPair p = solve_subordination(kSemi, kSemi, z);
  const SubordinationDerivatives d = subordination_derivatives(kSemi, kSemi, p);
  // Hand value at z = i: omega' = 5/6 from the linearized system.
  CHECK(std::abs(d.omega1 - 5.0 / 6.0) < 1e-9);
  const SubordinationDerivatives fd = subordination_derivatives_fd(kSemi, kSemi, p);
  CHECK(std::abs(d.omega1 - fd.omega1) < 1e-6);
  CHECK(std::abs(d.omega2 - fd.omega2) < 1e-6);
  CHECK(std::abs(d.m - fd.m) < 1e-6);

  // delta_a [+] mu: omega1' = 1 exactly.
  const SubordinationPair q =
      solve_subordination(SpectralMeasure::point_mass(0.7), kUni, Complex(0.1, 0.9));
  const SubordinationDerivatives dq =
      subordination_derivatives(SpectralMeasure::point_mass(0.7), kUni, q);
  CHECK(std::abs(dq.omega1 - 1.0) < 1e-10);
}

TEST_CASE("continuation sweep") {
  std::vector<Complex> ladder;
  for (double eta = 2.0; eta >= 1e-6; eta *= 0.5) ladder.emplace_back(0.0, eta);
  const auto pairs = continuation_solve(kSemi, kSemi, ladder);
  REQUIRE(pairs.size() == ladder.size());
  for (const auto& p : pairs) {
    CHECK(p.converged);
    CHECK(p.residual1 <= 1e-12);
    CHECK(p.residual2 <= 1e-12);
    CHECK(std::abs(p.m - semi2_m(p.z)) < 1e-9);
  }

  // Single point behaves like a plain solve.
  const auto single = continuation_solve(kSemi, kSemi, {Complex(0.0, 2.0)});
  const auto direct = solve_subordination(kSemi, kSemi, Complex(0.0, 2.0));
  CHECK(std::abs(single[0].m - direct.m) < 1e-13);

  // Ascending ladders violate the contract.
  CHECK_THROWS_AS(
      continuation_solve(kSemi, kSemi, {Complex(0.0, 2.0), Complex(0.0, 3.0)}),
      freeconv::argument_error);
  CHECK_THROWS_AS(continuation_solve(kSemi, kSemi, {Complex(0.0, 1.0)}),
                  freeconv::argument_error);
}

TEST_CASE("boundary values") {
  // Far below the support: real analyticity.
  const SubordinationPair far = boundary_values(kUni, kUni, -5.0);
  CHECK(std::fabs(far.m.imag()) <= 1e-8);

  // semicircle pair at 0: Im m = sqrt(2)/2.
  const SubordinationPair mid = boundary_values(kSemi, kSemi, 0.0);
  CHECK(mid.m.imag() == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-8));
  CHECK(mid.extrapolation_error < 1e-6);

  // Bernoulli pair at 0: arcsine density gives Im m = 1/2.
  const SubordinationPair bern = boundary_values(kBern, kBern, 0.0);
  CHECK(bern.m.imag() == doctest::Approx(0.5).epsilon(1e-8));
}
