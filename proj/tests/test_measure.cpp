#include <doctest.h>

#include <cmath>
#include <complex>

#include "freeconv/errors.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/rng.hpp"

using namespace freeconv;
using namespace std::complex_literals;

namespace {

// Closed-form oracles used throughout: branch fixed by Im m > 0 on C^+.
Complex semicircle_m(Complex z) {
  const Complex s = std::sqrt(z * z - 4.0);
  const Complex m = (-z + s) / 2.0;
  return m.imag() > 0.0 ? m : (-z - s) / 2.0;
}

Complex uniform01_m(Complex z) { return std::log(1.0 - z) - std::log(-z); }

}  // namespace

TEST_CASE("point mass transform") {
  const auto mu = SpectralMeasure::point_mass(0.0);
  const TransformValue tv = mu.transform(1.0i);
  CHECK(std::abs(tv.m - 1.0i) < 1e-15);   // m = 1/(0 - i) = i
  CHECK(std::abs(tv.F - 1.0i) < 1e-15);   // F = z - a = i
  CHECK(std::abs(tv.F1 - 1.0) < 1e-15);
  CHECK(std::abs(tv.F2) < 1e-15);
}

TEST_CASE("semicircle transform against the closed form") {
  const auto mu = SpectralMeasure::semicircle(1.0);
  const TransformValue tv = mu.transform(1.0i);
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  CHECK(tv.m.real() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(tv.m.imag() == doctest::Approx(golden).epsilon(1e-11));

  for (Complex z : {Complex(0.3, 0.5), Complex(-1.2, 0.05), Complex(2.5, 1.0)}) {
    const TransformValue t = mu.transform(z);
    CHECK(std::abs(t.m - semicircle_m(z)) < 1e-9);
  }
  CHECK(mu.density(0.0) == doctest::Approx(1.0 / M_PI).epsilon(1e-13));
}

TEST_CASE("uniform transform against the log oracle") {
  const auto mu = SpectralMeasure::uniform(0.0, 1.0);
  const Complex z(0.5, 1.0);
  const TransformValue tv = mu.transform(z);
  CHECK(std::abs(tv.m - uniform01_m(z)) < 1e-11);
}

TEST_CASE("arcsine density value") {
  const auto mu = SpectralMeasure::arcsine(-2.0, 2.0);
  CHECK(mu.density(0.0) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-13));
}

TEST_CASE("transform rejects points touching the support") {
  const auto mu = SpectralMeasure::uniform(0.0, 1.0);
  CHECK_THROWS_AS(mu.transform(Complex(0.5, 0.0)), freeconv::domain_error);
  CHECK_THROWS_AS(mu.transform(Complex(1.0 + 1e-10, 0.0)), freeconv::domain_error);
  CHECK_NOTHROW(mu.transform(Complex(-1e-6, 0.0)));
  CHECK_THROWS_AS(mu.transform(Complex(0.5, -0.1)), freeconv::domain_error);
}

TEST_CASE("f_prime_gap") {
  CHECK(f_prime_gap(SpectralMeasure::point_mass(2.0), -1.0) == 0.0);

  // Two atoms at +-1, x = -3: hand value 1/9.
  const auto two = SpectralMeasure::two_atoms(-1.0, 1.0);
  CHECK(f_prime_gap(two, -3.0) == doctest::Approx(1.0 / 9.0).epsilon(1e-13));

  // Uniform[0,1] at x = -1: quadrature oracle m' / m^2 - 1 from the log form.
  const auto uni = SpectralMeasure::uniform(0.0, 1.0);
  const double m = std::log(2.0);        // m(-1) = log((1+1)/1)
  const double m1 = 1.0 / 2.0;           // int dx/(x+1)^2 over [0,1]
  const double expected = m1 / (m * m) - 1.0;
  CHECK(f_prime_gap(uni, -1.0) == doctest::Approx(expected).epsilon(1e-11));
  CHECK(f_prime_gap(uni, -1.0) > 0.0);

  CHECK_THROWS_AS(f_prime_gap(uni, 0.5), freeconv::argument_error);
}

TEST_CASE("quantiles") {
  const auto semi = SpectralMeasure::semicircle(1.0);
  CHECK(semi.quantile(0.5) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(semi.quantile(1.0) == doctest::Approx(2.0));

  // Closed-form semicircle CDF oracle via bisection on it.
  auto cdf = [](double x) {
    return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * M_PI) + std::asin(x / 2.0) / M_PI;
  };
  double lo = -2.0, hi = 2.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) >= 0.25 ? hi : lo) = mid;
  }
  CHECK(semi.quantile(0.25) == doctest::Approx(hi).epsilon(1e-9));

  CHECK_THROWS_AS(semi.quantile(0.0), freeconv::argument_error);
  CHECK_THROWS_AS(semi.quantile(1.5), freeconv::argument_error);
}

TEST_CASE("discretize") {
  const auto uni = SpectralMeasure::uniform(0.0, 1.0);
  const auto two = discretize(uni, 2);
  REQUIRE(two.atoms().size() == 2);
  CHECK(two.atoms()[0].location == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(two.atoms()[1].location == doctest::Approx(0.75).epsilon(1e-12));

  const auto semi100 = discretize(SpectralMeasure::semicircle(1.0), 100);
  CHECK(levy_distance(semi100, SpectralMeasure::semicircle(1.0)) <= 0.01);

  // Mean tracking within C/N.
  const auto mu = SpectralMeasure::power_law(-1.0, 2.0, 0.3, -0.2);
  const auto disc = discretize(mu, 400);
  CHECK(std::fabs(disc.mean() - mu.mean()) < 4.0 / 400.0);

  // Atom range inside the support.
  CHECK(disc.atoms().front().location > mu.inf_support());
  CHECK(disc.atoms().back().location < mu.sup_support());

  CHECK_THROWS_AS(discretize(uni, 1), freeconv::argument_error);
}

TEST_CASE("levy distance") {
  const auto uni = SpectralMeasure::uniform(0.0, 1.0);
  CHECK(levy_distance(uni, uni) == doctest::Approx(0.0).epsilon(1e-8));

  // d_L(delta_0, delta_a): brute-force feasibility sweep over an eps grid.
  const auto d0 = SpectralMeasure::point_mass(0.0);
  const auto da = SpectralMeasure::point_mass(0.125);
  const double d = levy_distance(d0, da);
  double brute = 1.0;
  for (double eps = 1e-4; eps <= 0.5; eps += 1e-4) {
    bool feasible = true;
    for (double x = -0.5; x <= 0.7; x += 1e-3) {
      const double f1 = x >= 0.0 ? 1.0 : 0.0;
      const double f2 = x >= 0.125 ? 1.0 : 0.0;
      const double f1lo = x - eps >= 0.0 ? 1.0 : 0.0;
      const double f1hi = x + eps >= 0.0 ? 1.0 : 0.0;
      if (!(f1lo - eps <= f2 && f2 <= f1hi + eps)) feasible = false;
      const double f2lo = x - eps >= 0.125 ? 1.0 : 0.0;
      const double f2hi = x + eps >= 0.125 ? 1.0 : 0.0;
      if (!(f2lo - eps <= f1 && f1 <= f2hi + eps)) feasible = false;
    }
    if (feasible) {
      brute = eps;
      break;
    }
  }
  CHECK(d == doctest::Approx(brute).epsilon(0.02));

  CHECK(levy_distance(discretize(uni, 64), uni) <= 1.0 / 64.0 + 1e-6);
}

TEST_CASE("pick property at random points") {
  // Im m > 0 and Im F >= Im z on C^+ for every measure kind.
  const SpectralMeasure fixtures[] = {
      SpectralMeasure::semicircle(1.0), SpectralMeasure::uniform(-1.0, 1.0),
      SpectralMeasure::arcsine(0.0, 1.0), SpectralMeasure::two_atoms(-1.0, 1.0),
      SpectralMeasure::power_law(0.0, 1.0, -0.3, 0.7)};
  Philox rng(3, Philox::stream_id("pick"));
  for (const auto& mu : fixtures) {
    for (int i = 0; i < 40; ++i) {
      const double eta = std::exp(std::log(1e-6) + rng.next_double() * std::log(1e7));
      const double e = -2.5 + 5.0 * rng.next_double();
      const TransformValue tv = mu.transform(Complex(e, eta));
      CHECK(tv.m.imag() > 0.0);
      CHECK(tv.F.imag() >= eta - 1e-12 * std::max(1.0, std::abs(tv.F)));
    }
  }
}

TEST_CASE("large-eta decay and resolvent bound") {
  const SpectralMeasure fixtures[] = {SpectralMeasure::semicircle(1.0),
                                      SpectralMeasure::uniform(-1.0, 1.0),
                                      SpectralMeasure::two_atoms(-0.5, 0.5)};
  for (const auto& mu : fixtures) {
    for (double eta : {10.0, 100.0}) {
      const Complex z(0.0, eta);
      const TransformValue tv = mu.transform(z);
      CHECK(std::abs(z * tv.m + 1.0) <= 2.0 / eta);  // first-moment expansion
      CHECK(std::abs(tv.m) <= 1.0 / eta + 1e-15);
    }
  }
}

TEST_CASE("shift and scale covariance") {
  const auto mu = SpectralMeasure::power_law(0.0, 1.0, 0.5, -0.25);
  const Complex z(0.3, 0.7);
  const TransformValue base = mu.transform(z);
  const TransformValue sh = mu.shifted(2.0).transform(z + 2.0);
  CHECK(std::abs(base.m - sh.m) < 1e-11);
  const TransformValue sc = mu.scaled(3.0).transform(3.0 * z);
  CHECK(std::abs(base.m - 3.0 * sc.m) < 1e-11);
}

TEST_CASE("reference measure factory and parameter validation") {
  CHECK_NOTHROW(make_reference_measure("power_law", {0.0, 1.0, 0.0, 0.0}));
  CHECK_THROWS_AS(make_reference_measure("power_law", {0.0, 1.0, -1.5, 0.0}),
                  freeconv::argument_error);
  CHECK_THROWS_AS(make_reference_measure("nope", {}), freeconv::argument_error);

  // power_law(0,0) == uniform.
  const auto pl = make_reference_measure("power_law", {0.0, 1.0, 0.0, 0.0});
  const auto un = SpectralMeasure::uniform(0.0, 1.0);
  CHECK(std::abs(pl.transform(Complex(0.5, 1.0)).m - un.transform(Complex(0.5, 1.0)).m) <
        1e-13);
}

TEST_CASE("atomic measure invariants") {
  CHECK_THROWS_AS(SpectralMeasure::atomic({{0.0, 0.5}, {0.0, 0.5}}),
                  freeconv::argument_error);
  CHECK_THROWS_AS(SpectralMeasure::atomic({{0.0, 0.6}, {1.0, 0.6}}),
                  freeconv::argument_error);
  CHECK_THROWS_AS(SpectralMeasure::atomic({{0.0, -0.2}, {1.0, 1.2}}),
                  freeconv::argument_error);
}

TEST_CASE("discretize-quantile consistency") {
  const auto mu = SpectralMeasure::semicircle(1.0);
  const int n = 64;
  const auto disc = discretize(mu, n);
  for (int j = 8; j < n; j += 8) {
    const double q_disc = disc.quantile(static_cast<double>(j) / n);
    const double q_cont = mu.quantile(static_cast<double>(j) / n);
    const double spacing = disc.atoms()[j].location - disc.atoms()[j - 1].location;
    CHECK(std::fabs(q_disc - q_cont) <= spacing + 1e-12);
  }
}
