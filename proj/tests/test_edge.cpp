#include <doctest.h>

#include <cmath>

#include "freeconv/density.hpp"
#include "freeconv/edge.hpp"
#include "freeconv/errors.hpp"
#include "freeconv/haar.hpp"
#include "freeconv/rmt.hpp"

using namespace freeconv;

namespace {
const SpectralMeasure kSemi = SpectralMeasure::semicircle(1.0);
const SpectralMeasure kUni = SpectralMeasure::uniform(0.0, 1.0);
}  // namespace

TEST_CASE("stability quantities on fixtures") {
  // Point mass kills the product: S = -1 exactly.
  const auto pm = SpectralMeasure::point_mass(0.5);
  const SubordinationPair p = solve_subordination(pm, kUni, Complex(0.2, 0.7));
  const StabilityTriple st = stability_quantities(pm, kUni, p);
  CHECK(std::abs(st.S + 1.0) < 1e-12);

  // One unit below the lower edge: S real in (-1, 0).
  const EdgeReport rep = locate_lower_edge(kUni, kUni);
  const SubordinationPair bp = boundary_values(kUni, kUni, rep.E_minus - 1.0);
  const StabilityTriple below = stability_quantities(kUni, kUni, bp);
  CHECK(below.S.real() > -1.0);
  CHECK(below.S.real() < 0.0);
  CHECK(std::fabs(below.S.imag()) < 1e-6);
}

TEST_CASE("semicircle edge closed form") {
  const EdgeReport rep = locate_lower_edge(kSemi, kSemi);
  CHECK(rep.E_minus == doctest::Approx(-2.0 * std::sqrt(2.0)).epsilon(1e-9));
  CHECK(rep.E_plus == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-9));
  CHECK(rep.edge_equation_residual <= 1e-9);
  // omega at the edge: -3/sqrt(2) by symmetry.
  CHECK(rep.omega2_minus == doctest::Approx(-3.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(rep.k0_gap1 > 0.0);
  CHECK(rep.k0_gap2 > 0.0);
}

TEST_CASE("point mass translation short-circuit") {
  const auto pm = SpectralMeasure::point_mass(1.5);
  const EdgeReport rep = locate_lower_edge(pm, kUni);
  CHECK(rep.degenerate_point_mass);
  CHECK(rep.E_minus == doctest::Approx(1.5));
  CHECK(rep.E_plus == doctest::Approx(2.5));
  CHECK_THROWS_AS(edge_expansion(pm, kUni, rep), freeconv::domain_error);
}

TEST_CASE("edge expansion semicircle") {
  EdgeReport rep = locate_lower_edge(kSemi, kSemi);
  rep = edge_expansion(kSemi, kSemi, rep);
  // ztilde'' = -4 sqrt(2): magnitude stored; coefficient sqrt(2/zpp).
  CHECK(rep.zpp == doctest::Approx(4.0 * std::sqrt(2.0)).epsilon(1e-7));
  CHECK(rep.sqrt_coefficient ==
        doctest::Approx(std::sqrt(2.0 / rep.zpp)).epsilon(0.01));
  CHECK(rep.coefficient_form == "sqrt(2/zpp)");
  CHECK(std::fabs(rep.fit_exponent - 0.5) < 0.02);
  // density coefficient: semicircle(var 2) has rho ~ 2^{1/4}/(2 pi) sqrt(kappa).
  CHECK(rep.density_coefficient ==
        doctest::Approx(std::pow(2.0, 0.25) / (2.0 * M_PI)).epsilon(1e-6));
}

TEST_CASE("uniform pair edge against a Monte Carlo oracle") {
  EdgeReport rep = locate_lower_edge(kUni, kUni);
  CHECK(rep.edge_equation_residual <= 1e-9);
  // Smallest eigenvalue of A + UBU* at N = 2000 across seeds.
  const int n = 2000;
  const SpectralMeasure mu_a = discretize(kUni, n);
  Eigen::VectorXd a(n);
  for (int i = 0; i < n; ++i) a(i) = mu_a.atoms()[i].location;
  double min_lam = 1e300;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Eigen::MatrixXcd u = sample_haar(n, seed);
    const EnsembleSample s = assemble_and_diagonalize(a, a, u, MatrixField::unitary, seed);
    min_lam = std::min(min_lam, s.eigenvalues(0));
  }
  const double slack = 5.0 * std::pow(static_cast<double>(n), -2.0 / 3.0);
  CHECK(std::fabs(min_lam - rep.E_minus) <= slack);
}

TEST_CASE("scaling probe near the lower edge") {
  EdgeReport rep = locate_lower_edge(kUni, kUni);
  rep = edge_expansion(kUni, kUni, rep);
  const ProbeTable table = scaling_probe(kUni, kUni, rep);
  CHECK(std::fabs(table.slope_abs_S - 0.5) <= 0.05);
  CHECK(std::fabs(table.slope_abs_omega_prime + 0.5) <= 0.1);
  CHECK(std::fabs(table.slope_inside_im_m - 0.5) <= 0.05);
  CHECK(table.outside_max_ratio <= 3.0);
  for (const auto& row : table.rows) CHECK(row.ok);
}

TEST_CASE("T bounded and bounded away from zero at the edge") {
  for (const auto& mu : {kSemi, kUni}) {
    const EdgeReport rep = locate_lower_edge(mu, mu);
    const SubordinationPair edge_pair =
        solve_subordination(mu, mu, Complex(rep.E_minus, 1e-7));
    const StabilityTriple st = stability_quantities(mu, mu, edge_pair);
    CHECK(std::abs(st.S) <= 1e-2);  // nearly singular at the edge
    CHECK(std::abs(st.T1) >= 1e-3);
    CHECK(std::abs(st.T1) <= 1e3);
    CHECK(std::abs(st.T2) >= 1e-3);
    CHECK(std::abs(st.T2) <= 1e3);
  }
}

TEST_CASE("finite-N subordination tracking") {
  // |omega_A - omega_alpha| <= C N^{-1} / sqrt(|z-E_-|), fitted N-slope -1.
  const EdgeReport rep = locate_lower_edge(kUni, kUni);
  const Complex z(rep.E_minus + 0.1, 1e-4);
  const SubordinationPair cont = solve_subordination(kUni, kUni, z);
  std::vector<double> log_n, log_dev;
  for (int n : {100, 400, 1600}) {
    const SpectralMeasure mu_n = discretize(kUni, n);
    const SubordinationPair disc = solve_subordination(mu_n, mu_n, z);
    const double dev = std::abs(disc.omega1 - cont.omega1);
    CHECK(dev <= 10.0 / (n * std::sqrt(std::abs(z - rep.E_minus))));
    log_n.push_back(std::log(static_cast<double>(n)));
    log_dev.push_back(std::log(dev));
  }
  const double slope = (log_dev[2] - log_dev[0]) / (log_n[2] - log_n[0]);
  CHECK(std::fabs(slope + 1.0) <= 0.15);
}

TEST_CASE("edge stability of the discretized pair") {
  // inf supp mu_A [+] mu_B does not fall far below the continuous edge.
  const EdgeReport cont = locate_lower_edge(kUni, kUni);
  for (int n : {100, 400}) {
    const SpectralMeasure mu_n = discretize(kUni, n);
    const EdgeReport disc = locate_lower_edge(mu_n, mu_n);
    CHECK(disc.E_minus >= cont.E_minus - std::pow(static_cast<double>(n), -0.8));
    CHECK(std::fabs(disc.E_minus - cont.E_minus) <= 5.0 / n);
  }
}

TEST_CASE("quantile tracking between continuous and discretized pair") {
  const int n = 400;
  const SpectralMeasure mu_n = discretize(kUni, n);
  FreeConvolution cont(kUni, kUni);
  FreeConvolution disc(mu_n, mu_n);
  const QuantileTable gamma = cont.quantiles(n);
  const QuantileTable gamma_star = disc.quantiles(n);
  const double eps_slack = std::pow(static_cast<double>(n), 0.15);
  for (int j = 1; j <= n / 10; j += 7) {
    const double bound = eps_slack * std::pow(static_cast<double>(j), -1.0 / 3.0) *
                         std::pow(static_cast<double>(n), -2.0 / 3.0);
    CHECK(std::fabs(gamma.gamma[j - 1] - gamma_star.gamma[j - 1]) <= bound);
  }
}
