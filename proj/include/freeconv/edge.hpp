#pragma once

#include <string>
#include <vector>

#include "freeconv/subordination.hpp"

namespace freeconv {

// First/second order stability coefficients of the subordination system.
struct StabilityTriple {
  Complex z;
  Complex S;   // (F1'(omega2)-1)(F2'(omega1)-1) - 1
  Complex T1;
  Complex T2;
};

StabilityTriple stability_quantities(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                                     const SubordinationPair& pair);

struct EdgeReport {
  double E_minus = 0.0;
  double E_plus = 0.0;
  double omega1_minus = 0.0;  // omega1(E_-), real boundary value
  double omega2_minus = 0.0;
  double k0_gap1 = 0.0;  // inf supp mu2 - omega1(E_-)
  double k0_gap2 = 0.0;  // inf supp mu1 - omega2(E_-)
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double edge_equation_residual = 0.0;
  bool degenerate_point_mass = false;
  bool monotonicity_warning = false;

  // Filled by edge_expansion:
  bool has_expansion = false;
  double zpp = 0.0;                 // |ztilde''(omega2(E_-))|, curvature magnitude
  double sqrt_coefficient = 0.0;    // fitted c: |omega2(z)-omega2(E_-)| ~ c sqrt(E_- - z)
  double fit_exponent = 0.0;        // fitted power of |z - E_-| (expect 1/2)
  double density_coefficient = 0.0; // c_rho: rho(x) ~ c_rho sqrt(x - E_-)
  std::string coefficient_form;     // closed form the fit matched
};

// Locates both support endpoints of mu1 [+] mu2.  The lower edge is found by
// bracketing the sign change of S on the real axis below the support and the
// bracket is polished in omega space (where S has a simple zero), so the
// reported edge-equation residual is at rounding level.  The upper edge runs
// the same procedure on the reflected measures.
EdgeReport locate_lower_edge(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                             const SolverConfig& config = {});

// Computes the edge curvature from F', F'' at the boundary values, fits the
// square-root expansion coefficient of omega2 on a real ladder below E_- and
// cross-checks the fit against sqrt(2/zpp) (1% tolerance).
EdgeReport edge_expansion(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                          EdgeReport report, const SolverConfig& config = {});

struct ProbeRow {
  double E = 0.0;
  double eta = 0.0;
  double kappa = 0.0;
  double re_m = 0.0;
  double im_m = 0.0;
  double abs_S = 0.0;
  double abs_omega1_prime = 0.0;
  double abs_omega2_prime = 0.0;
  std::string tag;  // "vertical" | "inside" | "outside"
  bool ok = true;
};

struct ProbeGrid {
  int ladder_points = 12;
  double scale_min = 1e-4;     // smallest kappa (or eta) probed
  double scale_max = 5e-2;     // largest kappa (or eta) probed
  double outside_eta = 1e-6;   // eta for the outside Im m bound
};

struct ProbeTable {
  std::vector<ProbeRow> rows;
  double slope_abs_S = 0.0;          // |S| ~ (kappa+eta)^slope, expect 1/2
  double slope_abs_omega_prime = 0.0;  // expect -1/2
  double slope_inside_im_m = 0.0;      // expect 1/2
  double outside_max_ratio = 0.0;      // max of Im m / (eta/sqrt(kappa))
};

ProbeTable scaling_probe(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                         const EdgeReport& report, const ProbeGrid& grid = {},
                         const SolverConfig& config = {});

}  // namespace freeconv
