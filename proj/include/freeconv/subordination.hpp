#pragma once

#include <optional>
#include <vector>

#include "freeconv/measure.hpp"

namespace freeconv {

struct SolverConfig {
  double tolerance = 1e-12;
  int max_iterations = 500;
  double damping = 1.0;  // in (0,1], halved on non-contraction
  bool newton_polish = true;
  double eta_ladder_factor = 0.5;
  double eta_ladder_floor = 1e-9;
  double eta_ladder_start = 1.0;

  void validate() const;
};

// Solution of the two subordination equations at one spectral point:
//   F1(omega2) = F2(omega1) = omega1 + omega2 - z,   m = m1(omega2).
struct SubordinationPair {
  Complex z;
  Complex omega1;
  Complex omega2;
  Complex m;
  double residual1 = 0.0;  // |F1(omega2) - omega1 - omega2 + z|
  double residual2 = 0.0;  // |F2(omega1) - omega1 - omega2 + z|
  int iterations = 0;
  bool converged = false;
  double extrapolation_error = 0.0;  // set by boundary_values
};

// First derivatives in z, from the linearized subordination system.
struct SubordinationDerivatives {
  Complex omega1;
  Complex omega2;
  Complex m;
};

SubordinationPair solve_subordination(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                                      Complex z, const SolverConfig& config = {},
                                      const SubordinationPair* warm_start = nullptr);

Complex free_conv_m(const SpectralMeasure& mu1, const SpectralMeasure& mu2, Complex z,
                    const SolverConfig& config = {});

// Solves the 2x2 linear system obtained by differentiating the subordination
// equations; throws solver_error("singular-jacobian") when |S| < 1e-10.
SubordinationDerivatives subordination_derivatives(const SpectralMeasure& mu1,
                                                   const SpectralMeasure& mu2,
                                                   const SubordinationPair& pair);

// Finite-difference fallback used close to the edge, step max(1e-7, eta/100).
SubordinationDerivatives subordination_derivatives_fd(const SpectralMeasure& mu1,
                                                      const SpectralMeasure& mu2,
                                                      const SubordinationPair& pair,
                                                      const SolverConfig& config = {});

// Warm-started sweep.  Points must be sorted by descending imaginary part
// (ties by real part) and start at Im z >= 2 where the iteration is
// contractive.  On failure throws solver_error carrying the failing index in
// the message; partial results are lost to the caller by design -- sweep
// callers that need partial output should catch and re-run point-wise.
std::vector<SubordinationPair> continuation_solve(const SpectralMeasure& mu1,
                                                  const SpectralMeasure& mu2,
                                                  const std::vector<Complex>& points,
                                                  const SolverConfig& config = {});

// Extension to the real axis at x: descends the eta ladder at fixed Re z and
// extrapolates (omega1, omega2, m) to eta = 0 from the last ladder values.
SubordinationPair boundary_values(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                                  double x, const SolverConfig& config = {},
                                  const SubordinationPair* warm_start = nullptr);

}  // namespace freeconv
