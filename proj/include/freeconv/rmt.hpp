#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "freeconv/haar.hpp"
#include "freeconv/subordination.hpp"

namespace freeconv {

// Realized sample of H = A + U B U*.  Observables are evaluated in the
// trace-zero frame (a, b shifted by their means); spectra are reported in
// the original frame.  The shift is recorded so either view is available.
struct EnsembleSample {
  int n = 0;
  Eigen::VectorXd a;  // original-frame diagonal of A, ascending not required
  Eigen::VectorXd b;
  Eigen::MatrixXcd u;
  MatrixField field = MatrixField::unitary;
  std::uint64_t seed = 0;
  double shift_a = 0.0;  // mean of a (removed in the centered frame)
  double shift_b = 0.0;
  Eigen::VectorXd eigenvalues;  // original frame, ascending
  Eigen::MatrixXcd eigenvectors;  // empty unless requested
  bool has_vectors = false;

  double total_shift() const { return shift_a + shift_b; }
  Eigen::VectorXd a_centered() const { return a.array() - shift_a; }
  Eigen::VectorXd b_centered() const { return b.array() - shift_b; }
  // Centered measures for subordination-side comparisons.
  SpectralMeasure mu_a_centered() const;
  SpectralMeasure mu_b_centered() const;
};

EnsembleSample assemble_and_diagonalize(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                        const Eigen::MatrixXcd& u,
                                        MatrixField field = MatrixField::unitary,
                                        std::uint64_t seed = 0, bool with_vectors = false);

// Green function data at one spectral point (centered frame).
struct GreenProbe {
  Complex z;            // original frame
  Complex z_centered;   // z - shift_a - shift_b
  Eigen::VectorXcd g_diag;
  Eigen::VectorXcd btg_diag;  // (B~G)_ii = 1 - (a_i - z_c) G_ii
  Complex m_h;
  Complex tr_btg;       // normalized traces, centered frame
  Complex tr_ag;
  Complex tr_btg_bt;    // tr B~GB~ computed through the matrix product
  Complex tr_btg_a;
  double identity_residual = 0.0;  // traced defect of B~G = I - (A-z)G
  Eigen::MatrixXcd g;   // full Green matrix
};

GreenProbe green_probe(const EnsembleSample& sample, Complex z);

// (omega_A^c, omega_B^c) from the probe; the exact sum rule
// omega_A^c + omega_B^c - z = -1/m_H is checked to 1e-10.
struct ApproxSubordination {
  Complex omega_a;
  Complex omega_b;
  double sum_rule_residual = 0.0;
};
ApproxSubordination approx_subordination(const GreenProbe& probe);

// Single-index split of the Haar matrix: U = -e^{i theta_i} R_i U^{<i>}.
struct DecompositionParts {
  int index = 0;
  double theta = 0.0;
  Eigen::VectorXcd g;  // unit vector e^{-i theta} u_i (the direction only)
  Eigen::VectorXcd h;
  Eigen::VectorXcd r;
  double ell = 0.0;
  Eigen::MatrixXcd R;
  Eigen::MatrixXcd u_minor;  // U^{<i>}, fixes e_i
};

DecompositionParts partial_decomposition(const Eigen::MatrixXcd& u, int index);

// Per-index and averaged fluctuation observables with their exact-identity
// residuals (all residuals are relative to max(|lhs|,|rhs|,1)).
struct FluctuationReport {
  Complex z;
  Complex z_centered;
  int n = 0;
  double eta = 0.0;

  Eigen::VectorXcd S, S_ring, T, T_ring, Q, P, K;
  Eigen::VectorXcd Qc;  // swapped-ensemble Q_i

  Complex m_h, tr_btg, tr_ag, upsilon;
  Complex omega_a_c, omega_b_c;
  Complex phi1_c, phi2_c, z1, z2;
  Eigen::VectorXcd d1, d2;  // weights for the Z1 representation

  double psi = 0.0;                // sqrt(1/(N eta))
  double pi = 0.0;                 // sqrt(Im m_H/(N eta))
  Eigen::VectorXd pi_i;

  bool has_pair = false;
  Complex lambda_a, lambda_b;      // omega^c - omega when a pair is supplied
  double lambda_d = 0.0;           // max_i |G_ii - 1/(a_i - omega_B)|

  // Exact-identity residuals (relative).
  double res_k_identity = 0.0;     // K_i vs (1 + b_i trG - trB~G) T_i + Q_i
  double res_q_sum = 0.0;          // (1/N) sum Q_i
  double res_upsilon = 0.0;        // two routes for Upsilon
  double res_phi1_weighted = 0.0;  // Phi1^c vs weighted Q sum
  double res_z1_weighted = 0.0;    // Z1 vs d1.Q + d2.Qc
  double res_z2_weighted = 0.0;
  double res_sum_rule = 0.0;       // omega_A^c + omega_B^c - z + 1/m_H
  double res_btg = 0.0;            // traced B~G identity
};

FluctuationReport fluctuation_observables(const EnsembleSample& sample, Complex z,
                                          const SubordinationPair* pair = nullptr);

// Finite-sample surrogate for stochastic domination: the fraction of trials
// with statistic > N^epsilon * bound must stay below 5%.
struct DominationReport {
  int trials = 0;
  int exceed = 0;
  double threshold = 0.0;
  double max_statistic = 0.0;
  bool pass = false;
};

DominationReport stochastic_domination_test(const std::vector<double>& statistics,
                                            double bound, double epsilon, int n_dim);

}  // namespace freeconv
