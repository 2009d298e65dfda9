#include "freeconv/rmt.hpp"

#include <algorithm>
#include <cmath>

#include "freeconv/errors.hpp"

namespace freeconv {

namespace {

double rel_residual(Complex lhs, Complex rhs) {
  return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

SpectralMeasure empirical_measure(const Eigen::VectorXd& values) {
  std::vector<double> v(values.data(), values.data() + values.size());
  std::sort(v.begin(), v.end());
  std::vector<Atom> atoms;
  const double w = 1.0 / static_cast<double>(v.size());
  for (double x : v) {
    if (!atoms.empty() && x - atoms.back().location <= 1e-14 * (1.0 + std::fabs(x))) {
      atoms.back().weight += w;
    } else {
      atoms.push_back({x, w});
    }
  }
  return SpectralMeasure::atomic(std::move(atoms));
}

}  // namespace

SpectralMeasure EnsembleSample::mu_a_centered() const { return empirical_measure(a_centered()); }
SpectralMeasure EnsembleSample::mu_b_centered() const { return empirical_measure(b_centered()); }

EnsembleSample assemble_and_diagonalize(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                        const Eigen::MatrixXcd& u, MatrixField field,
                                        std::uint64_t seed, bool with_vectors) {
  const int n = static_cast<int>(a.size());
  if (n < 1 || b.size() != n || u.rows() != n || u.cols() != n)
    throw argument_error("assemble_and_diagonalize: dimension mismatch");
  if ((u.adjoint() * u - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12)
    throw argument_error("assemble_and_diagonalize: u is not unitary to 1e-12");

  Eigen::MatrixXcd h = u * b.asDiagonal() * u.adjoint();
  h.diagonal() += a.cast<Complex>();
  const double herm_defect = (h - h.adjoint()).cwiseAbs().maxCoeff();
  if (herm_defect > 1e-12)
    throw solver_error("numerical-consistency",
                       "assembled matrix deviates from Hermitian by " +
                           std::to_string(herm_defect));
  h = 0.5 * (h + h.adjoint().eval());

  EnsembleSample s;
  s.n = n;
  s.a = a;
  s.b = b;
  s.u = u;
  s.field = field;
  s.seed = seed;
  s.shift_a = a.mean();
  s.shift_b = b.mean();
  s.has_vectors = with_vectors;

  if (with_vectors) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    s.eigenvalues = es.eigenvalues();
    s.eigenvectors = es.eigenvectors();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    s.eigenvalues = es.eigenvalues();
  }

  const double trace_gap = std::fabs(s.eigenvalues.sum() - a.sum() - b.sum());
  if (trace_gap > 1e-9 * n)
    throw solver_error("numerical-consistency",
                       "trace identity violated by " + std::to_string(trace_gap));
  const double lo_bound = a.minCoeff() + b.minCoeff();
  const double hi_bound = a.maxCoeff() + b.maxCoeff();
  if (s.eigenvalues(0) < lo_bound - 1e-9 || s.eigenvalues(n - 1) > hi_bound + 1e-9)
    throw solver_error("numerical-consistency", "spectrum escapes the operator bounds");
  return s;
}

GreenProbe green_probe(const EnsembleSample& sample, Complex z) {
  if (!(z.imag() > 0.0)) throw argument_error("green_probe: need Im z > 0");
  if (!sample.has_vectors)
    throw argument_error("green_probe: sample was diagonalized without eigenvectors");
  const int n = sample.n;
  const Complex zc = z - sample.total_shift();

  GreenProbe p;
  p.z = z;
  p.z_centered = zc;

  // G(zc) in the centered frame equals (H - z)^{-1} in the original frame.
  Eigen::VectorXcd inv_gap(n);
  for (int k = 0; k < n; ++k) inv_gap(k) = 1.0 / (Complex(sample.eigenvalues(k)) - z);
  const Eigen::MatrixXcd& v = sample.eigenvectors;
  p.g = v * inv_gap.asDiagonal() * v.adjoint();
  p.g_diag = p.g.diagonal();
  p.m_h = p.g_diag.mean();

  const Eigen::VectorXd ac = sample.a_centered();
  const Eigen::VectorXd bc = sample.b_centered();
  p.btg_diag.resize(n);
  Complex tr_ag = 0.0, rhs_btg = 0.0;
  for (int i = 0; i < n; ++i) {
    p.btg_diag(i) = 1.0 - (ac(i) - zc) * p.g_diag(i);
    tr_ag += ac(i) * p.g_diag(i);
    rhs_btg += p.btg_diag(i);
  }
  tr_ag /= n;
  rhs_btg /= n;
  p.tr_ag = tr_ag;

  // Independent route: the actual matrix products with B~ = U diag(b_c) U*.
  const Eigen::MatrixXcd bt = sample.u * bc.asDiagonal() * sample.u.adjoint();
  const Eigen::MatrixXcd btg = bt * p.g;
  p.tr_btg = btg.diagonal().mean();
  p.identity_residual = rel_residual(p.tr_btg, rhs_btg);
  p.tr_btg_a = (btg.diagonal().array() * ac.array().cast<Complex>()).mean();
  p.tr_btg_bt = (btg.cwiseProduct(bt.conjugate())).sum() / static_cast<double>(n);
  return p;
}

ApproxSubordination approx_subordination(const GreenProbe& probe) {
  if (std::abs(probe.m_h) < 1e-12)
    throw domain_error("approx_subordination: degenerate m_H");
  ApproxSubordination out;
  out.omega_a = probe.z_centered - probe.tr_ag / probe.m_h;
  out.omega_b = probe.z_centered - probe.tr_btg / probe.m_h;
  out.sum_rule_residual =
      rel_residual(out.omega_a + out.omega_b - probe.z_centered, -1.0 / probe.m_h);
  return out;
}

namespace {

struct IndexSplit {
  double theta;
  double h_ii;
  Eigen::VectorXcd h;
  Eigen::VectorXcd r;
  double ell;
};

IndexSplit index_split(const Eigen::MatrixXcd& u, int i) {
  const int n = static_cast<int>(u.rows());
  if (i < 0 || i >= n) throw argument_error("partial_decomposition: index out of range");
  const Complex uii = u(i, i);
  if (std::abs(uii) < 1e-14)
    throw solver_error("degenerate-pivot", "u_ii too small to define the phase");
  IndexSplit s;
  s.theta = std::arg(uii);
  const Complex phase = std::exp(Complex(0.0, -s.theta));
  s.h = phase * u.col(i);
  s.h_ii = s.h(i).real();
  Eigen::VectorXcd base = s.h;
  base(i) += 1.0;
  const double norm = base.norm();
  s.ell = std::sqrt(2.0) / norm;
  s.r = std::sqrt(2.0) / norm * base;
  return s;
}

}  // namespace

DecompositionParts partial_decomposition(const Eigen::MatrixXcd& u, int index) {
  const IndexSplit s = index_split(u, index);
  const int n = static_cast<int>(u.rows());
  DecompositionParts d;
  d.index = index;
  d.theta = s.theta;
  d.h = s.h;
  d.g = s.h;  // the direction vector; the radial part is not recoverable from U
  d.r = s.r;
  d.ell = s.ell;
  d.R = Eigen::MatrixXcd::Identity(n, n) - s.r * s.r.adjoint();
  d.u_minor = -std::exp(Complex(0.0, -s.theta)) * (d.R * u);
  return d;
}

FluctuationReport fluctuation_observables(const EnsembleSample& sample, Complex z,
                                          const SubordinationPair* pair) {
  const int n = sample.n;
  const Complex zc = z - sample.total_shift();
  if (!(z.imag() > 0.0)) throw argument_error("fluctuation_observables: need Im z > 0");

  GreenProbe probe = green_probe(sample, z);
  const Eigen::VectorXd ac = sample.a_centered();
  const Eigen::VectorXd bc = sample.b_centered();
  const Eigen::MatrixXcd bt = sample.u * bc.asDiagonal() * sample.u.adjoint();

  FluctuationReport rep;
  rep.z = z;
  rep.z_centered = zc;
  rep.n = n;
  rep.eta = z.imag();
  rep.m_h = probe.m_h;
  rep.tr_btg = probe.tr_btg;
  rep.tr_ag = probe.tr_ag;
  rep.res_btg = probe.identity_residual;

  // Per-index S, T through the single-column splits.
  rep.S.resize(n);
  rep.S_ring.resize(n);
  rep.T.resize(n);
  rep.T_ring.resize(n);
  for (int i = 0; i < n; ++i) {
    const IndexSplit s = index_split(sample.u, i);
    const Eigen::VectorXcd w = probe.g.col(i);
    const Complex t_i = s.h.dot(w);  // h* G e_i
    const Eigen::VectorXcd v1 = w - s.r * s.r.dot(w);
    const Eigen::VectorXcd v2 = bt * v1;
    const Eigen::VectorXcd v3 = v2 - s.r * s.r.dot(v2);
    const Complex s_i = s.h.dot(v3);
    rep.T(i) = t_i;
    rep.S(i) = s_i;
    rep.T_ring(i) = t_i - s.h_ii * probe.g_diag(i);
    rep.S_ring(i) = s_i - s.h_ii * bc(i) * probe.g_diag(i);
  }

  // Q, Upsilon, P, K and the linear identity among them.
  rep.Q.resize(n);
  rep.P.resize(n);
  rep.K.resize(n);
  rep.upsilon = probe.tr_btg - probe.tr_btg * probe.tr_btg + probe.m_h * probe.tr_btg_bt;
  const Complex upsilon_alt = probe.tr_ag * probe.tr_btg - probe.m_h * probe.tr_btg_a;
  rep.res_upsilon = rel_residual(rep.upsilon, upsilon_alt);
  double max_k_res = 0.0;
  Complex q_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const Complex g_ii = probe.g_diag(i);
    const Complex btg_ii = probe.btg_diag(i);
    const Complex q_i = btg_ii * probe.m_h - g_ii * probe.tr_btg;
    const Complex t_i = rep.T(i);
    const Complex k_i =
        t_i + (bc(i) * t_i + btg_ii) * probe.m_h - (g_ii + t_i) * probe.tr_btg;
    const Complex k_lin = (1.0 + bc(i) * probe.m_h - probe.tr_btg) * t_i + q_i;
    max_k_res = std::max(max_k_res, rel_residual(k_i, k_lin));
    rep.Q(i) = q_i;
    rep.K(i) = k_i;
    rep.P(i) = q_i + (g_ii + t_i) * rep.upsilon;
    q_sum += q_i;
  }
  rep.res_k_identity = max_k_res;
  rep.res_q_sum = std::abs(q_sum) / static_cast<double>(n);

  // Approximate subordination and the Phi functions of the centered pair.
  const ApproxSubordination ap = approx_subordination(probe);
  rep.omega_a_c = ap.omega_a;
  rep.omega_b_c = ap.omega_b;
  rep.res_sum_rule = ap.sum_rule_residual;

  const SpectralMeasure mu_a = sample.mu_a_centered();
  const SpectralMeasure mu_b = sample.mu_b_centered();
  const TransformValue fa_at_obc = mu_a.transform(rep.omega_b_c);
  const TransformValue fb_at_oac = mu_b.transform(rep.omega_a_c);
  rep.phi1_c = fa_at_obc.F - rep.omega_a_c - rep.omega_b_c + zc;
  rep.phi2_c = fb_at_oac.F - rep.omega_a_c - rep.omega_b_c + zc;

  // Weighted representations.  The derivative factors use the true
  // subordination functions when a pair is supplied and the approximate ones
  // otherwise; the identities hold either way because the same factor enters
  // the weights.
  Complex fa_prime, fb_prime;
  if (pair) {
    if (std::abs(pair->z - zc) > 1e-9)
      throw argument_error(
          "fluctuation_observables: supplied pair was not solved at the centered z");
    fa_prime = mu_a.transform(pair->omega2).F1;
    fb_prime = mu_b.transform(pair->omega1).F1;
    rep.has_pair = true;
    rep.lambda_a = rep.omega_a_c - pair->omega1;
    rep.lambda_b = rep.omega_b_c - pair->omega2;
    double ld = 0.0;
    for (int i = 0; i < n; ++i)
      ld = std::max(ld, std::abs(probe.g_diag(i) - 1.0 / (ac(i) - pair->omega2)));
    rep.lambda_d = ld;
  } else {
    fa_prime = fa_at_obc.F1;
    fb_prime = fb_at_oac.F1;
  }
  rep.z1 = rep.phi1_c + (fa_prime - 1.0) * rep.phi2_c;
  rep.z2 = rep.phi2_c + (fb_prime - 1.0) * rep.phi1_c;

  const Complex m2 = rep.m_h * rep.m_h;
  rep.d1.resize(n);
  rep.d2.resize(n);
  for (int i = 0; i < n; ++i) {
    const Complex da = ac(i) - rep.omega_b_c;
    const Complex db = bc(i) - rep.omega_a_c;
    if (std::abs(da) < 1e-10 || std::abs(db) < 1e-10)
      throw solver_error("weight-singularity",
                         "a_i - omega_B^c (or b_i - omega_A^c) vanishes at index " +
                             std::to_string(i));
    rep.d1(i) = -fa_at_obc.F / m2 / da;
    rep.d2(i) = -(fa_prime - 1.0) * fb_at_oac.F / m2 / db;
  }

  // Swapped ensemble: calG = U* G U, tilde A calG = U*(A G)U.
  const Eigen::MatrixXcd gu = probe.g * sample.u;
  const Eigen::MatrixXcd agu = ac.asDiagonal() * gu;
  Eigen::VectorXcd calg_diag(n), atg_diag(n);
  for (int i = 0; i < n; ++i) {
    calg_diag(i) = sample.u.col(i).dot(gu.col(i));
    atg_diag(i) = sample.u.col(i).dot(agu.col(i));
  }
  const Complex tr_calg = calg_diag.mean();
  const Complex tr_atg = atg_diag.mean();
  rep.Qc.resize(n);
  for (int i = 0; i < n; ++i)
    rep.Qc(i) = atg_diag(i) * tr_calg - calg_diag(i) * tr_atg;

  // Identity residuals for the weighted sums.
  Complex phi1_weighted = 0.0, z1_weighted = 0.0, z2_weighted = 0.0;
  for (int i = 0; i < n; ++i) {
    phi1_weighted += rep.d1(i) * rep.Q(i);
    z1_weighted += rep.d1(i) * rep.Q(i) + rep.d2(i) * rep.Qc(i);
    const Complex dt1 = -fb_at_oac.F / m2 / (bc(i) - rep.omega_a_c);
    const Complex dt2 = -(fb_prime - 1.0) * fa_at_obc.F / m2 / (ac(i) - rep.omega_b_c);
    z2_weighted += dt1 * rep.Qc(i) + dt2 * rep.Q(i);
  }
  phi1_weighted /= n;
  z1_weighted /= n;
  z2_weighted /= n;
  rep.res_phi1_weighted = rel_residual(rep.phi1_c, phi1_weighted);
  rep.res_z1_weighted = rel_residual(rep.z1, z1_weighted);
  rep.res_z2_weighted = rel_residual(rep.z2, z2_weighted);

  // Control parameters.
  const double n_eta = n * z.imag();
  rep.psi = std::sqrt(1.0 / n_eta);
  rep.pi = std::sqrt(std::max(rep.m_h.imag(), 0.0) / n_eta);
  rep.pi_i.resize(n);
  for (int i = 0; i < n; ++i)
    rep.pi_i(i) =
        std::sqrt(std::max(probe.g_diag(i).imag() + calg_diag(i).imag(), 0.0) / n_eta);
  return rep;
}

DominationReport stochastic_domination_test(const std::vector<double>& statistics,
                                            double bound, double epsilon, int n_dim) {
  if (statistics.size() < 10)
    throw argument_error("stochastic_domination_test: need at least 10 trials");
  DominationReport rep;
  rep.trials = static_cast<int>(statistics.size());
  rep.threshold = std::pow(static_cast<double>(n_dim), epsilon) * bound;
  for (double s : statistics) {
    rep.max_statistic = std::max(rep.max_statistic, s);
    if (s > rep.threshold) ++rep.exceed;
  }
  rep.pass = rep.exceed <= 0.05 * rep.trials;
  return rep;
}

}  // namespace freeconv
