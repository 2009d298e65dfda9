#include "freeconv/subordination.hpp"

#include <cmath>

#include "freeconv/errors.hpp"

namespace freeconv {

namespace {

constexpr Complex kImagUnit{0.0, 1.0};

struct Residuals {
  Complex phi1, phi2;
};

Residuals residuals_at(const SpectralMeasure& mu1, const SpectralMeasure& mu2, Complex z,
                       Complex omega1, Complex omega2) {
  const Complex f1 = mu1.transform(omega2).F;
  const Complex f2 = mu2.transform(omega1).F;
  return {f1 - omega1 - omega2 + z, f2 - omega1 - omega2 + z};
}

double residual_norm(const Residuals& r) {
  return std::max(std::abs(r.phi1), std::abs(r.phi2));
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw argument_error("solver config: tolerance must be > 0");
  if (!(damping > 0.0 && damping <= 1.0))
    throw argument_error("solver config: damping must lie in (0,1]");
  if (max_iterations < 1) throw argument_error("solver config: max_iterations must be >= 1");
  if (!(eta_ladder_factor > 0.0 && eta_ladder_factor < 1.0))
    throw argument_error("solver config: eta ladder factor must lie in (0,1)");
  if (!(eta_ladder_floor > 0.0)) throw argument_error("solver config: eta floor must be > 0");
}

SubordinationPair solve_subordination(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                                      Complex z, const SolverConfig& config,
                                      const SubordinationPair* warm_start) {
  config.validate();
  if (!(z.imag() > 0.0)) throw argument_error("solve_subordination: need Im z > 0");

  // Point-mass short circuit: mu1 = delta_a gives omega1 = z - a exactly.
  if (mu1.is_point_mass() || mu2.is_point_mass()) {
    const bool first = mu1.is_point_mass();
    const double a = first ? mu1.atoms()[0].location : mu2.atoms()[0].location;
    const SpectralMeasure& other = first ? mu2 : mu1;
    const TransformValue tv = other.transform(z - a);
    SubordinationPair out;
    out.z = z;
    const Complex omega_point = z - a;
    const Complex omega_other = a + tv.F;
    out.omega1 = first ? omega_point : omega_other;
    out.omega2 = first ? omega_other : omega_point;
    out.m = tv.m;
    const Residuals r = residuals_at(mu1, mu2, z, out.omega1, out.omega2);
    out.residual1 = std::abs(r.phi1);
    out.residual2 = std::abs(r.phi2);
    out.iterations = 1;
    out.converged = out.residual1 <= config.tolerance && out.residual2 <= config.tolerance;
    return out;
  }

  // Fixed-point map on omega2: w -> z + H2(z + H1(w)), H_j(w) = F_j(w) - w.
  // In C^+ this composition is a self-map; damping is halved whenever the
  // step fails to contract and after 5 halvings the iteration restarts high.
  Complex w = warm_start ? warm_start->omega2 : z + kImagUnit;
  if (!(w.imag() > 0.0)) w = z + kImagUnit;
  double damping = config.damping;
  int halvings = 0;
  double prev_step = std::numeric_limits<double>::infinity();
  int used_iterations = 0;
  const double eta = z.imag();

  auto fp_step = [&](Complex cur) {
    const Complex omega1 = z + mu1.transform(cur).F - cur;
    return z + mu2.transform(omega1).F - omega1;
  };

  Complex best_w = w;
  double best_step = std::numeric_limits<double>::infinity();

  for (int it = 0; it < config.max_iterations; ++it) {
    ++used_iterations;
    const Complex next = fp_step(w);
    const double step = std::abs(next - w);
    Complex cand = w + damping * (next - w);
    if (cand.imag() <= 0.0) {
      if (cand.imag() < -config.tolerance)
        throw solver_error("instability", "fixed-point iterate left the upper half plane");
      cand = Complex(cand.real(), 0.5 * eta);
    }
    if (step < best_step) {
      best_step = step;
      best_w = cand;
    }
    w = cand;
    if (step <= 0.5 * config.tolerance) break;
    if (step > prev_step) {
      damping *= 0.5;
      if (++halvings > 5) {
        w = z + Complex(0.0, 2.0);
        damping = config.damping;
        halvings = 0;
        prev_step = std::numeric_limits<double>::infinity();
        continue;
      }
    }
    prev_step = step;
  }
  if (!(best_step < std::numeric_limits<double>::infinity())) best_w = w;

  Complex omega2 = w;
  Complex omega1 = z + mu1.transform(omega2).F - omega2;
  Residuals res = residuals_at(mu1, mu2, z, omega1, omega2);

  // Newton polish on the 2x2 system with rows (-1, F1'(omega2)-1) and
  // (F2'(omega1)-1, -1); supplies the quadratic tail the fixed point lacks.
  if (config.newton_polish) {
    for (int it = 0; it < 30 && residual_norm(res) > 0.25 * config.tolerance; ++it) {
      ++used_iterations;
      const TransformValue t1 = mu1.transform(omega2);
      const TransformValue t2 = mu2.transform(omega1);
      const Complex a12 = t1.F1 - 1.0;
      const Complex a21 = t2.F1 - 1.0;
      const Complex det = 1.0 - a12 * a21;  // det J = -S
      if (std::abs(det) < 1e-14) break;
      // J = [[-1, a12],[a21, -1]], solve J * delta = -phi.
      const Complex d1 = (res.phi1 + a12 * res.phi2) / det;
      const Complex d2 = (res.phi2 + a21 * res.phi1) / det;
      double scale = 1.0;
      for (int back = 0; back < 40; ++back) {
        const Complex n1 = omega1 + scale * d1;
        const Complex n2 = omega2 + scale * d2;
        if (n1.imag() <= 0.0 || n2.imag() <= 0.0) {
          scale *= 0.5;
          continue;
        }
        const Residuals next = residuals_at(mu1, mu2, z, n1, n2);
        if (residual_norm(next) < residual_norm(res) || scale < 1e-6) {
          omega1 = n1;
          omega2 = n2;
          res = next;
          break;
        }
        scale *= 0.5;
      }
    }
  }

  SubordinationPair out;
  out.z = z;
  out.omega1 = omega1;
  out.omega2 = omega2;
  out.m = mu1.transform(omega2).m;
  out.residual1 = std::abs(res.phi1);
  out.residual2 = std::abs(res.phi2);
  out.iterations = used_iterations;
  out.converged = out.residual1 <= config.tolerance && out.residual2 <= config.tolerance;
  if (!out.converged) {
    throw solver_error("diverged",
                       "subordination iteration did not reach tolerance " +
                           std::to_string(config.tolerance) + " after " +
                           std::to_string(used_iterations) + " iterations (residuals " +
                           std::to_string(out.residual1) + ", " +
                           std::to_string(out.residual2) + ")");
  }
  if (out.omega1.imag() < z.imag() - 10.0 * config.tolerance ||
      out.omega2.imag() < z.imag() - 10.0 * config.tolerance)
    throw solver_error("instability", "converged pair violates Im omega >= Im z");
  return out;
}

Complex free_conv_m(const SpectralMeasure& mu1, const SpectralMeasure& mu2, Complex z,
                    const SolverConfig& config) {
  const SubordinationPair p = solve_subordination(mu1, mu2, z, config);
  const Complex m_a = mu1.transform(p.omega2).m;
  const Complex m_b = mu2.transform(p.omega1).m;
  const Complex m_sum = -1.0 / (p.omega1 + p.omega2 - z);
  const double scale = std::max(1.0, std::abs(m_a));
  const double tol = 1e3 * config.tolerance * scale + 1e-13 * scale;
  if (std::abs(m_a - m_b) > tol || std::abs(m_a - m_sum) > tol)
    throw solver_error("inconsistent",
                       "the two transform routes for m disagree beyond tolerance");
  return m_a;
}

SubordinationDerivatives subordination_derivatives(const SpectralMeasure& mu1,
                                                   const SpectralMeasure& mu2,
                                                   const SubordinationPair& pair) {
  if (!pair.converged)
    throw argument_error("subordination_derivatives: pair is not converged");
  const TransformValue t1 = mu1.transform(pair.omega2);
  const TransformValue t2 = mu2.transform(pair.omega1);
  const Complex a12 = 1.0 - t1.F1;  // row (1, 1-F1'(omega2))
  const Complex a21 = 1.0 - t2.F1;  // row (1-F2'(omega1), 1)
  const Complex det = 1.0 - a12 * a21;  // equals -S
  if (std::abs(det) < 1e-10)
    throw solver_error("singular-jacobian",
                       "|S| below 1e-10; use the finite-difference fallback near the edge");
  SubordinationDerivatives d;
  d.omega1 = (1.0 - a12) / det;
  d.omega2 = (1.0 - a21) / det;
  d.m = t1.m1 * d.omega2;
  return d;
}

SubordinationDerivatives subordination_derivatives_fd(const SpectralMeasure& mu1,
                                                      const SpectralMeasure& mu2,
                                                      const SubordinationPair& pair,
                                                      const SolverConfig& config) {
  const double h = std::max(1e-7, pair.z.imag() / 100.0);
  const SubordinationPair plus =
      solve_subordination(mu1, mu2, pair.z + Complex(h, 0.0), config, &pair);
  const SubordinationPair minus =
      solve_subordination(mu1, mu2, pair.z - Complex(h, 0.0), config, &pair);
  SubordinationDerivatives d;
  d.omega1 = (plus.omega1 - minus.omega1) / (2.0 * h);
  d.omega2 = (plus.omega2 - minus.omega2) / (2.0 * h);
  d.m = (plus.m - minus.m) / (2.0 * h);
  return d;
}

std::vector<SubordinationPair> continuation_solve(const SpectralMeasure& mu1,
                                                  const SpectralMeasure& mu2,
                                                  const std::vector<Complex>& points,
                                                  const SolverConfig& config) {
  if (points.empty()) return {};
  for (std::size_t i = 1; i < points.size(); ++i) {
    const bool ok = points[i].imag() < points[i - 1].imag() ||
                    (points[i].imag() == points[i - 1].imag() &&
                     points[i].real() >= points[i - 1].real());
    if (!ok)
      throw argument_error(
          "continuation_solve: points must descend in Im z (ties ordered by Re z)");
  }
  if (!(points.front().imag() >= 2.0))
    throw argument_error("continuation_solve: sweep must start at Im z >= 2");

  std::vector<SubordinationPair> out;
  out.reserve(points.size());
  const SubordinationPair* warm = nullptr;
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      out.push_back(solve_subordination(mu1, mu2, points[i], config, warm));
    } catch (const solver_error& e) {
      throw solver_error(e.kind(), "sweep failed at point index " + std::to_string(i) +
                                       " (z = " + std::to_string(points[i].real()) + "+" +
                                       std::to_string(points[i].imag()) + "i): " + e.what());
    }
    warm = &out.back();
  }
  return out;
}

namespace {

// Extrapolates a geometric eta ladder value sequence to eta = 0 using the
// empirical contraction ratio of the last differences.
struct Extrapolated {
  Complex value;
  double error;
};

Extrapolated richardson(Complex f1, Complex f2, Complex f3) {
  const Complex d1 = f2 - f1;
  const Complex d2 = f3 - f2;
  const double scale = std::max({1.0, std::abs(f3)});
  if (std::abs(d2) <= 1e-14 * scale) {
    return {f3, std::abs(d2) + 1e-15 * scale};
  }
  const Complex rho = d2 / d1;
  if (!(std::abs(rho) < 0.97)) {
    // No contraction visible; the ladder has not settled.
    return {f3, std::numeric_limits<double>::infinity()};
  }
  const Complex corr = d2 * rho / (1.0 - rho);
  const double err = std::abs(corr) * (std::abs(rho) / (1.0 - std::abs(rho))) + 1e-15 * scale;
  return {f3 + corr, err};
}

}  // namespace

SubordinationPair boundary_values(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                                  double x, const SolverConfig& config,
                                  const SubordinationPair* warm_start) {
  config.validate();
  std::vector<double> ladder;
  for (double eta = config.eta_ladder_start; eta > config.eta_ladder_floor;
       eta *= config.eta_ladder_factor)
    ladder.push_back(eta);
  ladder.push_back(config.eta_ladder_floor);
  if (ladder.size() < 4)
    throw argument_error("boundary_values: eta ladder too short for extrapolation");

  std::vector<SubordinationPair> tail;
  SubordinationPair prev;
  const SubordinationPair* warm = warm_start;
  for (double eta : ladder) {
    prev = solve_subordination(mu1, mu2, Complex(x, eta), config, warm);
    warm = &prev;
    tail.push_back(prev);
    if (tail.size() > 3) tail.erase(tail.begin());
  }

  const auto eo1 = richardson(tail[0].omega1, tail[1].omega1, tail[2].omega1);
  const auto eo2 = richardson(tail[0].omega2, tail[1].omega2, tail[2].omega2);
  const auto em = richardson(tail[0].m, tail[1].m, tail[2].m);
  const double err = std::max({eo1.error, eo2.error, em.error});
  if (!std::isfinite(err))
    throw solver_error("boundary-extension",
                       "eta ladder not contracting at x = " + std::to_string(x));

  SubordinationPair out = tail.back();
  out.z = Complex(x, 0.0);
  out.omega1 = eo1.value;
  out.omega2 = eo2.value;
  out.m = em.value;
  out.extrapolation_error = err;
  return out;
}

}  // namespace freeconv
