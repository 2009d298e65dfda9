#include "freeconv/edge.hpp"

#include <algorithm>
#include <cmath>

#include "freeconv/errors.hpp"

namespace freeconv {

StabilityTriple stability_quantities(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                                     const SubordinationPair& pair) {
  if (!pair.converged) throw argument_error("stability_quantities: pair is not converged");
  const TransformValue t1 = mu1.transform(pair.omega2);
  const TransformValue t2 = mu2.transform(pair.omega1);
  const Complex g1 = t1.F1 - 1.0;
  const Complex g2 = t2.F1 - 1.0;
  StabilityTriple out;
  out.z = pair.z;
  out.S = g1 * g2 - 1.0;
  out.T1 = 0.5 * (t1.F2 * g2 * g2 + t2.F2 * g1);
  out.T2 = 0.5 * (t2.F2 * g1 * g1 + t1.F2 * g2);
  return out;
}

namespace {

// Real-axis state of the subordination curve parametrized by omega = omega2
// running below supp mu1.  omega1 = F2^{-1}(F1(omega)) and
// z = omega1 + omega - F1(omega).
struct RealEdgeState {
  double omega2 = 0.0;
  double omega1 = 0.0;
  double z = 0.0;
  double S = 0.0;
  TransformValue t1, t2;
};

double invert_F_real(const SpectralMeasure& mu, double y, double seed) {
  // Solve F_mu(v) = y for real v below the support; F is strictly increasing
  // there (F' > 1).
  const double edge = mu.inf_support();
  double hi = edge - 1e-8 * (1.0 + std::fabs(edge));
  double lo = std::min(seed, edge - 0.5);
  auto F = [&](double v) { return mu.transform(Complex(v, 0.0)).F.real(); };
  double step = std::max(1.0, std::fabs(y));
  int guard = 0;
  while (F(lo) > y) {
    lo -= step;
    step *= 2.0;
    if (++guard > 100) throw solver_error("edge-not-found", "cannot bracket F inverse");
  }
  if (F(hi) < y)
    throw solver_error("edge-not-found", "F inverse target above the attainable range");
  // Newton with bisection fallback.
  double v = std::min(std::max(seed, lo), hi);
  for (int it = 0; it < 200; ++it) {
    const TransformValue tv = mu.transform(Complex(v, 0.0));
    const double f = tv.F.real() - y;
    if (f > 0.0)
      hi = v;
    else
      lo = v;
    const double dv = f / tv.F1.real();
    double next = v - dv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - v) < 1e-15 * (1.0 + std::fabs(v))) return next;
    v = next;
  }
  return v;
}

RealEdgeState real_edge_state(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                              double omega, double omega1_seed) {
  RealEdgeState st;
  st.omega2 = omega;
  st.t1 = mu1.transform(Complex(omega, 0.0));
  st.omega1 = invert_F_real(mu2, st.t1.F.real(), omega1_seed);
  st.t2 = mu2.transform(Complex(st.omega1, 0.0));
  st.z = st.omega1 + st.omega2 - st.t1.F.real();
  st.S = (st.t1.F1.real() - 1.0) * (st.t2.F1.real() - 1.0) - 1.0;
  return st;
}

struct LowerEdgeResult {
  double E_minus, omega1, omega2, residual, bracket_lo, bracket_hi;
  bool monotonicity_warning;
};

LowerEdgeResult locate_lower_edge_impl(const SpectralMeasure& mu1,
                                       const SpectralMeasure& mu2,
                                       const SolverConfig& config) {
  const double inf1 = mu1.inf_support();
  const double inf2 = mu2.inf_support();
  const double sup_sum = mu1.sup_support() + mu2.sup_support();
  const double x_left = inf1 + inf2 - 1.0;

  // Right-march until the boundary density wakes up.
  constexpr double kImThreshold = 1e-4;
  auto boundary_im = [&](double x, const SubordinationPair** keep) -> double {
    static thread_local SubordinationPair last;
    try {
      last = boundary_values(mu1, mu2, x, config);
      if (keep) *keep = &last;
      return last.m.imag();
    } catch (const solver_error&) {
      // Very close to the edge the ladder may refuse to extrapolate; fall
      // back to the interior value at the ladder floor.
      last = solve_subordination(mu1, mu2, Complex(x, config.eta_ladder_floor), config);
      if (keep) *keep = &last;
      return last.m.imag();
    }
  };

  double x_lo = x_left;
  double x_hi = x_left;
  double step = 0.125 * (sup_sum - (inf1 + inf2) + 2.0);
  bool found = false;
  const SubordinationPair* below_pair = nullptr;
  SubordinationPair below_anchor;  // last comfortably-below-edge pair
  std::vector<double> re_omega1_scan, re_omega2_scan;
  for (double x = x_left; x <= sup_sum + 1.0 + step; x += step) {
    const SubordinationPair* p = nullptr;
    const double im = boundary_im(x, &p);
    if (im > kImThreshold) {
      x_hi = x;
      found = true;
      break;
    }
    x_lo = x;
    below_anchor = *p;
    below_pair = &below_anchor;
    re_omega1_scan.push_back(p->omega1.real());
    re_omega2_scan.push_back(p->omega2.real());
  }
  if (!found)
    throw solver_error("edge-not-found",
                       "no boundary Im m above threshold on [" + std::to_string(x_left) +
                           ", " + std::to_string(sup_sum + 1.0) + "]");

  bool monotone_warned = false;
  for (std::size_t i = 1; i < re_omega1_scan.size(); ++i) {
    if (re_omega1_scan[i] < re_omega1_scan[i - 1] - 1e-10 ||
        re_omega2_scan[i] < re_omega2_scan[i - 1] - 1e-10)
      monotone_warned = true;
  }

  const double bracket_lo = x_lo, bracket_hi = x_hi;
  while (x_hi - x_lo > 1e-10) {
    const double mid = 0.5 * (x_lo + x_hi);
    const SubordinationPair* p = nullptr;
    if (boundary_im(mid, &p) > kImThreshold) {
      x_hi = mid;
    } else {
      x_lo = mid;
      below_anchor = *p;
      below_pair = &below_anchor;
    }
  }
  if (!below_pair)
    throw solver_error("edge-not-found", "bisection never classified a point below edge");

  // Polish in omega space: S(omega) has a simple zero at the edge, so a
  // secant/bisection hybrid reaches rounding level.
  double om_lo = below_anchor.omega2.real();
  double om1_seed = below_anchor.omega1.real();
  RealEdgeState st_lo = real_edge_state(mu1, mu2, om_lo, om1_seed);
  int guard = 0;
  while (st_lo.S >= 0.0) {
    om_lo -= std::max(1e-6, 0.5 * (inf1 - om_lo));
    st_lo = real_edge_state(mu1, mu2, om_lo, st_lo.omega1);
    if (++guard > 200)
      throw solver_error("edge-not-found", "no negative-S anchor in omega space");
  }
  double om_hi = om_lo;
  RealEdgeState st_hi = st_lo;
  double gap = inf1 - om_lo;
  const double gap_floor = 2e-8 * (1.0 + std::fabs(inf1));
  guard = 0;
  while (st_hi.S < 0.0) {
    gap *= 0.5;
    if (gap < gap_floor)
      throw solver_error("edge-not-found", "S does not change sign below supp mu1");
    om_hi = inf1 - gap;
    st_hi = real_edge_state(mu1, mu2, om_hi, st_hi.omega1);
    if (++guard > 200) throw solver_error("edge-not-found", "omega bracket expansion failed");
  }

  RealEdgeState a = st_lo, b = st_hi;
  RealEdgeState best = std::fabs(a.S) < std::fabs(b.S) ? a : b;
  for (int it = 0; it < 200; ++it) {
    double om_next;
    const double denom = b.S - a.S;
    if (std::fabs(denom) > 1e-300) {
      om_next = a.omega2 - a.S * (b.omega2 - a.omega2) / denom;  // secant
      const double lo = std::min(a.omega2, b.omega2), hi = std::max(a.omega2, b.omega2);
      if (!(om_next > lo && om_next < hi)) om_next = 0.5 * (a.omega2 + b.omega2);
    } else {
      om_next = 0.5 * (a.omega2 + b.omega2);
    }
    RealEdgeState st = real_edge_state(mu1, mu2, om_next, best.omega1);
    if (std::fabs(st.S) < std::fabs(best.S)) best = st;
    if (st.S < 0.0)
      a = st;
    else
      b = st;
    if (std::fabs(b.omega2 - a.omega2) < 1e-16 * (1.0 + std::fabs(a.omega2))) break;
  }

  LowerEdgeResult out;
  out.E_minus = best.z;
  out.omega1 = best.omega1;
  out.omega2 = best.omega2;
  out.residual = std::fabs(best.S);
  out.bracket_lo = bracket_lo;
  out.bracket_hi = bracket_hi;
  out.monotonicity_warning = monotone_warned;
  return out;
}

}  // namespace

EdgeReport locate_lower_edge(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                             const SolverConfig& config) {
  EdgeReport rep;
  if (mu1.is_point_mass() || mu2.is_point_mass()) {
    // Translation by a point mass: the edge is a rigid shift, there is no
    // square-root edge of the regular type.
    const bool first = mu1.is_point_mass();
    const double a = first ? mu1.atoms()[0].location : mu2.atoms()[0].location;
    const SpectralMeasure& other = first ? mu2 : mu1;
    rep.E_minus = a + other.inf_support();
    rep.E_plus = a + other.sup_support();
    rep.degenerate_point_mass = true;
    rep.omega1_minus = first ? rep.E_minus - a : other.inf_support();
    rep.omega2_minus = first ? other.inf_support() : rep.E_minus - a;
    return rep;
  }

  const LowerEdgeResult lower = locate_lower_edge_impl(mu1, mu2, config);
  const LowerEdgeResult upper =
      locate_lower_edge_impl(mu1.reflected(), mu2.reflected(), config);

  rep.E_minus = lower.E_minus;
  rep.E_plus = -upper.E_minus;
  rep.omega1_minus = lower.omega1;
  rep.omega2_minus = lower.omega2;
  rep.k0_gap1 = mu2.inf_support() - lower.omega1;
  rep.k0_gap2 = mu1.inf_support() - lower.omega2;
  rep.bracket_lo = lower.bracket_lo;
  rep.bracket_hi = lower.bracket_hi;
  rep.edge_equation_residual = lower.residual;
  rep.monotonicity_warning = lower.monotonicity_warning;
  if (rep.E_minus >= rep.E_plus)
    throw solver_error("edge-not-found", "located edges are not ordered");
  return rep;
}

EdgeReport edge_expansion(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                          EdgeReport rep, const SolverConfig& config) {
  if (rep.degenerate_point_mass)
    throw domain_error("edge_expansion: point-mass convolution has no square-root edge");

  const TransformValue t1 = mu1.transform(Complex(rep.omega2_minus, 0.0));
  const TransformValue t2 = mu2.transform(Complex(rep.omega1_minus, 0.0));
  const double F1p = t1.F1.real(), F1pp = t1.F2.real();
  const double F2p = t2.F1.real(), F2pp = t2.F2.real();
  // ztilde(w) = -F1(w) + w + F2^{-1}(F1(w)); second derivative on the curve.
  const double zpp_signed =
      -F1pp + F1pp / F2p - F2pp * F1p * F1p / (F2p * F2p * F2p);
  if (!(zpp_signed < 0.0))
    throw solver_error("expansion-fit", "edge curvature has unexpected sign");
  rep.zpp = -zpp_signed;

  // Fit |omega2(z) - omega2(E_-)| against sqrt(E_- - z) on z = E_- - 2^{-k}.
  std::vector<double> us, ys;
  SubordinationPair warm;
  const SubordinationPair* warm_ptr = nullptr;
  for (int k = 8; k <= 20; ++k) {
    const double dz = std::ldexp(1.0, -k);
    const double x = rep.E_minus - dz;
    SubordinationPair bp = boundary_values(mu1, mu2, x, config, warm_ptr);
    warm = bp;
    warm_ptr = &warm;
    us.push_back(std::sqrt(dz));
    ys.push_back(std::fabs(bp.omega2.real() - rep.omega2_minus));
  }
  double suu = 0.0, suy = 0.0;
  double slx = 0.0, sly = 0.0, slxx = 0.0, slxy = 0.0;
  const int n = static_cast<int>(us.size());
  for (int i = 0; i < n; ++i) {
    suu += us[i] * us[i];
    suy += us[i] * ys[i];
    const double lx = std::log(us[i] * us[i]);  // log |z - E_-|
    const double ly = std::log(ys[i]);
    slx += lx;
    sly += ly;
    slxx += lx * lx;
    slxy += lx * ly;
  }
  const double coeff = suy / suu;
  rep.fit_exponent = (n * slxy - slx * sly) / (n * slxx - slx * slx);

  const double taylor = std::sqrt(2.0 / rep.zpp);
  const double printed_alternative = 2.0 / rep.zpp;
  const double rel_sqrt = std::fabs(coeff - taylor) / taylor;
  const double rel_lin = std::fabs(coeff - printed_alternative) /
                         std::max(printed_alternative, 1e-300);
  rep.sqrt_coefficient = coeff;
  rep.coefficient_form = rel_sqrt <= rel_lin ? "sqrt(2/zpp)" : "2/zpp";
  if (rel_sqrt > 0.01)
    throw solver_error("expansion-fit",
                       "fitted sqrt coefficient deviates from sqrt(2/zpp) by " +
                           std::to_string(100.0 * rel_sqrt) + "%");

  // rho(x) ~ m1'(omega2(E_-)) sqrt(2/zpp) / pi * sqrt(x - E_-).
  rep.density_coefficient = t1.m1.real() * taylor / M_PI;
  rep.has_expansion = true;
  return rep;
}

ProbeTable scaling_probe(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                         const EdgeReport& report, const ProbeGrid& grid,
                         const SolverConfig& config) {
  if (report.degenerate_point_mass)
    throw domain_error("scaling_probe: degenerate point-mass edge");
  ProbeTable table;
  const double E = report.E_minus;
  const double ratio = std::pow(grid.scale_min / grid.scale_max,
                                1.0 / std::max(1, grid.ladder_points - 1));

  auto descend_solve = [&](Complex z) {
    std::vector<Complex> pts;
    for (double eta = 2.0; eta > z.imag() * 1.0001; eta *= 0.5)
      pts.emplace_back(z.real(), eta);
    pts.push_back(z);
    return continuation_solve(mu1, mu2, pts, config).back();
  };

  // Vertical ladder: z = E_- + i eta; kappa = 0.
  double s = grid.scale_max;
  std::vector<double> lx_s, ly_s, ly_o;
  for (int i = 0; i < grid.ladder_points; ++i, s *= ratio) {
    ProbeRow row;
    row.tag = "vertical";
    row.E = E;
    row.eta = s;
    row.kappa = 0.0;
    try {
      const SubordinationPair p = descend_solve(Complex(E, s));
      const StabilityTriple st = stability_quantities(mu1, mu2, p);
      SubordinationDerivatives d;
      try {
        d = subordination_derivatives(mu1, mu2, p);
      } catch (const solver_error&) {
        d = subordination_derivatives_fd(mu1, mu2, p, config);
      }
      row.re_m = p.m.real();
      row.im_m = p.m.imag();
      row.abs_S = std::abs(st.S);
      row.abs_omega1_prime = std::abs(d.omega1);
      row.abs_omega2_prime = std::abs(d.omega2);
      lx_s.push_back(std::log(row.kappa + row.eta));
      ly_s.push_back(std::log(row.abs_S));
      ly_o.push_back(std::log(row.abs_omega2_prime));
    } catch (const solver_error&) {
      row.ok = false;
    }
    table.rows.push_back(row);
  }

  // Inside: boundary Im m at E_- + kappa.
  s = grid.scale_max;
  std::vector<double> lx_in, ly_in;
  for (int i = 0; i < grid.ladder_points; ++i, s *= ratio) {
    ProbeRow row;
    row.tag = "inside";
    row.E = E + s;
    row.eta = 0.0;
    row.kappa = s;
    try {
      const SubordinationPair p = boundary_values(mu1, mu2, row.E, config);
      row.re_m = p.m.real();
      row.im_m = p.m.imag();
      lx_in.push_back(std::log(s));
      ly_in.push_back(std::log(std::max(row.im_m, 1e-300)));
    } catch (const solver_error&) {
      row.ok = false;
    }
    table.rows.push_back(row);
  }

  // Outside: Im m(E_- - kappa + i eta) against eta/sqrt(kappa).
  s = grid.scale_max;
  for (int i = 0; i < grid.ladder_points; ++i, s *= ratio) {
    ProbeRow row;
    row.tag = "outside";
    row.E = E - s;
    row.eta = grid.outside_eta;
    row.kappa = s;
    try {
      const SubordinationPair p = descend_solve(Complex(row.E, row.eta));
      row.re_m = p.m.real();
      row.im_m = p.m.imag();
      table.outside_max_ratio =
          std::max(table.outside_max_ratio, row.im_m / (row.eta / std::sqrt(s)));
    } catch (const solver_error&) {
      row.ok = false;
    }
    table.rows.push_back(row);
  }

  auto slope = [](const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    if (n < 2) return 0.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  table.slope_abs_S = slope(lx_s, ly_s);
  table.slope_abs_omega_prime = slope(lx_s, ly_o);
  table.slope_inside_im_m = slope(lx_in, ly_in);
  return table;
}

}  // namespace freeconv
