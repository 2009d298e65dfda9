#include "freeconv/measure.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "freeconv/errors.hpp"
#include "freeconv/quadrature.hpp"

namespace freeconv {

namespace {

constexpr double kWeightSumTol = 1e-12;

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

void SpectralMeasure::validate_atomic() const {
  if (atoms_.empty()) throw argument_error("measure: no atoms");
  double sum = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (!(atoms_[i].weight > 0.0)) throw argument_error("measure: weights must be > 0");
    if (i > 0 && !(atoms_[i].location > atoms_[i - 1].location))
      throw argument_error("measure: atom locations must be strictly increasing");
    sum += atoms_[i].weight;
  }
  if (std::fabs(sum - 1.0) > kWeightSumTol)
    throw argument_error("measure: weights must sum to 1 within 1e-12");
}

SpectralMeasure SpectralMeasure::atomic(std::vector<Atom> atoms) {
  SpectralMeasure mu;
  mu.kind_ = MeasureKind::atomic;
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  mu.atoms_ = std::move(atoms);
  mu.validate_atomic();
  mu.lo_ = mu.atoms_.front().location;
  mu.hi_ = mu.atoms_.back().location;
  return mu;
}

SpectralMeasure SpectralMeasure::power_law(double lo, double hi, double t_minus,
                                           double t_plus) {
  if (!(lo < hi)) throw argument_error("measure: need lo < hi");
  if (!(t_minus > -1.0 && t_minus < 1.0 && t_plus > -1.0 && t_plus < 1.0))
    throw argument_error("measure: edge exponents must lie in (-1,1)");
  SpectralMeasure mu;
  mu.kind_ = MeasureKind::continuous;
  mu.lo_ = lo;
  mu.hi_ = hi;
  mu.t_minus_ = t_minus;
  mu.t_plus_ = t_plus;
  // Z = (b-a)^{t-+t++1} B(t-+1, t++1)
  mu.log_norm_ = (t_minus + t_plus + 1.0) * std::log(hi - lo) +
                 quadrature::log_beta(t_minus + 1.0, t_plus + 1.0);
  return mu;
}

SpectralMeasure SpectralMeasure::semicircle(double variance) {
  if (!(variance > 0.0)) throw argument_error("measure: variance must be > 0");
  const double r = 2.0 * std::sqrt(variance);
  return power_law(-r, r, 0.5, 0.5);
}

SpectralMeasure SpectralMeasure::uniform(double lo, double hi) {
  return power_law(lo, hi, 0.0, 0.0);
}

SpectralMeasure SpectralMeasure::arcsine(double lo, double hi) {
  return power_law(lo, hi, -0.5, -0.5);
}

SpectralMeasure SpectralMeasure::two_atoms(double x1, double x2, double w1) {
  if (!(w1 > 0.0 && w1 < 1.0)) throw argument_error("measure: w1 must lie in (0,1)");
  return atomic({{x1, w1}, {x2, 1.0 - w1}});
}

SpectralMeasure SpectralMeasure::point_mass(double location) {
  return atomic({{location, 1.0}});
}

const std::vector<Atom>& SpectralMeasure::atoms() const {
  if (kind_ != MeasureKind::atomic) throw domain_error("measure: not atomic");
  return atoms_;
}

double SpectralMeasure::mean() const {
  if (kind_ == MeasureKind::atomic) {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.location * a.weight;
    return s;
  }
  // E[x] = a + (b-a) * (t-+1)/(t-+t++2) for the Jacobi profile.
  return lo_ + (hi_ - lo_) * (t_minus_ + 1.0) / (t_minus_ + t_plus_ + 2.0);
}

double SpectralMeasure::variance() const {
  if (kind_ == MeasureKind::atomic) {
    const double m = mean();
    double s = 0.0;
    for (const auto& a : atoms_) s += (a.location - m) * (a.location - m) * a.weight;
    return s;
  }
  const double a1 = t_minus_ + 1.0, b1 = t_plus_ + 1.0, s = a1 + b1;
  const double var_unit = a1 * b1 / (s * s * (s + 1.0));  // Beta(a1,b1) variance
  return var_unit * (hi_ - lo_) * (hi_ - lo_);
}

double SpectralMeasure::density(double x) const {
  if (kind_ != MeasureKind::continuous)
    throw domain_error("measure: density undefined for atomic measure");
  if (x <= lo_ || x >= hi_) return 0.0;
  return std::exp(t_minus_ * std::log(x - lo_) + t_plus_ * std::log(hi_ - x) - log_norm_);
}

double SpectralMeasure::cdf(double x) const {
  if (kind_ == MeasureKind::atomic) {
    double s = 0.0;
    for (const auto& a : atoms_) {
      if (a.location <= x) s += a.weight;
    }
    return s;
  }
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  const double u = (x - lo_) / (hi_ - lo_);
  return quadrature::regularized_incomplete_beta(t_minus_ + 1.0, t_plus_ + 1.0, u);
}

double SpectralMeasure::quantile(double p) const {
  if (!(p > 0.0 && p <= 1.0)) throw argument_error("quantile: p must lie in (0,1]");
  if (kind_ == MeasureKind::atomic) {
    double s = 0.0;
    for (const auto& a : atoms_) {
      s += a.weight;
      if (s >= p - 1e-15) return a.location;
    }
    return atoms_.back().location;
  }
  if (p == 1.0) return hi_;
  double lo = lo_, hi = hi_;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::fabs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) >= p ? hi : lo) = mid;
  }
  return hi;
}

double SpectralMeasure::support_distance(double x) const {
  if (kind_ == MeasureKind::atomic) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& a : atoms_) d = std::min(d, std::fabs(x - a.location));
    if (x > lo_ && x < hi_) {
      // between atoms: distance to nearest atom
      return d;
    }
    return d;
  }
  if (x >= lo_ && x <= hi_) return 0.0;
  return x < lo_ ? lo_ - x : x - hi_;
}

SpectralMeasure SpectralMeasure::shifted(double a) const {
  SpectralMeasure mu = *this;
  if (kind_ == MeasureKind::atomic) {
    for (auto& at : mu.atoms_) at.location += a;
  }
  mu.lo_ += a;
  mu.hi_ += a;
  return mu;
}

SpectralMeasure SpectralMeasure::scaled(double s) const {
  if (s == 0.0) throw argument_error("measure: scale must be nonzero");
  SpectralMeasure mu = *this;
  if (kind_ == MeasureKind::atomic) {
    for (auto& at : mu.atoms_) at.location *= s;
    std::sort(mu.atoms_.begin(), mu.atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });
    mu.lo_ = mu.atoms_.front().location;
    mu.hi_ = mu.atoms_.back().location;
    return mu;
  }
  double lo = lo_ * s, hi = hi_ * s;
  double tm = t_minus_, tp = t_plus_;
  if (s < 0.0) {
    std::swap(lo, hi);
    std::swap(tm, tp);
  }
  mu.lo_ = lo;
  mu.hi_ = hi;
  mu.t_minus_ = tm;
  mu.t_plus_ = tp;
  mu.log_norm_ = (tm + tp + 1.0) * std::log(hi - lo) +
                 quadrature::log_beta(tm + 1.0, tp + 1.0);
  return mu;
}

namespace {

struct RawSums {
  Complex s0, s1, s2;  // sum w/(x-z), sum w/(x-z)^2, sum w/(x-z)^3
};

RawSums atomic_sums(const std::vector<Atom>& atoms, Complex z) {
  RawSums r{};
  for (const auto& a : atoms) {
    const Complex d = a.location - z;
    const Complex inv = a.weight / d;
    r.s0 += inv;
    r.s1 += inv / d;
    r.s2 += inv / (d * d);
  }
  return r;
}

RawSums rule_sums(const quadrature::JacobiRule& rule, double lo, double hi, Complex z) {
  // Map nodes from [-1,1] to [lo,hi]; the singular edge factors are the
  // quadrature weight, so the integrand is just 1/(x-z).
  RawSums r{};
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const Complex d = (mid + half * rule.nodes[k]) - z;
    const Complex inv = rule.weights[k] / d;
    r.s0 += inv;
    r.s1 += inv / d;
    r.s2 += inv / (d * d);
  }
  const double inv_tw = 1.0 / rule.total_weight;
  r.s0 *= inv_tw;
  r.s1 *= inv_tw;
  r.s2 *= inv_tw;
  return r;
}

}  // namespace

TransformValue SpectralMeasure::transform(Complex z) const {
  if (z.imag() == 0.0) {
    if (support_distance(z.real()) <= kRealStandoff)
      throw domain_error("transform: real evaluation point touches the support");
  } else if (z.imag() < 0.0) {
    throw domain_error("transform: evaluation requires Im z > 0 or real z off support");
  }

  RawSums s;
  if (kind_ == MeasureKind::atomic) {
    s = atomic_sums(atoms_, z);
  } else {
    // alpha pairs with (1-u) <-> (hi-x), beta with (1+u) <-> (x-lo).
    const double alpha = t_plus_, beta = t_minus_;
    int n = 32;
    s = rule_sums(*quadrature::jacobi_rule(alpha, beta, n), lo_, hi_, z);
    for (;;) {
      if (n >= 4096) break;
      n *= 2;
      const RawSums next = rule_sums(*quadrature::jacobi_rule(alpha, beta, n), lo_, hi_, z);
      const double scale0 = std::max(1.0, std::abs(next.s0));
      const double scale1 = std::max(1.0, std::abs(next.s1));
      const double scale2 = std::max(1.0, std::abs(next.s2));
      const bool done = std::abs(next.s0 - s.s0) < 1e-11 * scale0 &&
                        std::abs(next.s1 - s.s1) < 1e-11 * scale1 &&
                        std::abs(next.s2 - s.s2) < 1e-9 * scale2;
      s = next;
      if (done) break;
    }
  }

  TransformValue tv;
  tv.omega = z;
  tv.m = s.s0;
  tv.m1 = s.s1;
  tv.m2 = 2.0 * s.s2;
  if (std::abs(tv.m) < 1e-300)
    throw domain_error("transform: degenerate transform (m = 0)");
  tv.F = -1.0 / tv.m;
  tv.F1 = tv.m1 / (tv.m * tv.m);
  tv.F2 = tv.m2 / (tv.m * tv.m) - 2.0 * tv.m1 * tv.m1 / (tv.m * tv.m * tv.m);
  return tv;
}

TransformValue stieltjes_transform(const SpectralMeasure& mu, Complex z) {
  return mu.transform(z);
}

double f_prime_gap(const SpectralMeasure& mu, double x) {
  if (!(x < mu.inf_support() - 1e-9))
    throw argument_error("f_prime_gap: x must lie strictly below the support");
  if (mu.is_point_mass()) return 0.0;  // F' == 1 for a point mass
  const TransformValue tv = mu.transform(Complex(x, 0.0));
  return tv.F1.real() - 1.0;
}

double quantile(const SpectralMeasure& mu, double p) { return mu.quantile(p); }

SpectralMeasure discretize(const SpectralMeasure& mu, int n) {
  if (n < 2) throw argument_error("discretize: need n >= 2");
  if (mu.kind() != MeasureKind::continuous)
    throw argument_error("discretize: input must be continuous");
  std::vector<Atom> atoms;
  atoms.reserve(n);
  const double w = 1.0 / n;
  for (int j = 1; j <= n; ++j) {
    atoms.push_back({mu.quantile((j - 0.5) * w), w});
  }
  return SpectralMeasure::atomic(std::move(atoms));
}

namespace {

// Grid + refine search over the Levy inflation parameter.
//
// Feasibility of eps is checked as F1(x-eps)-eps <= F2(x) <= F1(x+eps)+eps on
// a shared grid of quantiles and atom left-limits; after a first bisection
// the grid is densified near the active constraints and the bisection rerun.
std::vector<double> levy_grid(const SpectralMeasure& m1, const SpectralMeasure& m2,
                              int quantile_count) {
  std::set<double> pts;
  auto add_measure = [&](const SpectralMeasure& m) {
    if (m.kind() == MeasureKind::atomic) {
      for (const auto& a : m.atoms()) {
        pts.insert(a.location);
        pts.insert(a.location - 1e-13 * (1.0 + std::fabs(a.location)));
      }
    }
    for (int j = 1; j < quantile_count; ++j)
      pts.insert(m.quantile(static_cast<double>(j) / quantile_count));
    pts.insert(m.inf_support());
    pts.insert(m.sup_support());
  };
  add_measure(m1);
  add_measure(m2);
  return {pts.begin(), pts.end()};
}

double max_violation(const SpectralMeasure& m1, const SpectralMeasure& m2,
                     const std::vector<double>& grid, double eps) {
  double v = 0.0;
  for (double x : grid) {
    v = std::max(v, m2.cdf(x) - m1.cdf(x + eps) - eps);
    v = std::max(v, m1.cdf(x - eps) - eps - m2.cdf(x));
    v = std::max(v, m1.cdf(x) - m2.cdf(x + eps) - eps);
    v = std::max(v, m2.cdf(x - eps) - eps - m1.cdf(x));
  }
  return v;
}

}  // namespace

double levy_distance(const SpectralMeasure& mu1, const SpectralMeasure& mu2) {
  std::vector<double> grid = levy_grid(mu1, mu2, 4096);

  auto bisect = [&](const std::vector<double>& g) {
    double lo = 0.0;
    double hi = 1.0 + std::fabs(mu1.sup_support() - mu2.inf_support()) +
                std::fabs(mu2.sup_support() - mu1.inf_support());
    for (int it = 0; it < 60 && hi - lo > 1e-9; ++it) {
      const double mid = 0.5 * (lo + hi);
      (max_violation(mu1, mu2, g, mid) <= 0.0 ? hi : lo) = mid;
    }
    return hi;
  };

  double eps = bisect(grid);
  // Refine: densify around every grid point that is nearly active at eps.
  std::set<double> refined(grid.begin(), grid.end());
  for (double x : grid) {
    const double slack = std::max(
        {mu2.cdf(x) - mu1.cdf(x + eps) - eps, mu1.cdf(x - eps) - eps - mu2.cdf(x),
         mu1.cdf(x) - mu2.cdf(x + eps) - eps, mu2.cdf(x - eps) - eps - mu1.cdf(x)});
    if (slack > -4.0 * eps - 1e-3) {
      for (int k = -8; k <= 8; ++k) refined.insert(x + k * 1e-4);
    }
    if (refined.size() > 90000) break;
  }
  grid.assign(refined.begin(), refined.end());
  eps = bisect(grid);
  return eps;
}

SpectralMeasure make_reference_measure(const std::string& family,
                                       const std::vector<double>& params) {
  auto need = [&](std::size_t n) {
    if (params.size() != n)
      throw argument_error("make_reference_measure: family '" + family + "' expects " +
                           std::to_string(n) + " parameters");
  };
  if (family == "power_law") {
    need(4);
    return SpectralMeasure::power_law(params[0], params[1], params[2], params[3]);
  }
  if (family == "semicircle") {
    need(1);
    return SpectralMeasure::semicircle(params[0]);
  }
  if (family == "uniform") {
    need(2);
    return SpectralMeasure::uniform(params[0], params[1]);
  }
  if (family == "arcsine") {
    need(2);
    return SpectralMeasure::arcsine(params[0], params[1]);
  }
  if (family == "two_atoms") {
    need(3);
    return SpectralMeasure::two_atoms(params[0], params[1], params[2]);
  }
  if (family == "point_mass") {
    need(1);
    return SpectralMeasure::point_mass(params[0]);
  }
  throw argument_error("make_reference_measure: unknown family '" + family + "'");
}

}  // namespace freeconv
