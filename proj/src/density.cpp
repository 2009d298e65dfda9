#include "freeconv/density.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "freeconv/errors.hpp"

namespace freeconv {

FreeConvolution::FreeConvolution(SpectralMeasure mu1, SpectralMeasure mu2, SolverConfig config)
    : mu1_(std::move(mu1)),
      mu2_(std::move(mu2)),
      config_(config),
      edge_(locate_lower_edge(mu1_, mu2_, config_)),
      cache_mutex_(std::make_unique<std::mutex>()) {}

double FreeConvolution::density(double x) const {
  if (edge_.degenerate_point_mass) {
    const bool first = mu1_.is_point_mass();
    const double a = (first ? mu1_ : mu2_).atoms()[0].location;
    const SpectralMeasure& other = first ? mu2_ : mu1_;
    return other.density(x - a);
  }
  if (x <= edge_.E_minus || x >= edge_.E_plus) return 0.0;
  SubordinationPair bp;
  try {
    bp = boundary_values(mu1_, mu2_, x, config_);
  } catch (const solver_error&) {
    bp = solve_subordination(mu1_, mu2_, Complex(x, config_.eta_ladder_floor), config_);
  }
  return std::max(bp.m.imag(), 0.0) / M_PI;
}

namespace {

// Two-point Gauss-Legendre on [a,b].
template <typename F>
double gauss2(const F& f, double a, double b) {
  const double h = 0.5 * (b - a);
  const double c = 0.5 * (a + b);
  const double d = h / std::sqrt(3.0);
  return h * (f(c - d) + f(c + d));
}

}  // namespace

double FreeConvolution::cell_integral(double a, double b) const {
  // The derivative singularity at the edges is removed by the substitution
  // u = sqrt(x - E_-) (resp. sqrt(E_+ - x)) on the outer 5% of the support.
  const double span = edge_.E_plus - edge_.E_minus;
  const double cut_lo = edge_.E_minus + 0.05 * span;
  const double cut_hi = edge_.E_plus - 0.05 * span;
  auto rho = [&](double x) { return density(x); };
  if (b <= cut_lo) {
    const double ua = std::sqrt(std::max(a - edge_.E_minus, 0.0));
    const double ub = std::sqrt(std::max(b - edge_.E_minus, 0.0));
    return gauss2([&](double u) { return 2.0 * u * rho(edge_.E_minus + u * u); }, ua, ub);
  }
  if (a >= cut_hi) {
    const double ua = std::sqrt(std::max(edge_.E_plus - a, 0.0));
    const double ub = std::sqrt(std::max(edge_.E_plus - b, 0.0));
    return gauss2([&](double u) { return 2.0 * u * rho(edge_.E_plus - u * u); }, ub, ua);
  }
  return gauss2(rho, a, b);
}

void FreeConvolution::build_cdf_cache() const {
  std::lock_guard<std::mutex> lock(*cache_mutex_);
  if (cdf_ready_) return;

  const double lo = edge_.E_minus, hi = edge_.E_plus;
  const double span = hi - lo;
  const double cut_lo = lo + 0.05 * span;
  const double cut_hi = hi - 0.05 * span;

  std::vector<double> knots;
  // Lower edge region, uniform in u = sqrt(x - E_-).
  const int edge_cells = 192;
  const double umax_lo = std::sqrt(cut_lo - lo);
  for (int i = 0; i <= edge_cells; ++i) {
    const double u = umax_lo * i / edge_cells;
    knots.push_back(lo + u * u);
  }
  // Bulk, uniform.
  const int bulk_cells = 1536;
  for (int i = 1; i <= bulk_cells; ++i)
    knots.push_back(cut_lo + (cut_hi - cut_lo) * i / bulk_cells);
  // Upper edge region, uniform in u = sqrt(E_+ - x).
  const double umax_hi = std::sqrt(hi - cut_hi);
  for (int i = edge_cells - 1; i >= 0; --i) {
    const double u = umax_hi * i / edge_cells;
    knots.push_back(hi - u * u);
  }
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  std::vector<double> cum(knots.size(), 0.0);
  for (std::size_t i = 1; i < knots.size(); ++i)
    cum[i] = cum[i - 1] + cell_integral(knots[i - 1], knots[i]);

  knots_ = std::move(knots);
  cum_ = std::move(cum);
  total_mass_ = cum_.back();
  cdf_ready_ = true;
}

double FreeConvolution::cdf(double x) const {
  if (edge_.degenerate_point_mass) {
    const bool first = mu1_.is_point_mass();
    const double a = (first ? mu1_ : mu2_).atoms()[0].location;
    return (first ? mu2_ : mu1_).cdf(x - a);
  }
  if (x <= edge_.E_minus) return 0.0;
  if (x >= edge_.E_plus) return 1.0;
  if (!cdf_ready_) build_cdf_cache();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
  const double v = cum_[i] + (x > knots_[i] ? cell_integral(knots_[i], x) : 0.0);
  return std::min(1.0, std::max(0.0, v));
}

QuantileTable FreeConvolution::quantiles(int n) const {
  if (n < 1) throw argument_error("quantiles: need n >= 1");
  if (edge_.degenerate_point_mass) {
    const bool first = mu1_.is_point_mass();
    const double a = (first ? mu1_ : mu2_).atoms()[0].location;
    const SpectralMeasure& other = first ? mu2_ : mu1_;
    QuantileTable t;
    t.n = n;
    t.source = "degenerate pair";
    for (int j = 1; j <= n; ++j)
      t.gamma.push_back(a + other.quantile(static_cast<double>(j) / n));
    return t;
  }
  if (!cdf_ready_) build_cdf_cache();

  QuantileTable t;
  t.n = n;
  t.source = "continuous pair";
  t.gamma.resize(n);
  for (int j = 1; j <= n; ++j) {
    const double p = std::min(static_cast<double>(j) / n, total_mass_);
    // Bracket from the cumulative table, then safeguarded Newton; close to
    // E_- the square-root law gives the initial guess.
    auto it = std::lower_bound(cum_.begin(), cum_.end(), p);
    std::size_t i = std::min<std::size_t>(it - cum_.begin(), cum_.size() - 1);
    if (i == 0) i = 1;
    double xlo = knots_[i - 1], xhi = knots_[i];
    double x;
    if (edge_.has_expansion && p < 0.02) {
      x = edge_.E_minus +
          std::pow(1.5 * p / edge_.density_coefficient, 2.0 / 3.0);
      x = std::min(std::max(x, xlo), xhi);
    } else {
      const double c0 = cum_[i - 1], c1 = cum_[i];
      x = c1 > c0 ? xlo + (xhi - xlo) * (p - c0) / (c1 - c0) : 0.5 * (xlo + xhi);
    }
    for (int iter = 0; iter < 60; ++iter) {
      const double f = cum_[i - 1] + cell_integral(knots_[i - 1], x) - p;
      if (std::fabs(f) < 1e-9) break;
      if (f > 0.0)
        xhi = x;
      else
        xlo = x;
      const double d = density(x);
      double next = d > 1e-12 ? x - f / d : 0.5 * (xlo + xhi);
      if (!(next > xlo && next < xhi)) next = 0.5 * (xlo + xhi);
      if (std::fabs(next - x) < 1e-14 * (1.0 + std::fabs(x))) {
        x = next;
        break;
      }
      x = next;
    }
    t.gamma[j - 1] = x;
  }
  // Monotone by construction up to rounding; enforce.
  for (int j = 1; j < n; ++j) t.gamma[j] = std::max(t.gamma[j], t.gamma[j - 1]);
  return t;
}

double FreeConvolution::kolmogorov_distance(const std::vector<double>& lambda) const {
  if (lambda.empty()) throw argument_error("kolmogorov_distance: empty spectrum");
  if (!std::is_sorted(lambda.begin(), lambda.end()))
    throw argument_error("kolmogorov_distance: eigenvalues must be sorted");
  const double n = static_cast<double>(lambda.size());
  double d = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const double c = cdf(lambda[i]);
    d = std::max(d, std::fabs(c - (i + 1) / n));
    d = std::max(d, std::fabs(c - i / n));
  }
  return d;
}

DensityTable FreeConvolution::density_grid(const DensityGridSpec& spec) const {
  if (spec.points < 16) throw argument_error("density_grid: need at least 16 points");
  DensityTable table;
  table.eta_floor = config_.eta_ladder_floor;

  const double lo = edge_.E_minus, hi = edge_.E_plus, m = spec.margin;
  std::vector<double> xs;
  const int tail = std::max(4, spec.points / 20);
  const int body = spec.points - 2 * tail;
  for (int i = 0; i < tail; ++i) xs.push_back(lo - m + m * i / tail);
  for (int i = 0; i < body; ++i) {
    const double theta = M_PI * i / (body - 1);
    xs.push_back(0.5 * (lo + hi) - 0.5 * (hi - lo) * std::cos(theta));
  }
  for (int i = 1; i <= tail; ++i) xs.push_back(hi + m * i / tail);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  for (double x : xs) {
    double re = 0.0, im = 0.0;
    bool resolved = true;
    if (edge_.degenerate_point_mass) {
      const double rho = density(x);
      im = M_PI * rho;
      table.x.push_back(x);
      table.rho.push_back(rho);
      table.im_m.push_back(im);
      table.re_m.push_back(0.0);
      table.resolved.push_back(true);
      continue;
    }
    try {
      const SubordinationPair bp = boundary_values(mu1_, mu2_, x, config_);
      re = bp.m.real();
      im = bp.m.imag();
      resolved = bp.extrapolation_error <= 1e-6;
    } catch (const solver_error&) {
      const SubordinationPair p =
          solve_subordination(mu1_, mu2_, Complex(x, config_.eta_ladder_floor), config_);
      re = p.m.real();
      im = p.m.imag();
      resolved = false;
    }
    table.x.push_back(x);
    table.rho.push_back(std::max(im, 0.0) / M_PI);
    table.im_m.push_back(im);
    table.re_m.push_back(re);
    table.resolved.push_back(resolved);
  }

  double mass = 0.0;
  for (std::size_t i = 1; i < table.x.size(); ++i)
    mass += 0.5 * (table.rho[i] + table.rho[i - 1]) * (table.x[i] - table.x[i - 1]);
  table.mass = mass;
  return table;
}

DensityTable density_grid(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                          const DensityGridSpec& spec, const SolverConfig& config) {
  return FreeConvolution(mu1, mu2, config).density_grid(spec);
}

double cdf(const SpectralMeasure& mu1, const SpectralMeasure& mu2, double x,
           const SolverConfig& config) {
  return FreeConvolution(mu1, mu2, config).cdf(x);
}

QuantileTable quantiles(const SpectralMeasure& mu1, const SpectralMeasure& mu2, int n,
                        const SolverConfig& config) {
  return FreeConvolution(mu1, mu2, config).quantiles(n);
}

double kolmogorov_distance(const std::vector<double>& sorted_eigenvalues,
                           const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                           const SolverConfig& config) {
  return FreeConvolution(mu1, mu2, config).kolmogorov_distance(sorted_eigenvalues);
}

}  // namespace freeconv
