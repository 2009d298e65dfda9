#pragma once

#include <memory>
#include <vector>

#include "freeconv/edge.hpp"
#include "freeconv/subordination.hpp"

namespace freeconv {

struct DensityTable {
  std::vector<double> x;
  std::vector<double> rho;
  std::vector<double> im_m;
  std::vector<double> re_m;
  std::vector<bool> resolved;
  double eta_floor = 0.0;
  double mass = 0.0;  // trapezoidal integral of rho over the grid
};

struct QuantileTable {
  int n = 0;
  std::vector<double> gamma;  // gamma_1 .. gamma_n
  std::string source;         // "continuous pair" | "discretized pair"
};

struct DensityGridSpec {
  int points = 2048;          // cosine-clustered main grid
  double margin = 0.1;        // grid spans [E_- - margin, E_+ + margin]
};

// Binds a measure pair and caches the edge report plus a cumulative density
// table, so cdf/quantile calls amortize the boundary-value sweeps.  Immutable
// after construction.
class FreeConvolution {
 public:
  FreeConvolution(SpectralMeasure mu1, SpectralMeasure mu2, SolverConfig config = {});

  const EdgeReport& edge() const { return edge_; }
  const SpectralMeasure& mu1() const { return mu1_; }
  const SpectralMeasure& mu2() const { return mu2_; }

  DensityTable density_grid(const DensityGridSpec& spec = {}) const;

  // Probability mass of (-inf, x]; 0 below E_-, 1 above E_+, monotone.
  double cdf(double x) const;

  QuantileTable quantiles(int n) const;

  // sup_x |empirical cdf - cdf| over the jump points of the empirical cdf.
  double kolmogorov_distance(const std::vector<double>& sorted_eigenvalues) const;

  double density(double x) const;  // boundary Im m / pi at a single point

 private:
  void build_cdf_cache() const;
  double cell_integral(double a, double b) const;

  SpectralMeasure mu1_, mu2_;
  SolverConfig config_;
  EdgeReport edge_;

  // Cumulative table: knots_ strictly increasing over [E_-, E_+],
  // cum_[i] = integral of the density from E_- to knots_[i].
  mutable std::vector<double> knots_;
  mutable std::vector<double> cum_;
  mutable double total_mass_ = 0.0;
  mutable bool cdf_ready_ = false;
  mutable std::unique_ptr<std::mutex> cache_mutex_;
};

// One-shot wrappers matching the operation-level signatures.
DensityTable density_grid(const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                          const DensityGridSpec& spec = {}, const SolverConfig& config = {});
double cdf(const SpectralMeasure& mu1, const SpectralMeasure& mu2, double x,
           const SolverConfig& config = {});
QuantileTable quantiles(const SpectralMeasure& mu1, const SpectralMeasure& mu2, int n,
                        const SolverConfig& config = {});
double kolmogorov_distance(const std::vector<double>& sorted_eigenvalues,
                           const SpectralMeasure& mu1, const SpectralMeasure& mu2,
                           const SolverConfig& config = {});

}  // namespace freeconv
