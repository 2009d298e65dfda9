#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "freeconv/density.hpp"
#include "freeconv/rmt.hpp"

namespace freeconv {

struct ExperimentConfig {
  SpectralMeasure mu1 = SpectralMeasure::uniform(0.0, 1.0);
  SpectralMeasure mu2 = SpectralMeasure::uniform(0.0, 1.0);
  std::string mu1_spec = R"({"family":"uniform","support":[0.0,1.0]})";
  std::string mu2_spec = R"({"family":"uniform","support":[0.0,1.0]})";
  std::vector<int> n_values{500};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10,
                                   11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  MatrixField field = MatrixField::unitary;
  double gamma = 0.3;           // eta_m = N^{-1+gamma}
  double eta_max = 1.0;
  double tau = 0.05;
  double epsilon_slack = 0.25;  // finite-sample stand-in for the N^eps slack
  double rigidity_fraction = 0.1;
  int threads = 0;              // 0 = hardware concurrency
  SolverConfig solver;

  // Pass/fail thresholds (fixed constants absorbing the slack exponent).
  double rigidity_p90_max = 10.0;
  double rigidity_halving_rel_tol = 0.30;
  double local_law_bulk_p90_max = 10.0;
  double local_law_outside_p90_max = 20.0;
  double edge_fluct_p95_max = 10.0;
  double edge_fluct_slope_tol = 0.15;
  double ks_log_constant = 5.0;

  void validate() const;
  double kappa_norm() const;  // ||A|| + ||B|| + 1 for the profile pair
};

struct GateResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct SeedStat {
  std::uint64_t seed = 0;
  std::map<std::string, double> values;
};

struct CellStats {
  int n = 0;
  std::vector<SeedStat> per_seed;
  std::map<std::string, double> aggregates;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<CellStats> cells;
  std::map<std::string, double> fits;
  std::vector<GateResult> gates;
  bool pass = false;
};

// max_{i <= cN} |lambda_i - gamma_i^*| i^{1/3} N^{2/3} against the quantiles
// of the discretized and the continuous pair.
ExperimentReport rigidity_experiment(const ExperimentConfig& cfg);

// N eta |m_H - m| on a bulk grid plus the improved bound outside the
// spectrum, including d_i-weighted entrywise averages.
ExperimentReport local_law_experiment(const ExperimentConfig& cfg);

// N^{2/3} |lambda_1 - E_-| quantiles and the N-scaling of the median.
ExperimentReport edge_fluctuation_experiment(const ExperimentConfig& cfg);

// N * Kolmogorov distance against the free convolution CDF.
ExperimentReport ks_experiment(const ExperimentConfig& cfg);

// Aggregation helpers (shared with tests).
double quantile_of(std::vector<double> values, double p);

}  // namespace freeconv
