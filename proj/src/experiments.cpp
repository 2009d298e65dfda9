#include "freeconv/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "freeconv/errors.hpp"
#include "freeconv/rng.hpp"

namespace freeconv {

namespace {

// Deterministic parallel map: results land in index order, scheduling never
// affects the report.
template <typename Fn>
void parallel_for(int count, int threads, const Fn& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

Eigen::VectorXd atoms_to_vector(const SpectralMeasure& mu) {
  const auto& atoms = mu.atoms();
  Eigen::VectorXd v(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) v(i) = atoms[i].location;
  return v;
}

double median_of(std::vector<double> v) { return quantile_of(std::move(v), 0.5); }

std::map<std::string, double> aggregate(const std::vector<SeedStat>& stats,
                                        const std::string& key) {
  std::vector<double> v;
  for (const auto& s : stats) v.push_back(s.values.at(key));
  return {{key + "_median", quantile_of(v, 0.5)},
          {key + "_p90", quantile_of(v, 0.9)},
          {key + "_p95", quantile_of(v, 0.95)},
          {key + "_max", *std::max_element(v.begin(), v.end())}};
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

double quantile_of(std::vector<double> values, double p) {
  if (values.empty()) throw argument_error("quantile_of: empty sample");
  std::sort(values.begin(), values.end());
  const double idx = p * (values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = idx - lo;
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

void ExperimentConfig::validate() const {
  for (int n : n_values)
    if (n < 50) throw argument_error("experiment config: N must be >= 50");
  if (seeds.size() < 10)
    throw argument_error("experiment config: statistical claims need at least 10 seeds");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw argument_error("experiment config: gamma must lie in (0,1)");
}

double ExperimentConfig::kappa_norm() const {
  const double na = std::max(std::fabs(mu1.inf_support()), std::fabs(mu1.sup_support()));
  const double nb = std::max(std::fabs(mu2.inf_support()), std::fabs(mu2.sup_support()));
  return na + nb + 1.0;
}

ExperimentReport rigidity_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = "rigidity";

  FreeConvolution continuous(cfg.mu1, cfg.mu2, cfg.solver);

  for (int n : cfg.n_values) {
    const SpectralMeasure mu_a = discretize(cfg.mu1, n);
    const SpectralMeasure mu_b = discretize(cfg.mu2, n);
    const Eigen::VectorXd a = atoms_to_vector(mu_a);
    const Eigen::VectorXd b = atoms_to_vector(mu_b);

    FreeConvolution discretized(mu_a, mu_b, cfg.solver);
    const QuantileTable gamma_star = discretized.quantiles(n);
    const QuantileTable gamma_cont = continuous.quantiles(n);

    CellStats cell;
    cell.n = n;
    cell.per_seed.resize(cfg.seeds.size());
    const int i_max = std::max(1, static_cast<int>(cfg.rigidity_fraction * n));
    parallel_for(static_cast<int>(cfg.seeds.size()), cfg.threads, [&](int si) {
      const std::uint64_t seed = cfg.seeds[si];
      const Eigen::MatrixXcd u = sample_haar(n, seed, cfg.field);
      const EnsembleSample sample = assemble_and_diagonalize(a, b, u, cfg.field, seed);
      double r_star = 0.0, r_cont = 0.0, max_dev = 0.0;
      for (int i = 1; i <= i_max; ++i) {
        const double lam = sample.eigenvalues(i - 1);
        const double w = std::cbrt(static_cast<double>(i)) *
                         std::pow(static_cast<double>(n), 2.0 / 3.0);
        r_star = std::max(r_star, std::fabs(lam - gamma_star.gamma[i - 1]) * w);
        r_cont = std::max(r_cont, std::fabs(lam - gamma_cont.gamma[i - 1]) * w);
        max_dev = std::max(max_dev, std::fabs(lam - gamma_star.gamma[i - 1]));
      }
      SeedStat st;
      st.seed = seed;
      st.values["R_star"] = r_star;
      st.values["R_cont"] = r_cont;
      st.values["max_dev"] = max_dev;
      cell.per_seed[si] = st;
    });
    for (const char* key : {"R_star", "R_cont", "max_dev"}) {
      auto agg = aggregate(cell.per_seed, key);
      cell.aggregates.insert(agg.begin(), agg.end());
    }
    rep.cells.push_back(std::move(cell));
  }

  const CellStats& first = rep.cells.front();
  rep.gates.push_back({"rigidity_p90_le", first.aggregates.at("R_star_p90"),
                       cfg.rigidity_p90_max,
                       first.aggregates.at("R_star_p90") <= cfg.rigidity_p90_max});

  // Median shrink factor between successive doublings of N.
  for (std::size_t c = 0; c + 1 < rep.cells.size(); ++c) {
    const CellStats& lo = rep.cells[c];
    const CellStats& hi = rep.cells[c + 1];
    if (hi.n == 2 * lo.n) {
      const double ratio =
          hi.aggregates.at("max_dev_median") / lo.aggregates.at("max_dev_median");
      const double expected = std::pow(2.0, -2.0 / 3.0);
      rep.fits["median_halving_ratio_" + std::to_string(lo.n)] = ratio;
      rep.gates.push_back({"rigidity_halving_ratio_" + std::to_string(lo.n),
                           std::fabs(ratio / expected - 1.0), cfg.rigidity_halving_rel_tol,
                           std::fabs(ratio / expected - 1.0) <= cfg.rigidity_halving_rel_tol});
    }
  }

  rep.pass = std::all_of(rep.gates.begin(), rep.gates.end(),
                         [](const GateResult& g) { return g.pass; });
  return rep;
}

ExperimentReport local_law_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = "local-law";

  for (int n : cfg.n_values) {
    const SpectralMeasure mu_a = discretize(cfg.mu1, n);
    const SpectralMeasure mu_b = discretize(cfg.mu2, n);
    const Eigen::VectorXd a = atoms_to_vector(mu_a);
    const Eigen::VectorXd b = atoms_to_vector(mu_b);
    const EdgeReport edge = locate_lower_edge(mu_a, mu_b, cfg.solver);

    // Bulk grid in D_tau: three E columns, eta descending to N^{-1+gamma}.
    const double eta_m = std::pow(static_cast<double>(n), -1.0 + cfg.gamma);
    const double mid = 0.5 * (edge.E_minus + edge.E_plus);
    const double half = 0.5 * (edge.E_plus - edge.E_minus);
    std::vector<Complex> zs;
    for (double frac : {0.0, -0.35, 0.35}) {
      for (double eta = cfg.eta_max; eta >= eta_m; eta *= 0.25)
        zs.emplace_back(mid + frac * half, eta);
    }
    const Complex z_out(edge.E_minus - 0.2, 1e-4);

    // Reference subordination data, shared across seeds.
    struct Ref {
      Complex z, m, omega_b;
    };
    std::vector<Ref> refs;
    for (Complex z : zs) {
      const SubordinationPair p = solve_subordination(mu_a, mu_b, z, cfg.solver);
      refs.push_back({z, p.m, p.omega2});
    }
    const SubordinationPair p_out = solve_subordination(mu_a, mu_b, z_out, cfg.solver);

    CellStats cell;
    cell.n = n;
    cell.per_seed.resize(cfg.seeds.size());
    parallel_for(static_cast<int>(cfg.seeds.size()), cfg.threads, [&](int si) {
      const std::uint64_t seed = cfg.seeds[si];
      const Eigen::MatrixXcd u = sample_haar(n, seed, cfg.field);
      const EnsembleSample sample =
          assemble_and_diagonalize(a, b, u, cfg.field, seed, /*with_vectors=*/true);

      // Unit-modulus random weights from a dedicated substream.
      Philox rng(seed, Philox::stream_id("local-law-weights", n));
      Eigen::VectorXcd d_rand(n);
      for (int i = 0; i < n; ++i) {
        const double phase = 6.283185307179586 * rng.next_double();
        d_rand(i) = Complex(std::cos(phase), std::sin(phase));
      }
      const double a_scale = std::max(std::fabs(a.minCoeff()), std::fabs(a.maxCoeff()));

      double worst_avg = 0.0, worst_w_a = 0.0, worst_w_rand = 0.0;
      for (const Ref& ref : refs) {
        Eigen::VectorXcd gdiag(n);
        Complex m_h = 0.0;
        for (int i = 0; i < n; ++i) {
          Complex gii = 0.0;
          for (int k = 0; k < n; ++k) {
            const double w2 = std::norm(sample.eigenvectors(i, k));
            gii += w2 / (sample.eigenvalues(k) - ref.z);
          }
          gdiag(i) = gii;
          m_h += gii;
        }
        m_h /= n;
        const double n_eta = n * ref.z.imag();
        worst_avg = std::max(worst_avg, n_eta * std::abs(m_h - ref.m));
        Complex s_a = 0.0, s_rand = 0.0;
        for (int i = 0; i < n; ++i) {
          const Complex dev = gdiag(i) - 1.0 / (a(i) - ref.omega_b);
          s_a += (a(i) / a_scale) * dev;
          s_rand += d_rand(i) * dev;
        }
        worst_w_a = std::max(worst_w_a, n_eta * std::abs(s_a) / n);
        worst_w_rand = std::max(worst_w_rand, n_eta * std::abs(s_rand) / n);
      }

      // Outside the spectrum: N (kappa + eta) |m_H - m|.
      Complex m_h_out = 0.0;
      for (int k = 0; k < n; ++k)
        m_h_out += 1.0 / (sample.eigenvalues(k) - z_out);
      m_h_out /= n;
      const double kappa = edge.E_minus - z_out.real();
      const double outside_stat =
          n * (kappa + z_out.imag()) * std::abs(m_h_out - p_out.m);

      SeedStat st;
      st.seed = seed;
      st.values["bulk_avg"] = worst_avg;
      st.values["bulk_weighted_a"] = worst_w_a;
      st.values["bulk_weighted_rand"] = worst_w_rand;
      st.values["outside"] = outside_stat;
      cell.per_seed[si] = st;
    });
    for (const char* key : {"bulk_avg", "bulk_weighted_a", "bulk_weighted_rand", "outside"}) {
      auto agg = aggregate(cell.per_seed, key);
      cell.aggregates.insert(agg.begin(), agg.end());
    }
    rep.cells.push_back(std::move(cell));
  }

  const CellStats& first = rep.cells.front();
  rep.gates.push_back({"local_law_bulk_p90_le", first.aggregates.at("bulk_avg_p90"),
                       cfg.local_law_bulk_p90_max,
                       first.aggregates.at("bulk_avg_p90") <= cfg.local_law_bulk_p90_max});
  rep.gates.push_back({"local_law_outside_p90_le", first.aggregates.at("outside_p90"),
                       cfg.local_law_outside_p90_max,
                       first.aggregates.at("outside_p90") <= cfg.local_law_outside_p90_max});
  rep.pass = std::all_of(rep.gates.begin(), rep.gates.end(),
                         [](const GateResult& g) { return g.pass; });
  return rep;
}

ExperimentReport edge_fluctuation_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = "edge-fluct";

  std::vector<double> log_n, log_median;
  for (int n : cfg.n_values) {
    const SpectralMeasure mu_a = discretize(cfg.mu1, n);
    const SpectralMeasure mu_b = discretize(cfg.mu2, n);
    const Eigen::VectorXd a = atoms_to_vector(mu_a);
    const Eigen::VectorXd b = atoms_to_vector(mu_b);
    const double e_minus = locate_lower_edge(mu_a, mu_b, cfg.solver).E_minus;

    CellStats cell;
    cell.n = n;
    cell.per_seed.resize(cfg.seeds.size());
    parallel_for(static_cast<int>(cfg.seeds.size()), cfg.threads, [&](int si) {
      const std::uint64_t seed = cfg.seeds[si];
      const Eigen::MatrixXcd u = sample_haar(n, seed, cfg.field);
      const EnsembleSample sample = assemble_and_diagonalize(a, b, u, cfg.field, seed);
      const double dev = std::fabs(sample.eigenvalues(0) - e_minus);
      SeedStat st;
      st.seed = seed;
      st.values["lambda1_dev"] = dev;
      st.values["scaled"] = std::pow(static_cast<double>(n), 2.0 / 3.0) * dev;
      cell.per_seed[si] = st;
    });
    for (const char* key : {"lambda1_dev", "scaled"}) {
      auto agg = aggregate(cell.per_seed, key);
      cell.aggregates.insert(agg.begin(), agg.end());
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_median.push_back(std::log(cell.aggregates.at("lambda1_dev_median")));
    rep.cells.push_back(std::move(cell));
  }

  // Gate the quantile on the largest-N cell present.
  const auto widest = std::max_element(
      rep.cells.begin(), rep.cells.end(),
      [](const CellStats& x, const CellStats& y) { return x.n < y.n; });
  rep.gates.push_back({"edge_fluct_p95_le", widest->aggregates.at("scaled_p95"),
                       cfg.edge_fluct_p95_max,
                       widest->aggregates.at("scaled_p95") <= cfg.edge_fluct_p95_max});
  if (rep.cells.size() >= 3) {
    const double slope = fit_slope(log_n, log_median);
    rep.fits["median_slope"] = slope;
    rep.gates.push_back({"edge_fluct_slope", std::fabs(slope + 2.0 / 3.0),
                         cfg.edge_fluct_slope_tol,
                         std::fabs(slope + 2.0 / 3.0) <= cfg.edge_fluct_slope_tol});
  }
  rep.pass = std::all_of(rep.gates.begin(), rep.gates.end(),
                         [](const GateResult& g) { return g.pass; });
  return rep;
}

ExperimentReport ks_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = "ks";

  std::vector<double> log_n, log_median;
  for (int n : cfg.n_values) {
    const SpectralMeasure mu_a = discretize(cfg.mu1, n);
    const SpectralMeasure mu_b = discretize(cfg.mu2, n);
    const Eigen::VectorXd a = atoms_to_vector(mu_a);
    const Eigen::VectorXd b = atoms_to_vector(mu_b);
    FreeConvolution ctx(mu_a, mu_b, cfg.solver);
    ctx.cdf(0.5 * (ctx.edge().E_minus + ctx.edge().E_plus));  // warm the cache

    CellStats cell;
    cell.n = n;
    cell.per_seed.resize(cfg.seeds.size());
    parallel_for(static_cast<int>(cfg.seeds.size()), cfg.threads, [&](int si) {
      const std::uint64_t seed = cfg.seeds[si];
      const Eigen::MatrixXcd u = sample_haar(n, seed, cfg.field);
      const EnsembleSample sample = assemble_and_diagonalize(a, b, u, cfg.field, seed);
      std::vector<double> lambda(sample.eigenvalues.data(),
                                 sample.eigenvalues.data() + n);
      const double ks = ctx.kolmogorov_distance(lambda);
      SeedStat st;
      st.seed = seed;
      st.values["ks"] = ks;
      st.values["n_ks"] = n * ks;
      cell.per_seed[si] = st;
    });
    for (const char* key : {"ks", "n_ks"}) {
      auto agg = aggregate(cell.per_seed, key);
      cell.aggregates.insert(agg.begin(), agg.end());
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_median.push_back(std::log(cell.aggregates.at("n_ks_median")));
    rep.cells.push_back(std::move(cell));
  }

  const auto widest = std::max_element(
      rep.cells.begin(), rep.cells.end(),
      [](const CellStats& x, const CellStats& y) { return x.n < y.n; });
  const double gate_threshold =
      cfg.ks_log_constant * std::log(static_cast<double>(widest->n));
  rep.gates.push_back({"ks_p90_le_5logN", widest->aggregates.at("n_ks_p90"), gate_threshold,
                       widest->aggregates.at("n_ks_p90") <= gate_threshold});
  if (rep.cells.size() >= 2) rep.fits["n_ks_slope"] = fit_slope(log_n, log_median);
  rep.pass = std::all_of(rep.gates.begin(), rep.gates.end(),
                         [](const GateResult& g) { return g.pass; });
  return rep;
}

}  // namespace freeconv
