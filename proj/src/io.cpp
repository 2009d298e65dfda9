#include "freeconv/io.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "freeconv/errors.hpp"

namespace freeconv::io {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw argument_error("malformed JSON");
  return j;
}

std::string csv_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

SpectralMeasure measure_from_json(const std::string& text) {
  const json j = parse(text);
  if (!j.contains("family")) throw argument_error("measure spec: missing 'family'");
  const std::string family = j.at("family").get<std::string>();
  try {
    if (family == "atomic") {
      std::vector<Atom> atoms;
      for (const auto& row : j.at("atoms"))
        atoms.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
      return SpectralMeasure::atomic(std::move(atoms));
    }
    if (family == "power_law") {
      const auto& s = j.at("support");
      return SpectralMeasure::power_law(s.at(0).get<double>(), s.at(1).get<double>(),
                                        j.at("t_minus").get<double>(),
                                        j.at("t_plus").get<double>());
    }
    if (family == "semicircle")
      return SpectralMeasure::semicircle(j.at("variance").get<double>());
    if (family == "uniform" || family == "arcsine") {
      const auto& s = j.at("support");
      return family == "uniform"
                 ? SpectralMeasure::uniform(s.at(0).get<double>(), s.at(1).get<double>())
                 : SpectralMeasure::arcsine(s.at(0).get<double>(), s.at(1).get<double>());
    }
    if (family == "two_atoms") {
      const auto& locs = j.at("locations");
      return SpectralMeasure::two_atoms(locs.at(0).get<double>(), locs.at(1).get<double>(),
                                        j.value("w1", 0.5));
    }
    if (family == "point_mass")
      return SpectralMeasure::point_mass(j.at("location").get<double>());
  } catch (const json::exception& e) {
    throw argument_error(std::string("measure spec: ") + e.what());
  }
  throw argument_error("measure spec: unknown family '" + family + "'");
}

std::string measure_to_json(const SpectralMeasure& mu) {
  json j;
  if (mu.kind() == MeasureKind::atomic) {
    j["family"] = "atomic";
    json atoms = json::array();
    for (const auto& a : mu.atoms()) atoms.push_back({a.location, a.weight});
    j["atoms"] = atoms;
  } else {
    j["family"] = "power_law";
    j["support"] = {mu.inf_support(), mu.sup_support()};
    j["t_minus"] = mu.t_minus();
    j["t_plus"] = mu.t_plus();
  }
  return j.dump(2);
}

SpectralMeasure measure_from_file(const std::string& path) {
  return measure_from_json(read_text_file(path));
}

std::string edge_report_to_json(const EdgeReport& rep) {
  json j;
  j["E_minus"] = rep.E_minus;
  j["E_plus"] = rep.E_plus;
  j["omega1_minus"] = rep.omega1_minus;
  j["omega2_minus"] = rep.omega2_minus;
  j["k0_gap1"] = rep.k0_gap1;
  j["k0_gap2"] = rep.k0_gap2;
  j["bracket"] = {rep.bracket_lo, rep.bracket_hi};
  j["edge_equation_residual"] = rep.edge_equation_residual;
  j["degenerate_point_mass"] = rep.degenerate_point_mass;
  j["monotonicity_warning"] = rep.monotonicity_warning;
  j["has_expansion"] = rep.has_expansion;
  if (rep.has_expansion) {
    j["zpp"] = rep.zpp;
    j["sqrt_coefficient"] = rep.sqrt_coefficient;
    j["fit_exponent"] = rep.fit_exponent;
    j["density_coefficient"] = rep.density_coefficient;
    j["coefficient_form"] = rep.coefficient_form;
  }
  return j.dump(2);
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["mu1"] = json::parse(cfg.mu1_spec);
  j["mu2"] = json::parse(cfg.mu2_spec);
  j["n_values"] = cfg.n_values;
  j["seeds"] = cfg.seeds;
  j["field"] = cfg.field == MatrixField::unitary ? "unitary" : "orthogonal";
  j["gamma"] = cfg.gamma;
  j["eta_max"] = cfg.eta_max;
  j["tau"] = cfg.tau;
  j["epsilon_slack"] = cfg.epsilon_slack;
  j["rigidity_fraction"] = cfg.rigidity_fraction;
  j["kappa_norm"] = cfg.kappa_norm();
  j["thresholds"] = {{"rigidity_p90_max", cfg.rigidity_p90_max},
                     {"rigidity_halving_rel_tol", cfg.rigidity_halving_rel_tol},
                     {"local_law_bulk_p90_max", cfg.local_law_bulk_p90_max},
                     {"local_law_outside_p90_max", cfg.local_law_outside_p90_max},
                     {"edge_fluct_p95_max", cfg.edge_fluct_p95_max},
                     {"edge_fluct_slope_tol", cfg.edge_fluct_slope_tol},
                     {"ks_log_constant", cfg.ks_log_constant}};
  j["solver"] = {{"tolerance", cfg.solver.tolerance},
                 {"max_iterations", cfg.solver.max_iterations},
                 {"eta_ladder_floor", cfg.solver.eta_ladder_floor}};
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const json j = parse(text);
  ExperimentConfig cfg;
  try {
    if (j.contains("mu1")) {
      cfg.mu1_spec = j.at("mu1").dump();
      cfg.mu1 = measure_from_json(cfg.mu1_spec);
    }
    if (j.contains("mu2")) {
      cfg.mu2_spec = j.at("mu2").dump();
      cfg.mu2 = measure_from_json(cfg.mu2_spec);
    }
    if (j.contains("n_values")) cfg.n_values = j.at("n_values").get<std::vector<int>>();
    if (j.contains("seeds"))
      cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("field"))
      cfg.field = j.at("field").get<std::string>() == "orthogonal"
                      ? MatrixField::orthogonal
                      : MatrixField::unitary;
    cfg.gamma = j.value("gamma", cfg.gamma);
    cfg.eta_max = j.value("eta_max", cfg.eta_max);
    cfg.tau = j.value("tau", cfg.tau);
    cfg.epsilon_slack = j.value("epsilon_slack", cfg.epsilon_slack);
    cfg.rigidity_fraction = j.value("rigidity_fraction", cfg.rigidity_fraction);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      cfg.rigidity_p90_max = t.value("rigidity_p90_max", cfg.rigidity_p90_max);
      cfg.rigidity_halving_rel_tol =
          t.value("rigidity_halving_rel_tol", cfg.rigidity_halving_rel_tol);
      cfg.local_law_bulk_p90_max =
          t.value("local_law_bulk_p90_max", cfg.local_law_bulk_p90_max);
      cfg.local_law_outside_p90_max =
          t.value("local_law_outside_p90_max", cfg.local_law_outside_p90_max);
      cfg.edge_fluct_p95_max = t.value("edge_fluct_p95_max", cfg.edge_fluct_p95_max);
      cfg.edge_fluct_slope_tol = t.value("edge_fluct_slope_tol", cfg.edge_fluct_slope_tol);
      cfg.ks_log_constant = t.value("ks_log_constant", cfg.ks_log_constant);
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      cfg.solver.tolerance = s.value("tolerance", cfg.solver.tolerance);
      cfg.solver.max_iterations = s.value("max_iterations", cfg.solver.max_iterations);
      cfg.solver.eta_ladder_floor =
          s.value("eta_ladder_floor", cfg.solver.eta_ladder_floor);
    }
  } catch (const json::exception& e) {
    throw argument_error(std::string("experiment config: ") + e.what());
  }
  return cfg;
}

std::string experiment_report_to_json(const ExperimentReport& rep,
                                      const std::string& config_json,
                                      const std::string& config_hash) {
  json j;
  j["experiment"] = rep.experiment;
  j["config"] = json::parse(config_json);
  j["config_hash"] = config_hash;
  json cells = json::array();
  for (const auto& cell : rep.cells) {
    json c;
    c["n"] = cell.n;
    json per_seed = json::array();
    for (const auto& st : cell.per_seed) {
      json s;
      s["seed"] = st.seed;
      for (const auto& [k, v] : st.values) s[k] = v;
      per_seed.push_back(s);
    }
    c["per_seed"] = per_seed;
    c["aggregates"] = cell.aggregates;
    cells.push_back(c);
  }
  j["cells"] = cells;
  j["fits"] = rep.fits;
  json gates = json::array();
  for (const auto& g : rep.gates)
    gates.push_back({{"name", g.name},
                     {"value", g.value},
                     {"threshold", g.threshold},
                     {"pass", g.pass}});
  j["gates"] = gates;
  j["pass"] = rep.pass;
  return j.dump(2);
}

void write_density_csv(const std::string& path, const DensityTable& table) {
  std::ostringstream os;
  os << "x,rho,im_m,re_m,resolved\n";
  for (std::size_t i = 0; i < table.x.size(); ++i)
    os << csv_double(table.x[i]) << ',' << csv_double(table.rho[i]) << ','
       << csv_double(table.im_m[i]) << ',' << csv_double(table.re_m[i]) << ','
       << (table.resolved[i] ? 1 : 0) << '\n';
  write_text_file(path, os.str());
}

void write_quantile_csv(const std::string& path, const QuantileTable& table) {
  std::ostringstream os;
  os << "j,gamma_j\n";
  for (std::size_t i = 0; i < table.gamma.size(); ++i)
    os << (i + 1) << ',' << csv_double(table.gamma[i]) << '\n';
  write_text_file(path, os.str());
}

void write_probe_csv(const std::string& path, const ProbeTable& table) {
  std::ostringstream os;
  os << "E,eta,kappa,re_m,im_m,abs_S,abs_omega1_prime,abs_omega2_prime\n";
  for (const auto& r : table.rows) {
    if (!r.ok) continue;
    os << csv_double(r.E) << ',' << csv_double(r.eta) << ',' << csv_double(r.kappa) << ','
       << csv_double(r.re_m) << ',' << csv_double(r.im_m) << ',' << csv_double(r.abs_S)
       << ',' << csv_double(r.abs_omega1_prime) << ',' << csv_double(r.abs_omega2_prime)
       << '\n';
  }
  write_text_file(path, os.str());
}

void write_eigenvalue_csv(const std::string& path, const std::vector<double>& lambda) {
  std::ostringstream os;
  os << "rank,lambda\n";
  for (std::size_t i = 0; i < lambda.size(); ++i)
    os << (i + 1) << ',' << csv_double(lambda[i]) << '\n';
  write_text_file(path, os.str());
}

void write_experiment_csv(const std::string& path, const ExperimentReport& rep) {
  std::ostringstream os;
  // Union of per-seed keys, sorted, for a stable header.
  std::set<std::string> keys;
  for (const auto& cell : rep.cells)
    for (const auto& st : cell.per_seed)
      for (const auto& [k, v] : st.values) keys.insert(k);
  os << "n,seed";
  for (const auto& k : keys) os << ',' << k;
  os << '\n';
  for (const auto& cell : rep.cells)
    for (const auto& st : cell.per_seed) {
      os << cell.n << ',' << st.seed;
      for (const auto& k : keys) {
        auto it = st.values.find(k);
        os << ',';
        if (it != st.values.end()) os << csv_double(it->second);
      }
      os << '\n';
    }
  write_text_file(path, os.str());
}

std::string fluctuation_report_to_json(const FluctuationReport& rep) {
  json j;
  auto put_complex = [&](const char* name, Complex v) {
    j[name] = {v.real(), v.imag()};
  };
  j["n"] = rep.n;
  put_complex("z", rep.z);
  put_complex("z_centered", rep.z_centered);
  put_complex("m_H", rep.m_h);
  put_complex("tr_BtG", rep.tr_btg);
  put_complex("tr_AG", rep.tr_ag);
  put_complex("Upsilon", rep.upsilon);
  put_complex("omega_A_c", rep.omega_a_c);
  put_complex("omega_B_c", rep.omega_b_c);
  put_complex("Phi1_c", rep.phi1_c);
  put_complex("Phi2_c", rep.phi2_c);
  put_complex("Z1", rep.z1);
  put_complex("Z2", rep.z2);
  j["Psi"] = rep.psi;
  j["Pi"] = rep.pi;
  j["has_pair"] = rep.has_pair;
  if (rep.has_pair) {
    put_complex("Lambda_A", rep.lambda_a);
    put_complex("Lambda_B", rep.lambda_b);
    j["Lambda_d"] = rep.lambda_d;
  }
  json residuals;
  residuals["k_identity"] = rep.res_k_identity;
  residuals["q_sum"] = rep.res_q_sum;
  residuals["upsilon"] = rep.res_upsilon;
  residuals["phi1_weighted"] = rep.res_phi1_weighted;
  residuals["z1_weighted"] = rep.res_z1_weighted;
  residuals["z2_weighted"] = rep.res_z2_weighted;
  residuals["sum_rule"] = rep.res_sum_rule;
  residuals["btg_identity"] = rep.res_btg;
  j["residuals"] = residuals;
  auto put_array = [&](const char* name, const Eigen::VectorXcd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back({v(i).real(), v(i).imag()});
    j[name] = arr;
  };
  put_array("S", rep.S);
  put_array("S_ring", rep.S_ring);
  put_array("T", rep.T);
  put_array("T_ring", rep.T_ring);
  put_array("Q", rep.Q);
  put_array("P", rep.P);
  put_array("K", rep.K);
  put_array("Q_swapped", rep.Qc);
  put_array("d1", rep.d1);
  put_array("d2", rep.d2);
  json pi_i = json::array();
  for (int i = 0; i < rep.pi_i.size(); ++i) pi_i.push_back(rep.pi_i(i));
  j["Pi_i"] = pi_i;
  return j.dump(2);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string file_hash(const std::string& path) { return fnv1a_hex(read_text_file(path)); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw argument_error("cannot open for writing: " + path);
  f << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw argument_error("cannot open: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string manifest_json(const std::string& command, const std::string& resolved_config,
                          const std::vector<std::string>& input_files,
                          const std::vector<std::uint64_t>& seeds,
                          const std::vector<std::string>& outputs, double elapsed_seconds) {
  json j;
  j["command"] = command;
  j["config"] = json::parse(resolved_config, nullptr, false).is_discarded()
                    ? json(resolved_config)
                    : json::parse(resolved_config);
  json inputs = json::array();
  for (const auto& p : input_files)
    inputs.push_back({{"path", p}, {"fnv1a", file_hash(p)}});
  j["inputs"] = inputs;
  j["seeds"] = seeds;
  j["outputs"] = outputs;
  j["elapsed_seconds"] = elapsed_seconds;
  j["tool_version"] = FREECONV_VERSION;
  return j.dump(2);
}

}  // namespace freeconv::io
