#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freeconv/density.hpp"
#include "freeconv/edge.hpp"
#include "freeconv/experiments.hpp"
#include "freeconv/measure.hpp"

namespace freeconv::io {

// Measure spec JSON:
//   {"family":"power_law","support":[a,b],"t_minus":t,"t_plus":t}
//   {"family":"atomic","atoms":[[x,w],...]}
//   {"family":"semicircle","variance":v}
//   {"family":"uniform"|"arcsine","support":[a,b]}
//   {"family":"two_atoms","locations":[x1,x2],"w1":w}
//   {"family":"point_mass","location":a}
// Atomic round-trips are bit exact (shortest round-trip double printing).
SpectralMeasure measure_from_json(const std::string& text);
std::string measure_to_json(const SpectralMeasure& mu);
SpectralMeasure measure_from_file(const std::string& path);

std::string edge_report_to_json(const EdgeReport& rep);
std::string experiment_report_to_json(const ExperimentReport& rep,
                                      const std::string& config_json,
                                      const std::string& config_hash);
std::string experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const std::string& text);

void write_density_csv(const std::string& path, const DensityTable& table);
void write_quantile_csv(const std::string& path, const QuantileTable& table);
void write_probe_csv(const std::string& path, const ProbeTable& table);
void write_eigenvalue_csv(const std::string& path, const std::vector<double>& lambda);
void write_experiment_csv(const std::string& path, const ExperimentReport& rep);

std::string fluctuation_report_to_json(const FluctuationReport& rep);

// FNV-1a over bytes, hex-encoded; used for config and input hashes.
std::string fnv1a_hex(const std::string& bytes);
std::string file_hash(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Manifest emitted alongside every command output.
std::string manifest_json(const std::string& command, const std::string& resolved_config,
                          const std::vector<std::string>& input_files,
                          const std::vector<std::uint64_t>& seeds,
                          const std::vector<std::string>& outputs, double elapsed_seconds);

}  // namespace freeconv::io
